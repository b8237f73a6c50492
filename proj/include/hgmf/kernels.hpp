#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hgmf {

// One rank-1 piece coeff * a(x) * prod_k b_k(x_k) of a scalar (d=1) kernel.
struct SeparableTerm {
    double coeff = 1.0;
    std::function<double(double)> self;
    std::vector<std::function<double(double)>> heads;
};

using KernelFn = std::function<void(std::span<const double> x, std::span<const double> heads, std::span<double> out)>;

struct InteractionKernel {
    int order = 1;
    int dim = 0;  // 0: works for any state dimension
    std::string name;
    KernelFn fn;
    double bound = 0.0;      // B_l on the declared box
    double lipschitz = 0.0;  // L_l on the declared box
    bool symmetric_head = true;
    double box_lo = 0.0, box_hi = 1.0;
    std::vector<SeparableTerm> separable;  // empty: no decomposition

    double bl() const { return bound > lipschitz ? bound : lipschitz; }
    bool has_separable() const { return !separable.empty(); }

    // Scalar convenience for d = 1.
    double operator()(double x, std::span<const double> heads) const;
    double operator()(double x, std::initializer_list<double> heads) const {
        std::vector<double> h(heads);
        return (*this)(x, std::span<const double>(h));
    }
    // Value of the separable decomposition (d = 1).
    double eval_separable(double x, std::span<const double> heads) const;
};

class KernelFamily {
public:
    KernelFamily() = default;
    KernelFamily(std::initializer_list<InteractionKernel> ks);

    void add(InteractionKernel k);
    const InteractionKernel* find(int order) const;
    std::vector<int> orders() const;
    const std::vector<InteractionKernel>& kernels() const { return kernels_; }
    bool empty() const { return kernels_.empty(); }
    int max_order() const;

private:
    std::vector<InteractionKernel> kernels_;
};

// mean(x_k) - x on [a, b]: B = b - a, L = 2.
InteractionKernel linear_mean_kernel(int order, double a = 0.0, double b = 1.0);
// sin(x_1 + ... + x_l - l x): B = 1, L = l.
InteractionKernel kuramoto_kernel(int order);
// {sin(x1-x), sin(2x1-x2-x), sin(x1+x2-x3-x)}.
KernelFamily skardal_kernels();
// exp(lambda diam(x_1..x_l)) (mean(x_k) - x) on [a, b].
InteractionKernel opinion_diam_kernel(int order, double lambda, double a = 0.0, double b = 1.0);
// sin(c_0 x + sum_k c_k x_k) with its 2^l-term separable expansion.
InteractionKernel phase_kernel(const std::vector<double>& coeffs, std::string name);

struct Assumption1Report {
    double sum_bound = 0.0;  // sum_l sqrt(l!) B_l / eta^l
    double sum_lip = 0.0;    // sum_l l L_l
    struct Issue {
        int order;
        std::string kind;  // "bound", "lipschitz", "symmetry"
        std::string detail;
    };
    std::vector<Issue> violations;
    std::vector<int> asymmetric_orders;  // sampled head permutation changed the value
    bool ok() const { return violations.empty(); }
};

Assumption1Report check_assumption1(const KernelFamily& family, double eta, int samples, std::uint64_t seed);

// Max |separable - direct| over random tuples in the kernel box.
double separable_error(const InteractionKernel& k, int samples, std::uint64_t seed);

}  // namespace hgmf
