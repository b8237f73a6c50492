#pragma once

#include <cstdint>
#include <vector>

#include "hgmf/hypergraph.hpp"
#include "hgmf/kernels.hpp"
#include "hgmf/measures.hpp"

namespace hgmf {

// N agents in R^d, row-major: agent i occupies x[i*d .. i*d+d).
struct ParticleState {
    int dim = 1;
    std::vector<double> x;
    double time = 0.0;

    ParticleState() = default;
    ParticleState(int n, int d = 1) : dim(d), x(static_cast<std::size_t>(n) * d, 0.0) {}
    ParticleState(std::vector<double> v, int d = 1, double t = 0.0) : dim(d), x(std::move(v)), time(t) {}
    ParticleState(std::initializer_list<double> v) : x(v) {}  // scalar states
    int size() const { return static_cast<int>(x.size()) / dim; }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ParticleState> snapshots;
};

enum class Method { RK4, Euler };

struct IntegrateOptions {
    Method method = Method::RK4;
    std::vector<double> drift;           // optional per-agent constant velocity (N*d)
    std::vector<double> snapshot_times;  // empty: every step
    int threads = 0;                     // 0: runtime default
};

// Per-order sparse iteration plan: for each agent, the stored entries it appears in.
class ForcePlan {
public:
    ForcePlan(const Hypergraph& h, const KernelFamily& k, int dim);
    // out[i*d..] = sum_l sum_j w_{i j} K_l(X_i, X_j1..X_jl)
    void apply(const std::vector<double>& x, std::vector<double>& out, int threads = 0) const;

private:
    struct Level {
        const AdjacencyTensor* tensor;
        const InteractionKernel* kernel;
        std::vector<std::size_t> offsets;  // CSR over agents
        std::vector<std::size_t> entries;
        std::vector<int> heads;    // order heads per entry slot, owner removed
        std::vector<double> mult;  // orderings represented (0: enumerate them)
    };
    int n_, dim_;
    std::vector<Level> levels_;
};

std::vector<double> force_particles(const Hypergraph& h, const KernelFamily& k, const ParticleState& x);

Trajectory integrate(const Hypergraph& h, const KernelFamily& k, const ParticleState& x0, double T, double dt,
                     const IntegrateOptions& opt = {});

// Fiber i carries a unit atom at X_i (d = 1).
FiberedAtoms empirical_fibered(const ParticleState& x);

struct McKeanConstants {
    double c_inf = 0.0;  // max_i sum_l L_l sum_j w
    double c_p = 0.0;
    double eps_p = 0.0;
};
McKeanConstants mckean_error_constants(const Hypergraph& h, const KernelFamily& k, double p);

// Uniform value in [0,1) determined only by (seed, stream, index).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// i.i.d. uniform initial states on [lo, hi]^d for replica `replica`.
ParticleState sample_uniform(int n, int d, double lo, double hi, std::uint64_t seed, std::uint64_t replica);

}  // namespace hgmf
