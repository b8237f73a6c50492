#pragma once

#include <span>
#include <vector>

namespace hgmf {

// Finite sum of weighted point masses on the real line.
struct DiscreteMeasure {
    std::vector<double> pos;
    std::vector<double> mass;

    DiscreteMeasure() = default;
    DiscreteMeasure(std::vector<double> p, std::vector<double> m);
    static DiscreteMeasure dirac(double x) { return DiscreteMeasure({x}, {1.0}); }

    void add(double x, double m);
    std::size_t size() const { return pos.size(); }
    bool empty() const { return pos.empty(); }
    double total() const;
    double moment(int k) const;
};

// One measure per fiber of the uniform label grid; fiber f covers [f/n, (f+1)/n).
struct FiberedAtoms {
    std::vector<DiscreteMeasure> fibers;

    int size() const { return static_cast<int>(fibers.size()); }
    // Fiber containing the label xi.
    const DiscreteMeasure& at_label(double xi) const;
    // Label marginal integrated out: (1/n) sum_f fibers[f].
    DiscreteMeasure marginal() const;
};

// Cell-averaged density rho[fiber][cell] on [x_min, x_max] x [0, 1].
struct FiberedDensity {
    int nx = 0;
    int nxi = 0;
    double x_min = 0.0;
    double x_max = 1.0;
    std::vector<double> rho;

    FiberedDensity() = default;
    FiberedDensity(int nx, int nxi, double x_min, double x_max);

    double dx() const { return (x_max - x_min) / nx; }
    double x_center(int c) const { return x_min + (c + 0.5) * dx(); }
    double x_face(int c) const { return x_min + c * dx(); }
    double xi_center(int f) const { return (f + 0.5) / nxi; }

    std::span<double> fiber(int f) { return {rho.data() + static_cast<std::size_t>(f) * nx, static_cast<std::size_t>(nx)}; }
    std::span<const double> fiber(int f) const {
        return {rho.data() + static_cast<std::size_t>(f) * nx, static_cast<std::size_t>(nx)};
    }

    double mass(int f) const;
    double mean(int f) const;
    double variance(int f) const;
    double moment(int f, int k) const;
    double min_value() const;
};

FiberedAtoms to_atoms(const FiberedDensity& d);

}  // namespace hgmf
