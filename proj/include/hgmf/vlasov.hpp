#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hgmf/hypergraph.hpp"
#include "hgmf/hypergraphon.hpp"
#include "hgmf/kernels.hpp"
#include "hgmf/measures.hpp"

namespace hgmf {

// Hypergraphon levels sampled at fiber centres, kept as rows (i; j1..jl; value).
class FiberQuadrature {
public:
    struct Level {
        int order = 1;
        std::vector<std::size_t> row;  // CSR offsets over i (nxi + 1)
        std::vector<int> heads;        // l per entry
        std::vector<double> value;
    };

    FiberQuadrature(const URHypergraphon& w, int nxi, const std::vector<int>& orders, double budget = 2e8);

    int nxi() const { return nxi_; }
    double dxi() const { return 1.0 / nxi_; }
    const Level* level(int order) const;
    const std::vector<Level>& levels() const { return levels_; }
    // ||w_l(xi_i, .)||_{L^1} by the midpoint rule.
    double row_l1(int order, int i) const;

private:
    int nxi_;
    std::vector<Level> levels_;
};

struct ForceConstants {
    double b_f = 0.0;  // sup_xi sum_l B_l ||w_l(xi,.)||_1
    double l_f = 0.0;  // sup_xi sum_l L_l ||w_l(xi,.)||_1
    double c_p = 0.0;  // || sum_l BL_l sum_k ||w_l||_{L^q_k L^1_rest} ||_{L^p}
};

struct ForceField {
    int nx = 0, nxi = 0;
    std::vector<double> centers;  // nxi * nx
    std::vector<double> faces;    // nxi * (nx + 1)
    double max_abs() const;
};

struct ForceOptions {
    double generic_budget = 4e9;  // x-grid work allowed for non-separable kernels of order >= 3
    bool verify_separable = true;
    int threads = 0;
};

class MeanFieldForce {
public:
    MeanFieldForce(const URHypergraphon& w, const KernelFamily& k, int nxi, ForceOptions opt = {});

    // out[f * xs.size() + c] = F(xs[c], xi_f).
    void evaluate(const FiberedDensity& rho, std::span<const double> xs, std::vector<double>& out) const;
    ForceField operator()(const FiberedDensity& rho) const;
    // Face velocities only (what the transport step needs).
    std::vector<double> faces(const FiberedDensity& rho) const;

    ForceConstants constants(double p) const;
    const FiberQuadrature& quadrature() const { return quad_; }
    bool uses_fast_path(int order) const;

private:
    void evaluate_separable(const InteractionKernel& k, const FiberQuadrature::Level& lv, const FiberedDensity& rho,
                            std::span<const double> xs, std::vector<double>& out) const;
    void evaluate_generic(const InteractionKernel& k, const FiberQuadrature::Level& lv, const FiberedDensity& rho,
                          std::span<const double> xs, std::vector<double>& out) const;

    KernelFamily kernels_;
    FiberQuadrature quad_;
    ForceOptions opt_;
};

ForceField mean_field_force(const URHypergraphon& w, const FiberedDensity& rho, const KernelFamily& k);

// Largest per-cell outflow speed max(F_right, 0) + max(-F_left, 0) over interior faces.
double outflow_speed(const FiberedDensity& rho, std::span<const double> faces);

// Conservative first-order upwind step with zero-flux ends. faces: nxi * (nx + 1).
FiberedDensity step_transport(const FiberedDensity& rho, std::span<const double> faces, double dt,
                              double cfl = 0.9);

struct SolveOptions {
    double cfl = 0.9;
    bool auto_dt = true;                 // shrink dt to satisfy the CFL bound
    std::vector<double> snapshot_times;  // default {0, T}
    ForceOptions force;
    std::function<void(double t, const FiberedDensity&)> on_step;  // optional observer
};

struct DensitySeries {
    std::vector<double> times;
    std::vector<FiberedDensity> snapshots;
    long steps = 0;
};

DensitySeries solve(const URHypergraphon& w, const KernelFamily& k, const FiberedDensity& rho0, double T, double dt,
                    const SolveOptions& opt = {});

struct LabelField {
    int dim = 1;
    std::vector<double> x;  // nxi * dim
    double time = 0.0;
    int size() const { return static_cast<int>(x.size()) / dim; }
};

struct LabelSeries {
    std::vector<LabelField> snapshots;
};

LabelSeries solve_continuum(const URHypergraphon& w, const KernelFamily& k, const LabelField& x0, double T, double dt,
                            const std::vector<double>& snapshot_times = {});

// Densities laws[i] (nx cell values on [x_min, x_max]) become fiber i of the step system.
DensitySeries solve_coupled_pde(const Hypergraph& h, const KernelFamily& k, const std::vector<std::vector<double>>& laws,
                                double x_min, double x_max, double T, double dt, const SolveOptions& opt = {});

// Initial densities. Each fiber is normalised to unit mass.
FiberedDensity density_uniform(int nx, int nxi, double x_min, double x_max, double a, double b);
FiberedDensity density_from_function(int nx, int nxi, double x_min, double x_max,
                                     const std::function<double(double x, double xi)>& f, int sub = 8);
FiberedDensity density_gaussian(int nx, int nxi, double x_min, double x_max,
                                const std::function<double(double xi)>& mean, double sd);

std::string density_to_text(const FiberedDensity& d);
FiberedDensity density_from_text(const std::string& text);
void save_density(const FiberedDensity& d, const std::string& path);
FiberedDensity load_density(const std::string& path);

}  // namespace hgmf
