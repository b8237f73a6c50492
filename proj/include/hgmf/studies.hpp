#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgmf/hypergraph.hpp"
#include "hgmf/hypergraphon.hpp"
#include "hgmf/kernels.hpp"
#include "hgmf/measures.hpp"

namespace hgmf {

// Flat experiment description. Text form is one `key = value` per line, `#` starts a comment,
// lists are comma separated. See README for the key list.
struct ExperimentConfig {
    std::string hypergraph = "homogeneous:0.1";  // homogeneous:<theta> | balanced | all-to-all | zero | file:<path>
    int max_rank = 3;
    std::vector<int> orders = {2};  // interaction orders that carry a kernel
    std::string kernel = "linear";  // linear | kuramoto | opinion:<lambda> | skardal

    int nx = 64;
    int nxi = 400;
    double x_min = -0.1, x_max = 1.1;
    double init_lo = 0.0, init_hi = 1.0;  // uniform initial law on [init_lo, init_hi]

    double dt = 0.01;
    double t_end = 1.0;
    std::vector<double> snapshots = {0.0, 0.25, 0.5, 0.75, 1.0};

    std::vector<int> n_list = {50, 100, 200, 400};
    int replicas = 8;
    std::uint64_t seed = 1;

    std::string alpha = "geometric:0.5";
    double p = 1.0;
    double offset = 0.0;   // pointwise discretization grid offset
    int refinement = 16;   // quadrature nodes per axis
    int cut_restarts = 8;  // heuristic cut-norm restarts
    int cut_ref = 0;       // reference partition for cut distances (0: lcm of n_list when small)

    int fig_n = 0;                    // figures: agent count (0: family preset)
    std::vector<int> fig_compare;     // figures: final-time comparison sizes (empty: preset)
    std::vector<double> fig_times;    // figures: snapshot times (empty: preset)

    std::string out = "out";
    int threads = 0;

    // Throws ConfigError on inconsistent values.
    void check() const;
    // Resolved key = value lines in a fixed order; `out` and `threads` are left out because they never change results.
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a 64 of canonical()
    std::string hash_hex() const;
};

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

URHypergraphon limit_hypergraphon(const ExperimentConfig& cfg);
// Finite hypergraph on n agents for the configured family (max_rank clipped to n), restricted to cfg.orders.
Hypergraph finite_hypergraph(const ExperimentConfig& cfg, int n);
KernelFamily kernel_family(const ExperimentConfig& cfg);
// Kernels whose order exists in h.
KernelFamily kernels_for(const KernelFamily& k, const Hypergraph& h);

// "# config <hash> key=value;key=value;..."
std::string csv_header(const ExperimentConfig& cfg);
std::string format_double(double v);

struct ConvergenceRow {
    int n = 0;
    int replica = 0;
    double t = 0.0;
    double distance = 0.0;  // d_{p,nu}(empirical, reference)
    double marginal = 0.0;  // d_BL of the label marginals
};

struct ConvergenceSummary {
    int n = 0;
    double mean_sup = 0.0;  // replica mean of sup_t distance
    double se_sup = 0.0;    // standard error of that mean
    double mean_marginal_sup = 0.0;
    double eps_p = 0.0, c_inf = 0.0, c_p = 0.0;
};

struct ConvergenceResult {
    std::vector<double> times;
    std::vector<ConvergenceRow> rows;  // ordered by (n, replica, t)
    std::vector<ConvergenceSummary> summary;
};

ConvergenceResult run_convergence_study(const ExperimentConfig& cfg);
std::string convergence_rows_csv(const ExperimentConfig& cfg, const ConvergenceResult& r);
std::string convergence_summary_csv(const ExperimentConfig& cfg, const ConvergenceResult& r);
std::string convergence_svg(const ConvergenceResult& r);

struct CutRow {
    std::string scheme;  // "pointwise" or "l1"
    int order = 1;
    int n = 0;
    double l1 = 0.0;
    double bound = 0.0;  // NaN when no bound applies
    double cut = 0.0;    // NaN when not computed
    std::string cut_mode;
};

struct SlopeFit {
    std::string scheme;
    int order = 1;
    double slope = 0.0;
};

struct CutStudyResult {
    std::vector<CutRow> rows;
    std::vector<SlopeFit> fits;  // log-log slope of l1 against n
};

CutStudyResult run_cutdist_study(const ExperimentConfig& cfg);
std::string cutdist_csv(const ExperimentConfig& cfg, const CutStudyResult& r);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Agent counts on the 10 x 10 grid of 0.1 squares over (label, state) in [0,1]^2; states outside are
// clamped into the border squares, so counts always sum to N. Index [label_bin * 10 + state_bin].
std::vector<int> bin_agents(const std::vector<double>& x);

struct FigureReport {
    std::vector<std::string> files;
    std::vector<std::vector<int>> bins;  // one per binned frame
};

// Writes the figure set for the configured family into cfg.out.
FigureReport reproduce_figures(const ExperimentConfig& cfg);

// Minimal SVG writers.
std::string svg_heatmap(const std::vector<double>& v, int rows, int cols, const std::string& title,
                        const std::vector<std::pair<double, double>>& dots = {}, double y_lo = 0.0, double y_hi = 1.0);
void write_text(const std::string& path, const std::string& text);

}  // namespace hgmf
