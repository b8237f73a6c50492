// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status 1 if any fails.
// All tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hgmf/hypergraph.hpp"
#include "hgmf/hypergraphon.hpp"
#include "hgmf/kernels.hpp"
#include "hgmf/metrics.hpp"
#include "hgmf/particles.hpp"
#include "hgmf/studies.hpp"
#include "hgmf/vlasov.hpp"

using namespace hgmf;

namespace {

// Fixed tolerances.
constexpr int kQuadNodes = 16;             // criterion 1, 2: nodes per axis
constexpr double kSlopeTarget = -1.0;      // criterion 2, 4
constexpr double kSlopeTol2 = 0.15;        // criterion 2
constexpr int kSandwichInstances = 200;    // criterion 3
constexpr double kSandwichSlack = 1e-12;   // criterion 3: round-off allowance
constexpr double kEpsClosedTol = 1e-9;     // criterion 4
constexpr double kSlopeTol4 = 0.1;         // criterion 4
constexpr double kHalfRatio = 0.5;         // criterion 5
constexpr double kSumTol = 1e-10;          // criterion 6
constexpr double kMassTol = 1e-12;         // criterion 6: per 1000 steps
constexpr double kTwoAgentTol = 1e-6;      // criterion 7
constexpr double kContinuumTol = 1e-4;     // criterion 7
constexpr double kFlowSlack = 1e-6;        // criterion 8
constexpr double kStabilityFactor = 1.05;  // criterion 9
constexpr double kVarianceRatio = 0.2;     // criterion 10

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Benchmark: homogeneous theta = 0.1, order 2 only, linear kernel.
constexpr double kTheta = 0.1;
const double kXmin = -0.1, kXmax = 1.1;

URHypergraphon benchmark_w() { return homogeneous_hypergraphon(kTheta, {2}); }
KernelFamily benchmark_k() { return KernelFamily{linear_mean_kernel(2, kXmin, kXmax)}; }

// ---------------------------------------------------------------- 1

Outcome criterion1() {
    Outcome o;
    double worst = 0.0;
    for (double theta : {0.1, 0.3}) {
        URHypergraphon w = homogeneous_hypergraphon(theta, {1, 2});
        for (int n : {10, 20, 40, 80}) {
            URHypergraphon wn = step_from_hypergraph(build_homogeneous(n, theta, 3));
            for (int l : {1, 2}) {
                double d = l1_level_distance(w, wn, l, kQuadNodes);
                double bound = 2.0 * l * (l + 1) / n;
                worst = std::max(worst, d / bound);
                if (d > bound) {
                    o.pass = false;
                    o.detail += " theta=" + fmt(theta) + " l=" + std::to_string(l) + " N=" + std::to_string(n) +
                                " L1=" + fmt(d) + ">" + fmt(bound);
                }
            }
        }
    }
    o.detail = "max L1/bound " + fmt(worst) + o.detail;
    return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
    Outcome o;
    URHypergraphon w = balanced_quadratic_hypergraphon({1, 2});
    const std::vector<int> ns = {10, 20, 40, 80};
    double worst = 0.0;
    for (int l : {1, 2}) {
        const double lip = *w.analytic_level(l)->lipschitz;  // |f'| <= 4
        std::vector<double> xs, ys;
        for (int n : ns) {
            URHypergraphon wn = step_from_hypergraph(discretize_pointwise(w, n, 0.5));
            double d = l1_level_distance(w, wn, l, kQuadNodes);
            double bound = std::sqrt(l + 1.0) * lip / n;
            worst = std::max(worst, d / bound);
            if (d > bound) o.pass = false;
            xs.push_back(n);
            ys.push_back(d);
        }
        double slope = loglog_slope(xs, ys);
        if (std::abs(slope - kSlopeTarget) > kSlopeTol2) o.pass = false;
        o.detail += " l=" + std::to_string(l) + " slope " + fmt(slope);
    }
    o.detail = "max L1/bound " + fmt(worst) + ";" + o.detail;
    return o;
}

// ---------------------------------------------------------------- 3

DenseLevel random_symmetric(int parts, int order, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseLevel d(parts, order);
    std::vector<int> c(order + 1, 0);
    // Fill sorted tuples, then copy to every permutation.
    std::function<void(int, int)> rec = [&](int pos, int from) {
        if (pos == order + 1) {
            double v = u(rng);
            std::vector<int> p = c;
            do d.at(p) = v;
            while (std::next_permutation(p.begin(), p.end()));
            return;
        }
        for (int i = from; i < parts; ++i) {
            c[pos] = i;
            rec(pos + 1, i);
        }
    };
    rec(0, 0);
    return d;
}

Outcome criterion3() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    int violations = 0, violations_wide = 0, lower_violations = 0;
    double max_ratio = 0.0;
    for (int k = 0; k < kSandwichInstances; ++k) {
        const int parts = 1 + static_cast<int>(rng() % 4);
        const int order = 1 + static_cast<int>(rng() % 2);
        DenseLevel diff = random_symmetric(parts, order, rng) - random_symmetric(parts, order, rng);
        const double cut = cut_norm_exact(diff);
        const double op = operator_norm_infty_to_1(diff);
        const double upper = std::pow(2.0, order);
        if (cut > op + kSandwichSlack) ++lower_violations;
        if (op > upper * cut + kSandwichSlack) ++violations;
        if (op > 2.0 * upper * cut + kSandwichSlack) ++violations_wide;
        if (cut > 0) max_ratio = std::max(max_ratio, op / cut);
    }
    o.pass = violations == 0 && lower_violations == 0;
    o.detail = std::to_string(lower_violations) + " lower and " + std::to_string(violations) + "/" +
               std::to_string(kSandwichInstances) + " upper (2^l) violations, max opnorm/cut " + fmt(max_ratio) +
               "; with 2^(l+1): " + std::to_string(violations_wide) + " violations";
    return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
    Outcome o;
    double worst = 0.0;
    for (int n : {2, 3, 10, 50, 100, 200}) {
        auto c = mckean_error_constants(build_all_to_all(n, 2), KernelFamily{linear_mean_kernel(1)}, 2.0);
        double exact = 2.0 * std::sqrt(n - 1.0) / n;
        worst = std::max(worst, std::abs(c.eps_p - exact));
    }
    if (worst > kEpsClosedTol) o.pass = false;
    std::vector<double> xs, ys;
    for (int n : {50, 100, 200, 400}) {
        Hypergraph h = build_homogeneous(n, kTheta, 3).restricted({2});
        auto c = mckean_error_constants(h, KernelFamily{linear_mean_kernel(2)}, 2.0);
        xs.push_back(n);
        ys.push_back(c.eps_p);
    }
    double slope = loglog_slope(xs, ys);
    if (std::abs(slope - kSlopeTarget) > kSlopeTol4) o.pass = false;
    o.detail = "all-to-all max |eps - closed form| " + fmt(worst) + "; homogeneous slope " + fmt(slope);
    return o;
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
    Outcome o;
    ExperimentConfig cfg;  // defaults are the benchmark sweep
    cfg.hypergraph = "homogeneous:0.1";
    cfg.orders = {2};
    cfg.kernel = "linear";
    cfg.p = 1.0;
    cfg.t_end = 1.0;
    cfg.snapshots = {0.0, 0.25, 0.5, 0.75, 1.0};
    cfg.n_list = {50, 100, 200, 400};
    cfg.replicas = 8;
    cfg.nx = 64;
    cfg.nxi = 400;
    auto r = run_convergence_study(cfg);
    bool decreasing = true, marg_decreasing = true;
    for (std::size_t k = 1; k < r.summary.size(); ++k) {
        decreasing = decreasing && r.summary[k].mean_sup < r.summary[k - 1].mean_sup;
        marg_decreasing = marg_decreasing && r.summary[k].mean_marginal_sup < r.summary[k - 1].mean_marginal_sup;
    }
    const double first = r.summary.front().mean_sup, last = r.summary.back().mean_sup;
    o.pass = decreasing && last < kHalfRatio * first;
    for (const auto& m : r.summary) o.detail += "N=" + std::to_string(m.n) + ":" + fmt(m.mean_sup) + "+-" + fmt(m.se_sup) + " ";
    o.detail += "| marginal d_BL diagnostic: ";
    for (const auto& m : r.summary) o.detail += fmt(m.mean_marginal_sup) + " ";
    o.detail += marg_decreasing && r.summary.back().mean_marginal_sup < kHalfRatio * r.summary.front().mean_marginal_sup
                    ? "(would pass)"
                    : "(would fail)";
    return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
    Outcome o;
    // Symbolic identity at N = 3: sum_i sum_{j1,j2} w K2(x_i, x_j1, x_j2) = 0 for every state.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    double brute = 0.0;
    auto k2 = linear_mean_kernel(2);
    for (int trial = 0; trial < 100; ++trial) {
        double x[3] = {u(rng), u(rng), u(rng)};
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    if (i != a && i != b && a != b) s += (1.0 / 9.0) * k2(x[i], {x[a], x[b]});
        brute = std::max(brute, std::abs(s));
    }
    if (brute > kSumTol) o.pass = false;

    Hypergraph h = build_all_to_all(50, 3).restricted({2});
    auto x0 = sample_uniform(50, 1, 0.0, 1.0, 11, 0);
    IntegrateOptions io;
    io.snapshot_times = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    auto tr = integrate(h, KernelFamily{linear_mean_kernel(2)}, x0, 10.0, 0.01, io);
    const double s0 = std::accumulate(x0.x.begin(), x0.x.end(), 0.0);
    double drift = 0.0;
    for (const auto& s : tr.snapshots) drift = std::max(drift, std::abs(std::accumulate(s.x.begin(), s.x.end(), 0.0) - s0));
    if (drift > kSumTol) o.pass = false;

    auto rho0 = density_uniform(100, 50, kXmin, kXmax, 0.0, 1.0);
    SolveOptions so;
    so.auto_dt = false;
    auto sol = solve(benchmark_w(), benchmark_k(), rho0, 10.0, 0.01, so);
    double mass = 0.0;
    for (int f = 0; f < rho0.nxi; ++f) mass = std::max(mass, std::abs(sol.snapshots.back().mass(f) - rho0.mass(f)));
    const double per_k = mass / (sol.steps / 1000.0);
    if (per_k > kMassTol) o.pass = false;
    o.detail = "N=3 identity " + fmt(brute) + "; sum drift " + fmt(drift) + "; mass drift per 1000 steps " + fmt(per_k) +
               " (" + std::to_string(sol.steps) + " steps)";
    return o;
}

// ---------------------------------------------------------------- 7

Outcome criterion7() {
    Outcome o;
    auto tr = integrate(build_all_to_all(2, 2), KernelFamily{linear_mean_kernel(1)}, ParticleState{0.0, 1.0}, 1.0, 0.01);
    const double e1 = std::abs(tr.snapshots.back().x[0] - 0.5 * (1.0 - std::exp(-1.0)));
    if (e1 > kTwoAgentTol) o.pass = false;

    const int n = 64;
    LabelField x0;
    for (int f = 0; f < n; ++f) x0.x.push_back((f + 0.5) / n);
    std::vector<double> times = {0.25, 0.5, 0.75, 1.0};
    auto s = solve_continuum(constant_hypergraphon(1.0, {1}), KernelFamily{linear_mean_kernel(1)}, x0, 1.0, 0.01, times);
    double e2 = 0.0;
    for (const auto& snap : s.snapshots)
        for (int f = 0; f < n; ++f) {
            double xi = (f + 0.5) / n;
            e2 = std::max(e2, std::abs(snap.x[f] - (0.5 + (xi - 0.5) * std::exp(-snap.time))));
        }
    if (e2 > kContinuumTol) o.pass = false;
    o.detail = "two-agent error " + fmt(e1) + "; continuum max error " + fmt(e2) + " on " + std::to_string(n) + " fibers";
    return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion8() {
    Outcome o;
    const int nx = 120, nxi = 100;
    MeanFieldForce mf(benchmark_w(), benchmark_k(), nxi);
    auto c = mf.constants(1.0);
    auto rho = density_uniform(nx, nxi, kXmin, kXmax, 0.0, 1.0);

    // March with the solver's own step, keeping the face field of every step.
    const double dt = 0.01, T = 2.0;
    const int steps = static_cast<int>(std::lround(T / dt));
    std::vector<std::vector<double>> fields;
    double max_force = 0.0;
    for (int k = 0; k < steps; ++k) {
        ForceField F = mf(rho);
        max_force = std::max(max_force, F.max_abs());
        fields.push_back(F.faces);
        rho = step_transport(rho, F.faces, dt);
    }
    max_force = std::max(max_force, mf(rho).max_abs());
    if (max_force > c.b_f) o.pass = false;

    // Characteristic pairs in the recorded field (linear interpolation between faces, Euler steps).
    const double h = (kXmax - kXmin) / nx;
    auto vel = [&](const std::vector<double>& faces, int f, double x) {
        double s = std::clamp((x - kXmin) / h, 0.0, static_cast<double>(nx));
        int c0 = std::min(static_cast<int>(s), nx - 1);
        double a = s - c0;
        const double* fc = faces.data() + static_cast<std::size_t>(f) * (nx + 1);
        return (1 - a) * fc[c0] + a * fc[c0 + 1];
    };
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = -1e300;
    for (int pair = 0; pair < 200; ++pair) {
        int f = static_cast<int>(rng() % nxi);
        double x = u(rng), y = u(rng);
        const double d0 = std::abs(x - y);
        for (int k = 0; k < steps; ++k) {
            x += dt * vel(fields[k], f, x);
            y += dt * vel(fields[k], f, y);
            double t = (k + 1) * dt;
            worst = std::max(worst, std::abs(x - y) - std::exp(c.l_f * t) * d0);
        }
    }
    if (worst > kFlowSlack) o.pass = false;
    o.detail = "max|F| " + fmt(max_force) + " <= B_F " + fmt(c.b_f) + "; max(|X-Y| - e^{L_F t}|x-y|) " + fmt(worst) +
               " (L_F " + fmt(c.l_f) + ")";
    return o;
}

// ---------------------------------------------------------------- 9

Outcome criterion9() {
    Outcome o;
    const int nx = 120, nxi = 100;
    const auto w = benchmark_w();
    const auto k = benchmark_k();
    auto c = MeanFieldForce(w, k, nxi).constants(1.0);
    auto base = density_uniform(nx, nxi, kXmin, kXmax, 0.0, 1.0);
    SolveOptions so;
    so.snapshot_times = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    auto ref = solve(w, k, base, 2.0, 0.01, so);
    double worst = 0.0;
    for (double target : {0.05, 0.1}) {
        // Shifted uniform law tuned so that the measured initial distance is close to target.
        double lo = 0.0, hi = 0.1;
        for (int it = 0; it < 60; ++it) {
            double s = 0.5 * (lo + hi);
            double d = d_p_nu(base, density_uniform(nx, nxi, kXmin, kXmax, s, 1.0 + s), 1.0);
            (d < target ? lo : hi) = s;
        }
        const double shift = 0.5 * (lo + hi);
        auto other = density_uniform(nx, nxi, kXmin, kXmax, shift, 1.0 + shift);
        const double d0 = d_p_nu(base, other, 1.0);
        auto sol = solve(w, k, other, 2.0, 0.01, so);
        for (std::size_t s = 0; s < so.snapshot_times.size(); ++s) {
            double t = so.snapshot_times[s];
            double d = d_p_nu(ref.snapshots[s], sol.snapshots[s], 1.0);
            double bound = std::exp((c.c_p + c.l_f) * t) * d0 * kStabilityFactor;
            worst = std::max(worst, d / bound);
            if (d > bound) o.pass = false;
        }
        o.detail += "delta0 " + fmt(d0) + " (shift " + fmt(shift) + "); ";
    }
    o.detail += "max distance/bound " + fmt(worst) + " (C_p " + fmt(c.c_p) + ", L_F " + fmt(c.l_f) + ")";
    return o;
}

// ---------------------------------------------------------------- 10

Outcome criterion10() {
    Outcome o;
    const int nx = 120, nxi = 100;
    auto rho0 = density_uniform(nx, nxi, kXmin, kXmax, 0.0, 1.0);
    SolveOptions so;
    so.snapshot_times = {0.0, 4.0, 8.0, 10.0};
    auto sol = solve(benchmark_w(), benchmark_k(), rho0, 10.0, 0.01, so);
    const int centre = static_cast<int>(0.5 * nxi), edge = static_cast<int>(0.05 * nxi);
    const auto& r0 = sol.snapshots.front();
    const auto& r1 = sol.snapshots.back();
    const double ratio = r1.variance(centre) / r0.variance(centre);
    const bool part1 = ratio < kVarianceRatio;
    const bool part2 = r1.variance(centre) < r1.variance(edge);
    o.pass = part1 && part2;
    o.detail = "centre variance ratio " + fmt(ratio) + (part1 ? " < " : " >= ") + fmt(kVarianceRatio) +
               "; var(xi=0.5)=" + fmt(r1.variance(centre)) + (part2 ? " < " : " >= ") + "var(xi=0.05)=" +
               fmt(r1.variance(edge)) + " at t=10";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> checks = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9, criterion10};
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("criterion %zu: %s | %s | %.1f s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}
