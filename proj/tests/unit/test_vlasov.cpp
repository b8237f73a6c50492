#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hgmf/errors.hpp"
#include "hgmf/metrics.hpp"
#include "hgmf/particles.hpp"
#include "hgmf/vlasov.hpp"

using namespace hgmf;

namespace {
InteractionKernel without_separable(InteractionKernel k) {
    k.separable.clear();
    return k;
}

// Every fiber a single-cell spike at cell c(f).
FiberedDensity spikes(int nx, int nxi, double lo, double hi, const std::function<int(int)>& cell) {
    FiberedDensity d(nx, nxi, lo, hi);
    for (int f = 0; f < nxi; ++f) d.fiber(f)[cell(f)] = 1.0 / d.dx();
    return d;
}

Hypergraph two_body() {
    TensorBuilder b(1, Symmetry::Full);
    b.add({0, 1}, 0.5);
    return Hypergraph(2, 2, {b.build()});
}
}  // namespace

TEST_CASE("pairwise mean reversion towards a concentrated law") {
    URHypergraphon w = constant_hypergraphon(1.0, {1});
    auto rho = spikes(40, 8, 0.0, 1.0, [](int) { return 13; });
    const double m = rho.x_center(13);
    auto F = mean_field_force(w, rho, KernelFamily{linear_mean_kernel(1)});
    for (int f = 0; f < 8; ++f)
        for (int c = 0; c < 40; ++c) CHECK(F.centers[f * 40 + c] == doctest::Approx(m - rho.x_center(c)).scale(1.0).epsilon(1e-13));
    for (int c = 0; c <= 40; ++c) CHECK(F.faces[c] == doctest::Approx(m - rho.x_face(c)).scale(1.0).epsilon(1e-13));
}

TEST_CASE("zero hypergraphon gives zero force") {
    auto rho = density_uniform(16, 4, 0.0, 1.0, 0.2, 0.7);
    KernelFamily k{linear_mean_kernel(1), linear_mean_kernel(2)};
    for (const URHypergraphon& w :
         {URHypergraphon(constant_hypergraphon(0.0, {1, 2})), URHypergraphon(step_from_hypergraph(Hypergraph(4, 3)))}) {
        auto F = mean_field_force(w, rho, k);
        CHECK(F.max_abs() == 0.0);
    }
}

TEST_CASE("kernel orders must be levels of the hypergraphon") {
    auto rho = density_uniform(8, 4, 0.0, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(mean_field_force(URHypergraphon(constant_hypergraphon(1, {1})), rho, KernelFamily{linear_mean_kernel(2)}),
                    ConfigError);
}

TEST_CASE("fast path and generic path agree") {
    const int nx = 32, nxi = 16;
    auto rho = density_gaussian(nx, nxi, -0.1, 1.1, [](double xi) { return 0.2 + 0.6 * xi; }, 0.08);
    // w_2 = 1 with linear mean: F = mean of fiber means - x.
    URHypergraphon w = constant_hypergraphon(1.0, {2});
    auto fast = mean_field_force(w, rho, KernelFamily{linear_mean_kernel(2)});
    auto slow = mean_field_force(w, rho, KernelFamily{without_separable(linear_mean_kernel(2))});
    double mbar = 0;
    for (int f = 0; f < nxi; ++f) mbar += rho.mean(f) / nxi;
    for (std::size_t q = 0; q < fast.centers.size(); ++q) {
        CHECK(std::abs(fast.centers[q] - slow.centers[q]) < 1e-8);
        CHECK(fast.centers[q] == doctest::Approx(mbar - rho.x_center(q % nx)).scale(1.0).epsilon(1e-12));
    }
    // Non-trivial hypergraphon and a trigonometric kernel.
    URHypergraphon h = homogeneous_hypergraphon(0.3, {1, 2});
    KernelFamily kf{kuramoto_kernel(1), kuramoto_kernel(2)};
    KernelFamily kg{without_separable(kuramoto_kernel(1)), without_separable(kuramoto_kernel(2))};
    auto a = mean_field_force(h, rho, kf), b = mean_field_force(h, rho, kg);
    for (std::size_t q = 0; q < a.faces.size(); ++q) CHECK(std::abs(a.faces[q] - b.faces[q]) < 1e-10);
    MeanFieldForce mf(h, kf, nxi);
    CHECK(mf.uses_fast_path(2));
    CHECK_FALSE(MeanFieldForce(h, kg, nxi).uses_fast_path(2));
}

TEST_CASE("force respects the boundedness constant") {
    URHypergraphon w = homogeneous_hypergraphon(0.1, {1, 2});
    KernelFamily k{linear_mean_kernel(2)};
    MeanFieldForce mf(w, k, 32);
    auto rho = density_uniform(48, 32, -0.1, 1.1, 0.0, 1.0);
    auto F = mf(rho);
    auto c = mf.constants(1.0);
    CHECK(F.max_abs() <= c.b_f * (1 + 1e-12));
    CHECK(c.b_f > 0.0);
}

TEST_CASE("force constants for a constant hypergraphon") {
    URHypergraphon w = constant_hypergraphon(1.0, {2});
    MeanFieldForce mf(w, KernelFamily{linear_mean_kernel(2)}, 10);
    for (double p : {1.0, 1.5, 2.0}) {
        auto c = mf.constants(p);
        CHECK(c.b_f == doctest::Approx(1.0));
        CHECK(c.l_f == doctest::Approx(2.0));
        CHECK(c.c_p == doctest::Approx(4.0));  // BL = 2, two heads, unit norms
    }
    CHECK_THROWS_AS(mf.constants(0.5), ParameterError);
}

TEST_CASE("fiber quadrature expands step entries like a dense scan") {
    auto h = build_homogeneous(6, 0.4, 3);
    URHypergraphon w = step_from_hypergraph(h);
    FiberQuadrature direct(w, 6, {1, 2});
    FiberQuadrature dense(w, 6, {1, 2}, 1e9);
    // The dense scan path is taken when parts != nxi; use 12 fibers and compare row sums.
    FiberQuadrature fine(w, 12, {1, 2});
    for (int l = 1; l <= 2; ++l)
        for (int i = 0; i < 12; ++i) CHECK(fine.row_l1(l, i) == doctest::Approx(direct.row_l1(l, i / 2)).epsilon(1e-12));
    CHECK(direct.level(2)->value.size() == dense.level(2)->value.size());
    CHECK_THROWS_AS(FiberQuadrature(URHypergraphon(homogeneous_hypergraphon(0.1, {3})), 200, {3}), ResourceError);
}

TEST_CASE("separable decompositions are verified at start-up") {
    auto bad = linear_mean_kernel(1);
    bad.separable[0].coeff = 2.0;
    CHECK_THROWS_AS(MeanFieldForce(URHypergraphon(constant_hypergraphon(1, {1})), KernelFamily{bad}, 4), ConfigError);
}

TEST_CASE("generic high-order quadrature has a budget") {
    URHypergraphon w = constant_hypergraphon(1.0, {3});
    ForceOptions o;
    o.generic_budget = 1e5;
    MeanFieldForce mf(w, KernelFamily{opinion_diam_kernel(3, -1.0)}, 4, o);
    auto rho = density_uniform(32, 4, 0.0, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(mf(rho), ResourceError);
}

TEST_CASE("transport step basics") {
    auto rho = density_gaussian(50, 3, 0.0, 1.0, [](double) { return 0.4; }, 0.05);
    std::vector<double> zero(3 * 51, 0.0);
    CHECK(step_transport(rho, zero, 0.1).rho == rho.rho);

    const double c = 0.3, dt = 0.05;
    std::vector<double> F(3 * 51, c);
    auto out = step_transport(rho, F, dt);
    for (int f = 0; f < 3; ++f) {
        CHECK(std::abs(out.mass(f) - rho.mass(f)) < 1e-14);
        CHECK(std::abs(out.mean(f) - rho.mean(f) - c * dt) <= rho.dx());
        CHECK(out.min_value() >= 0.0);
    }
    try {
        step_transport(rho, F, 1.0);
        FAIL("expected a CFL error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("max|F|") != std::string::npos);
    }
}

TEST_CASE("attractive field shrinks every fiber variance") {
    URHypergraphon w = constant_hypergraphon(1.0, {1});
    auto rho0 = density_gaussian(64, 8, -0.1, 1.1, [](double xi) { return 0.3 + 0.4 * xi; }, 0.1);
    SolveOptions opt;
    std::vector<double> last(8);
    for (int f = 0; f < 8; ++f) last[f] = rho0.variance(f);
    bool monotone = true;
    opt.on_step = [&](double, const FiberedDensity& r) {
        for (int f = 0; f < 8; ++f) {
            double v = r.variance(f);
            monotone = monotone && v <= last[f] * (1 + 1e-12);
            last[f] = v;
        }
    };
    solve(w, KernelFamily{linear_mean_kernel(1)}, rho0, 1.0, 0.01, opt);
    CHECK(monotone);
}

TEST_CASE("solve keeps mass and hits snapshot times") {
    URHypergraphon w = homogeneous_hypergraphon(0.2, {1, 2});
    auto rho0 = density_uniform(64, 16, -0.1, 1.1, 0.0, 1.0);
    SolveOptions opt;
    opt.snapshot_times = {0.0, 0.3, 1.0, 2.0};
    auto s = solve(w, KernelFamily{linear_mean_kernel(2)}, rho0, 2.0, 0.01, opt);
    CHECK(s.times == opt.snapshot_times);
    for (const auto& r : s.snapshots) {
        for (int f = 0; f < 16; ++f) CHECK(std::abs(r.mass(f) - 1.0) < 1e-12);
        CHECK(r.min_value() >= 0.0);
    }
    CHECK(s.steps >= 200);
}

TEST_CASE("zero hypergraphon is stationary") {
    auto rho0 = density_gaussian(32, 4, 0.0, 1.0, [](double xi) { return xi; }, 0.1);
    auto s = solve(URHypergraphon(constant_hypergraphon(0.0, {1})), KernelFamily{linear_mean_kernel(1)}, rho0, 1.0, 0.1);
    CHECK(s.snapshots.back().rho == rho0.rho);
}

TEST_CASE("invalid initial data is rejected") {
    FiberedDensity bad(8, 2, 0.0, 1.0);
    CHECK_THROWS_AS(solve(URHypergraphon(constant_hypergraphon(1, {1})), KernelFamily{linear_mean_kernel(1)}, bad, 1, 0.1),
                    ValidationError);
}

TEST_CASE("continuum limit closed form") {
    const int n = 64;
    LabelField x0;
    for (int f = 0; f < n; ++f) x0.x.push_back((f + 0.5) / n);
    URHypergraphon w = constant_hypergraphon(1.0, {1});
    auto s = solve_continuum(w, KernelFamily{linear_mean_kernel(1)}, x0, 1.0, 0.01);
    const auto& x1 = s.snapshots.back();
    CHECK(x1.time == 1.0);
    for (int f = 0; f < n; ++f) CHECK(std::abs(x1.x[f] - (0.5 + ((f + 0.5) / n - 0.5) * std::exp(-1.0))) < 1e-5);
    // The label grid has no node at xi = 1; the solution is linear in xi, so extrapolate the last two nodes.
    double slope = (x1.x[n - 1] - x1.x[n - 2]) * n;
    double at_one = x1.x[n - 1] + slope * 0.5 / n;
    CHECK(std::abs(at_one - 0.68394) < 1e-5);
}

TEST_CASE("continuum limit trivial cases") {
    LabelField x0;
    x0.x = {0.1, 0.5, 0.2, 0.9};
    auto z = solve_continuum(URHypergraphon(constant_hypergraphon(0.0, {1})), KernelFamily{linear_mean_kernel(1)}, x0, 1, 0.1);
    CHECK(z.snapshots.back().x == x0.x);
    LabelField c;
    c.x.assign(10, 0.42);
    auto s = solve_continuum(URHypergraphon(homogeneous_hypergraphon(0.3, {1, 2})),
                             KernelFamily{linear_mean_kernel(1), linear_mean_kernel(2)}, c, 2, 0.1);
    for (double v : s.snapshots.back().x) CHECK(v == doctest::Approx(0.42).epsilon(1e-15));
}

TEST_CASE("coupled PDE system tracks the two-agent ODE") {
    const int nx = 120;
    const double lo = -0.1, hi = 1.1, dx = (hi - lo) / nx;
    std::vector<std::vector<double>> laws(2, std::vector<double>(nx, 0.0));
    laws[0][static_cast<int>((0.0 - lo) / dx)] = 1.0;
    laws[1][static_cast<int>((1.0 - lo) / dx) - 1] = 1.0;
    SolveOptions opt;
    opt.snapshot_times = {0.0, 0.5, 1.0};
    auto s = solve_coupled_pde(two_body(), KernelFamily{linear_mean_kernel(1)}, laws, lo, hi, 1.0, 0.005, opt);
    const auto& r0 = s.snapshots[0];
    double m0 = r0.mean(0), m1 = r0.mean(1);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        double t = s.times[k], e = std::exp(-t);
        double ref0 = 0.5 * (m0 + m1) + 0.5 * (m0 - m1) * e, ref1 = 0.5 * (m0 + m1) - 0.5 * (m0 - m1) * e;
        CHECK(std::abs(s.snapshots[k].mean(0) - ref0) < 2 * dx);
        CHECK(std::abs(s.snapshots[k].mean(1) - ref1) < 2 * dx);
    }
}

TEST_CASE("coupled PDE system symmetry and errors") {
    std::vector<std::vector<double>> laws(5, std::vector<double>(40, 0.0));
    for (auto& l : laws)
        for (int c = 10; c < 20; ++c) l[c] = 1.0;
    auto s = solve_coupled_pde(build_all_to_all(5, 3), KernelFamily{linear_mean_kernel(1), linear_mean_kernel(2)}, laws, 0, 1,
                               0.5, 0.01);
    const auto& r = s.snapshots.back();
    for (int f = 1; f < 5; ++f)
        for (int c = 0; c < 40; ++c) CHECK(r.fiber(f)[c] == doctest::Approx(r.fiber(0)[c]).epsilon(1e-13));
    auto z = solve_coupled_pde(Hypergraph(5, 2), KernelFamily{linear_mean_kernel(1)}, laws, 0, 1, 0.5, 0.01);
    CHECK(z.snapshots.back().rho == z.snapshots.front().rho);
    laws.pop_back();
    CHECK_THROWS_AS(solve_coupled_pde(build_all_to_all(5, 2), KernelFamily{linear_mean_kernel(1)}, laws, 0, 1, 0.5, 0.01),
                    ConfigError);
}

TEST_CASE("narrow fibers follow the continuum limit") {
    const int nxi = 16, nx = 200;
    const double lo = -0.1, hi = 1.1, sd = 0.02;
    URHypergraphon w = homogeneous_hypergraphon(0.3, {1, 2});
    KernelFamily k{linear_mean_kernel(1), linear_mean_kernel(2)};
    auto rho0 = density_gaussian(nx, nxi, lo, hi, [](double xi) { return 0.2 + 0.6 * xi; }, sd);
    LabelField x0;
    for (int f = 0; f < nxi; ++f) x0.x.push_back(rho0.mean(f));
    auto pde = solve(w, k, rho0, 1.0, 0.01);
    auto ode = solve_continuum(w, k, x0, 1.0, 0.01);
    for (int f = 0; f < nxi; ++f) CHECK(std::abs(pde.snapshots.back().mean(f) - ode.snapshots.back().x[f]) < (hi - lo) / nx);
}

TEST_CASE("density constructors and text format") {
    auto u = density_uniform(10, 3, 0.0, 1.0, 0.25, 0.5);
    for (int f = 0; f < 3; ++f) {
        CHECK(u.mass(f) == doctest::Approx(1.0));
        CHECK(u.mean(f) == doctest::Approx(0.37));  // cell-centre moment
    }
    CHECK(u.fiber(0)[2] == doctest::Approx(2.0));  // [0.2,0.3] overlaps half
    auto back = density_from_text(density_to_text(u));
    CHECK(back.rho == u.rho);
    CHECK(back.x_min == u.x_min);
    save_density(u, "dens_rt.txt");
    CHECK(load_density("dens_rt.txt").rho == u.rho);
    std::remove("dens_rt.txt");
    CHECK_THROWS_AS(density_from_text("density v1 nx=2 nxi=1 xmin=0 xmax=1\n1\n"), ParseError);
    CHECK_THROWS_AS(density_from_text("density v1 nx=2 nxi=1 xmin=0 xmax=1\n1 -1\n"), ParseError);
    CHECK_THROWS_AS(density_from_text("density v1 nx=two nxi=1 xmin=0 xmax=1\n1 1\n"), ParseError);
    CHECK_THROWS_AS(density_uniform(10, 3, 0.0, 1.0, 2.0, 3.0), ParameterError);
}

TEST_CASE("force assembly is thread-count independent") {
    URHypergraphon w = homogeneous_hypergraphon(0.2, {1, 2});
    auto rho = density_gaussian(40, 24, 0.0, 1.0, [](double xi) { return xi; }, 0.1);
    ForceOptions a, b;
    a.threads = 1;
    b.threads = 4;
    KernelFamily k{opinion_diam_kernel(2, -1.0), kuramoto_kernel(1)};
    CHECK(MeanFieldForce(w, k, 24, a).faces(rho) == MeanFieldForce(w, k, 24, b).faces(rho));
}
