#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hgmf/errors.hpp"
#include "hgmf/hypergraphon.hpp"

using namespace hgmf;

namespace {
double quad(double x) { return 4.0 * (x - 0.5) * (x - 0.5); }

// Random symmetric step hypergraphon with levels 1 and 2.
StepHypergraphon random_step(int parts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DenseLevel> levels;
    for (int l = 1; l <= 2; ++l) {
        DenseLevel d(parts, l);
        std::vector<int> idx(l + 1, 0);
        for (std::size_t f = 0; f < d.size(); ++f) {
            std::size_t r = f;
            for (int k = l; k >= 0; --k) {
                idx[k] = static_cast<int>(r % parts);
                r /= parts;
            }
            std::vector<int> s = idx;
            std::sort(s.begin(), s.end());
            if (s == idx) d.values[f] = std::round(u(rng) * 8) / 8;
        }
        for (std::size_t f = 0; f < d.size(); ++f) {
            std::size_t r = f;
            for (int k = l; k >= 0; --k) {
                idx[k] = static_cast<int>(r % parts);
                r /= parts;
            }
            std::sort(idx.begin(), idx.end());
            d.values[f] = d.at(idx);
        }
        levels.push_back(d);
    }
    return step_from_dense(levels);
}
}  // namespace

TEST_CASE("evaluate examples") {
    URHypergraphon h = homogeneous_hypergraphon(0.1, {1, 2});
    CHECK(h.evaluate(2, {0.0, 0.05, 0.09}) == 1.0);
    CHECK(h.evaluate(2, {0.0, 0.5, 0.9}) == 0.0);
    CHECK(h.evaluate(3, {0.0, 0.0, 0.0, 0.0}) == 0.0);  // inactive order
    URHypergraphon b = balanced_quadratic_hypergraphon({2});
    CHECK(b.evaluate(2, {0.5, 0.5, 0.5}) == doctest::Approx(quad(0.0)));
    CHECK(b.sup_bound() == 1.0);
}

TEST_CASE("step from hypergraph") {
    auto s = step_from_hypergraph(build_homogeneous(20, 0.3, 3));
    CHECK(s.parts == 20);
    CHECK(s.sup_bound == doctest::Approx(1.0));
    for (int l = 1; l <= 2; ++l)
        for (const auto& lvl : s.levels)
            for (double v : lvl.weights()) CHECK((v == doctest::Approx(1.0) || v == 0.0));
    auto a = step_from_hypergraph(build_all_to_all(5, 3));
    CHECK(a.cell_value(2, std::vector<int>{0, 3, 4}) == doctest::Approx(1.0));
    CHECK(a.cell_value(2, std::vector<int>{1, 1, 4}) == 0.0);
    // Right-open cells, last one closed.
    CHECK(a.evaluate(1, std::vector<double>{0.2, 0.41}) == doctest::Approx(1.0));
    CHECK(a.evaluate(1, std::vector<double>{0.2, 0.2}) == 0.0);
    CHECK(a.evaluate(1, std::vector<double>{0.0, 1.0}) == doctest::Approx(1.0));
    CHECK(a.evaluate(1, std::vector<double>{1.0, 1.0}) == 0.0);
    auto z = step_from_hypergraph(Hypergraph(6, 3));
    CHECK(z.active_orders().empty());
    CHECK(z.sup_bound == 0.0);
}

TEST_CASE("pointwise discretization reproduces the builders") {
    auto hom = discretize_pointwise(homogeneous_hypergraphon(0.3, {1, 2}), 20, 0.0);
    CHECK(hom == build_homogeneous(20, 0.3, 3));

    auto bal = discretize_pointwise(balanced_quadratic_hypergraphon({1, 2}), 20, 0.5);
    auto ref = build_balanced(20, quad, 3);
    for (int l = 1; l <= 2; ++l) {
        REQUIRE(bal.tensor(l).size() == ref.tensor(l).size());
        for (std::size_t e = 0; e < ref.tensor(l).size(); ++e) {
            CHECK(std::equal(bal.tensor(l).key(e).begin(), bal.tensor(l).key(e).end(), ref.tensor(l).key(e).begin()));
            CHECK(bal.tensor(l).weight_at(e) == doctest::Approx(ref.tensor(l).weight_at(e)).epsilon(1e-12));
        }
    }
    auto c = discretize_pointwise(constant_hypergraphon(0.7, {2}), 6, 0.25);
    CHECK(c.weight({0, 3, 5}) == doctest::Approx(0.7 / 36));
    CHECK(c.weight({0, 0, 5}) == 0.0);
    CHECK_THROWS_AS(discretize_pointwise(constant_hypergraphon(1.0, {1}), 1, 0.0), ParameterError);
}

TEST_CASE("pointwise discretization of a step hypergraphon round trips off loop cells") {
    auto w = random_step(4, 99);
    for (int n : {4, 8}) {
        auto back = step_from_hypergraph(discretize_pointwise(URHypergraphon(w), n, 0.0));
        for (int l = 1; l <= 2; ++l) {
            std::vector<int> c(l + 1, 0);
            std::vector<double> p(l + 1);
            bool more = true;
            while (more) {
                std::vector<int> s = c;
                std::sort(s.begin(), s.end());
                if (std::adjacent_find(s.begin(), s.end()) == s.end()) {
                    for (int k = 0; k <= l; ++k) p[k] = (c[k] + 0.5) / n;
                    CHECK(back.cell_value(l, c) == doctest::Approx(w.evaluate(l, p)).epsilon(1e-14));
                }
                int k = l;
                while (k >= 0 && c[k] == n - 1) c[k--] = 0;
                if (k < 0) more = false; else ++c[k];
            }
        }
    }
    CHECK_THROWS_AS(discretize_pointwise(URHypergraphon(w), 6, 0.0), ParameterError);
}

TEST_CASE("L1 discretization") {
    auto c = discretize_l1(constant_hypergraphon(0.3, {1, 2}), 5, 1);
    CHECK(c.weight({1, 3}) == doctest::Approx(0.3 / 5).epsilon(1e-15));
    CHECK(c.weight({1, 3, 4}) == doctest::Approx(0.3 / 25).epsilon(1e-15));

    // On the cell [0,1/4]x[1/4,1/2] the level is (x+y-1)^2, so the midpoint rule with r nodes per axis
    // gives exactly (mx+my-1)^2 + 2 h^2 (1 - 1/r^2) / 12 with h = 1/4; the continuum average drops the 1/r^2.
    URHypergraphon b = balanced_quadratic_hypergraphon({1});
    const double hw = 0.25, mid = (0.125 + 0.375 - 1) * (0.125 + 0.375 - 1);
    auto midpoint = [&](int r) { return mid + 2 * hw * hw * (1 - 1.0 / (r * r)) / 12; };
    double v16 = discretize_l1(b, 4, 16).weight({0, 1});
    double v64 = discretize_l1(b, 4, 64).weight({0, 1});
    CHECK(v16 * 4 == doctest::Approx(midpoint(16)).epsilon(1e-13));
    CHECK(v64 * 4 == doctest::Approx(midpoint(64)).epsilon(1e-13));
    CHECK(std::abs(v16 - v64) < 1e-5);
    CHECK(std::abs(v64 * 4 - (mid + 2 * hw * hw / 12)) < 1e-5);

    // Homogeneous theta = 1/4, cell (1,2) of N = 4: half of the square satisfies |x-y| <= 1/4.
    URHypergraphon h = homogeneous_hypergraphon(0.25, {1});
    double prev = 1.0;
    for (int r : {4, 16, 64}) {
        double avg = discretize_l1(h, 4, r).weight({0, 1}) * 4;
        double err = std::abs(avg - 0.5);
        CHECK(err < prev);
        CHECK(err <= 1.0 / (2 * r) + 1e-12);
        prev = err;
    }
}

TEST_CASE("L1 distance basics") {
    URHypergraphon a = constant_hypergraphon(0.7, {1, 2});
    URHypergraphon b = constant_hypergraphon(0.2, {1, 2});
    CHECK(l1_level_distance(a, a, 2, 4) == 0.0);
    CHECK(l1_level_distance(a, b, 2, 4) == doctest::Approx(0.5));
    URHypergraphon w = random_step(3, 5);
    CHECK(l1_level_distance(w, w, 2, 2) == 0.0);
}

TEST_CASE("L1 distance matches a dense oracle for asymmetric steps") {
    // Level stored without symmetry: direct cell sum is the oracle.
    TensorBuilder tb(1, Symmetry::None);
    tb.add({0, 1}, 0.5);
    tb.add({1, 0}, 0.25);
    tb.add({2, 2}, 1.0);
    StepHypergraphon s;
    s.parts = 3;
    s.levels.push_back(tb.build());
    s.sup_bound = 1.0;
    URHypergraphon z = constant_hypergraphon(0.0, {1});
    CHECK(l1_level_distance(URHypergraphon(s), z, 1, 2) == doctest::Approx((0.5 + 0.25 + 1.0) / 9));
}

TEST_CASE("homogeneous pointwise rate") {
    URHypergraphon w = homogeneous_hypergraphon(0.1, {1, 2});
    for (int n : {10, 20, 50}) {
        URHypergraphon s = step_from_hypergraph(discretize_pointwise(w, n, 0.0));
        for (int l = 1; l <= 2; ++l) CHECK(l1_level_distance(w, s, l, 8) <= 2.0 * l * (l + 1) / n);
    }
}

TEST_CASE("Lipschitz L1 scheme rate") {
    URHypergraphon w = balanced_quadratic_hypergraphon({1, 2});
    for (int n : {8, 16, 32}) {
        URHypergraphon s = step_from_hypergraph(discretize_l1(w, n, 4));
        for (int l = 1; l <= 2; ++l) {
            double lip = *w.analytic_level(l)->lipschitz;
            CHECK(lip == doctest::Approx(4.0 / std::sqrt(l + 1.0)));
            CHECK(l1_level_distance(w, s, l, 4) <= std::sqrt(l + 1.0) * lip / n);
        }
    }
}

TEST_CASE("levels are symmetric under sampled permutations") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<URHypergraphon> ws = {homogeneous_hypergraphon(0.3, {1, 2, 3}), balanced_quadratic_hypergraphon({1, 2, 3}),
                                      constant_hypergraphon(0.4, {1, 2}),
                                      step_from_hypergraph(build_homogeneous(9, 0.4, 4)),
                                      step_from_hypergraph(build_balanced(9, quad, 4))};
    for (const auto& w : ws)
        for (int l : w.active_orders()) {
            std::vector<double> p(l + 1);
            for (int s = 0; s < 100; ++s) {
                for (auto& v : p) v = u(rng);
                double base = w.evaluate(l, p);
                std::shuffle(p.begin(), p.end(), rng);
                CHECK(w.evaluate(l, p) == doctest::Approx(base).epsilon(1e-14));
                CHECK(base >= 0.0);
                CHECK(base <= w.sup_bound() + 1e-15);
            }
        }
}

TEST_CASE("step text round trip") {
    auto w = random_step(3, 4);
    auto back = step_from_text(step_to_text(w));
    CHECK(back.parts == 3);
    for (int l = 1; l <= 2; ++l) CHECK(back.dense_level(l).values == w.dense_level(l).values);
    save_step(w, "step_rt.txt");
    CHECK(load_step("step_rt.txt").dense_level(2).values == w.dense_level(2).values);
    std::remove("step_rt.txt");
    CHECK_THROWS_AS(step_from_text("hypergraphon v1 parts=2 orders=1\n0 1 1\n"), ParseError);
    CHECK_THROWS_AS(step_from_text("hypergraphon v1 parts=2 orders=1\n0 1 1 0 5\n"), ParseError);
}

TEST_CASE("dense construction rejects asymmetric blocks") {
    DenseLevel d(2, 1);
    d.at(std::vector<int>{0, 1}) = 0.5;
    d.at(std::vector<int>{1, 0}) = 0.25;
    CHECK_THROWS_AS(step_from_dense({d}), ValidationError);
}

TEST_CASE("dense level refinement") {
    DenseLevel d(2, 1);
    d.values = {1, 2, 3, 4};
    auto r = d.refined(2);
    CHECK(r.parts == 4);
    CHECK(r.at(std::vector<int>{0, 1}) == 1);
    CHECK(r.at(std::vector<int>{1, 2}) == 2);
    CHECK(r.at(std::vector<int>{3, 3}) == 4);
}
