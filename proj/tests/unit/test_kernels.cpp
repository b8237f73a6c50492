#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hgmf/errors.hpp"
#include "hgmf/kernels.hpp"

using namespace hgmf;

TEST_CASE("linear mean kernel") {
    auto k = linear_mean_kernel(2);
    CHECK(k(0.0, {1.0, 0.0}) == doctest::Approx(0.5));
    CHECK(k(0.3, {0.3, 0.3}) == 0.0);
    CHECK(linear_mean_kernel(3)(0.0, {1.0, 1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(k.bound == 1.0);
    CHECK(k.lipschitz == 2.0);
    CHECK(k.symmetric_head);
    auto wide = linear_mean_kernel(2, -1.0, 3.0);
    CHECK(wide.bound == 4.0);
}

TEST_CASE("kuramoto kernel") {
    CHECK(kuramoto_kernel(1)(0.0, {M_PI / 2}) == doctest::Approx(1.0));
    for (double x : {-1.3, 0.0, 0.7, 2.9}) CHECK(kuramoto_kernel(2)(x, {x, x}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(kuramoto_kernel(2)(0.0, {M_PI / 4, M_PI / 4}) == doctest::Approx(1.0));
    CHECK(kuramoto_kernel(3).lipschitz == 3.0);
    CHECK(kuramoto_kernel(3).bound == 1.0);
}

TEST_CASE("skardal kernels") {
    auto fam = skardal_kernels();
    const auto* k2 = fam.find(2);
    const auto* k3 = fam.find(3);
    REQUIRE(k2);
    REQUIRE(k3);
    CHECK((*k2)(0.0, {M_PI / 4, M_PI / 2}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK((*k2)(0.4, {0.4, 0.4}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK((*k3)(0.0, {1.0, 0.0, 0.0}) == doctest::Approx(std::sin(1.0)));
    CHECK((*k3)(0.0, {0.0, 0.0, 1.0}) == doctest::Approx(std::sin(-1.0)));
    CHECK_FALSE(k2->symmetric_head);
    CHECK_FALSE(k3->symmetric_head);
    CHECK(fam.find(1)->symmetric_head);
}

TEST_CASE("opinion kernel") {
    auto k0 = opinion_diam_kernel(2, 0.0);
    CHECK(k0(0.0, {1.0, 0.0}) == doctest::Approx(0.5));
    auto k = opinion_diam_kernel(2, -1.0, 0.0, 2.0);
    CHECK(k(0.0, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(k(0.0, {0.0, 2.0}) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(k(0.0, {0.0, 2.0}) == doctest::Approx(0.13534).epsilon(1e-4));
}

TEST_CASE("opinion kernel with lambda 0 equals linear mean") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int l = 1; l <= 3; ++l) {
        auto a = opinion_diam_kernel(l, 0.0);
        auto b = linear_mean_kernel(l);
        std::vector<double> h(l);
        for (int s = 0; s < 1000; ++s) {
            double x = u(rng);
            for (auto& v : h) v = u(rng);
            CHECK(a(x, h) == doctest::Approx(b(x, h)).epsilon(1e-15));
        }
    }
}

TEST_CASE("built-in kernels respect their declared constants") {
    KernelFamily fam;
    std::vector<InteractionKernel> all = {linear_mean_kernel(1), linear_mean_kernel(2), linear_mean_kernel(3),
                                          kuramoto_kernel(1),    kuramoto_kernel(2),    kuramoto_kernel(3),
                                          opinion_diam_kernel(2, -1.0), opinion_diam_kernel(2, 1.5),
                                          opinion_diam_kernel(3, 2.0)};
    for (const auto& k : all) {
        KernelFamily f{k};
        auto r = check_assumption1(f, 1.0, 10000, 42);
        INFO(k.name);
        CHECK(r.ok());
    }
    auto r = check_assumption1(skardal_kernels(), 2.0, 10000, 42);
    for (const auto& v : r.violations) CHECK(v.kind != "bound");
    for (const auto& v : r.violations) CHECK(v.kind != "lipschitz");
}

TEST_CASE("assumption 1 report sums") {
    KernelFamily f{linear_mean_kernel(2)};
    auto r = check_assumption1(f, 1.0, 100, 1);
    CHECK(r.sum_bound == doctest::Approx(std::sqrt(2.0) * 1.0));
    CHECK(r.sum_lip == doctest::Approx(2.0 * 2.0));
    CHECK(r.ok());

    auto sk = check_assumption1(skardal_kernels(), 2.0, 2000, 3);
    CHECK(std::isfinite(sk.sum_bound));
    // 1/2 + sqrt(2)/4 + sqrt(6)/8
    CHECK(sk.sum_bound == doctest::Approx(0.5 + std::sqrt(2.0) / 4 + std::sqrt(6.0) / 8));
    CHECK(sk.asymmetric_orders == std::vector<int>{2, 3});
    CHECK(sk.ok());  // not declared symmetric, so not a violation

    CHECK_THROWS_AS(check_assumption1(skardal_kernels(), 0.0, 10, 1), ParameterError);
}

TEST_CASE("understated constants are reported") {
    auto k = linear_mean_kernel(2);
    k.bound = 0.5;
    auto r = check_assumption1(KernelFamily{k}, 1.0, 2000, 5);
    REQUIRE_FALSE(r.ok());
    CHECK(r.violations[0].kind == "bound");

    auto q = kuramoto_kernel(2);
    q.lipschitz = 0.5;
    auto rq = check_assumption1(KernelFamily{q}, 1.0, 2000, 5);
    bool found = false;
    for (const auto& v : rq.violations) found |= v.kind == "lipschitz";
    CHECK(found);

    auto s = *skardal_kernels().find(2);
    s.symmetric_head = true;
    auto rs = check_assumption1(KernelFamily{s}, 1.0, 200, 5);
    found = false;
    for (const auto& v : rs.violations) found |= v.kind == "symmetry";
    CHECK(found);
}

TEST_CASE("separable decompositions reproduce direct evaluation") {
    std::vector<InteractionKernel> ks = {linear_mean_kernel(1), linear_mean_kernel(2), linear_mean_kernel(3),
                                         kuramoto_kernel(1),    kuramoto_kernel(2),    kuramoto_kernel(3),
                                         opinion_diam_kernel(2, 0.0)};
    auto sk = skardal_kernels();
    for (const auto& k : sk.kernels()) ks.push_back(k);
    for (const auto& k : ks) {
        INFO(k.name);
        REQUIRE(k.has_separable());
        CHECK(separable_error(k, 2000, 11) < 1e-12);
    }
    CHECK_FALSE(opinion_diam_kernel(2, -1.0).has_separable());
}

TEST_CASE("phase kernel") {
    auto k = phase_kernel({-1.0, 2.0, -1.0}, "custom");
    CHECK(k.order == 2);
    CHECK(k(0.1, {0.5, 0.2}) == doctest::Approx(std::sin(-0.1 + 1.0 - 0.2)));
    CHECK(k.lipschitz == 2.0);
    CHECK(separable_error(k, 500, 3) < 1e-12);
}

TEST_CASE("kernel family bookkeeping") {
    KernelFamily f;
    f.add(linear_mean_kernel(2));
    f.add(kuramoto_kernel(1));
    CHECK(f.orders() == std::vector<int>{1, 2});
    CHECK(f.max_order() == 2);
    CHECK(f.find(3) == nullptr);
    CHECK_THROWS(f.add(linear_mean_kernel(2)));
}

TEST_CASE("vector-valued linear mean kernel") {
    auto k = linear_mean_kernel(2);
    std::vector<double> x = {0.0, 1.0}, heads = {1.0, 0.0, 0.0, 3.0}, out(2);
    k.fn(x, heads, out);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(0.5));
}
