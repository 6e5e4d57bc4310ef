#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fabernet/constructors.hpp"
#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace fabernet;

namespace {

std::vector<double> random_point(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x)
        v = u(rng);
    return x;
}

} // namespace

TEST_CASE("square net") {
    for (int m = 1; m <= 6; ++m) {
        auto net = build_square_net(m);
        std::vector<double> zero{0.0}, one{1.0}, half{0.5};
        CHECK(net.eval(zero) == 0.0);
        CHECK(net.eval(one) == 1.0);
        CHECK(net.eval(half) == 0.25);
        CHECK(net.depth() == m + 1);
    }
    auto net = build_square_net(3);
    double worst = 0.0, worst_d = 0.0;
    for (int i = 0; i < 100000; ++i) {
        std::vector<double> x{(i + 0.5) / 100000.0};
        worst = std::max(worst, std::abs(net.eval(x) - x[0] * x[0]));
        worst_d = std::max(worst_d, std::abs(net.grad(x)[0] - 2.0 * x[0]));
    }
    CHECK(worst <= 0.00390625);
    CHECK(worst > 0.0039);
    CHECK(worst_d <= 0.125 + 1e-12);
}

TEST_CASE("node depth selection") {
    CHECK(node_depth_for(1.0) == 1);
    CHECK(node_depth_for(0.25) == 3);
    CHECK(node_depth_for(0.01) == 8);
    CHECK_THROWS_AS(node_depth_for(0.0), InvalidParameter);
}

TEST_CASE("pair product") {
    const double dn = 0.01;
    auto net = build_pair_product_net(dn);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> a{0.0, u(rng)}, b{u(rng), 0.0};
        CHECK(net.eval(a) == 0.0);
        CHECK(net.eval(b) == 0.0);
    }
    std::vector<double> ones{1.0, 1.0};
    CHECK(std::abs(net.eval(ones) - 1.0) <= dn);
    // Off the dyadic lattice: the derivative contract holds away from kinks.
    double worst = 0.0;
    for (int i = 0; i < 512; ++i)
        for (int j = 0; j < 512; ++j) {
            std::vector<double> x{(i + 0.37) / 512.0, (j + 0.61) / 512.0};
            worst = std::max(worst, std::abs(net.eval(x) - x[0] * x[1]));
            auto g = net.grad(x);
            worst = std::max({worst, std::abs(g[0] - x[1]), std::abs(g[1] - x[0])});
        }
    CHECK(worst <= dn);
}

TEST_CASE("product net contracts") {
    std::mt19937_64 rng(2);
    for (int d : {2, 3, 4, 5}) {
        const double delta = 0.01;
        auto p = build_product_net(d, delta);
        CHECK(p.arity == d);
        CHECK(p.net.stats().N_w <= 12 * d);
        double worst = 0.0, worst_d = 0.0;
        for (int t = 0; t < 20000; ++t) {
            auto x = random_point(rng, d);
            double prod = 1.0;
            for (double v : x)
                prod *= v;
            worst = std::max(worst, std::abs(p.net.eval(x) - prod));
            auto g = p.net.grad(x);
            for (int j = 0; j < d; ++j) {
                double pj = 1.0;
                for (int i = 0; i < d; ++i)
                    if (i != j)
                        pj *= x[static_cast<std::size_t>(i)];
                worst_d = std::max(worst_d, std::abs(g[static_cast<std::size_t>(j)] - pj));
            }
            x[rng() % static_cast<unsigned>(d)] = 0.0;
            CHECK(p.net.eval(x) == 0.0);
        }
        CHECK(worst <= delta);
        CHECK(worst_d <= delta);
    }
    auto one = build_product_net(1, 0.1);
    std::vector<double> x{0.37};
    CHECK(one.net.eval(x) == 0.37);
}

TEST_CASE("hat net") {
    std::mt19937_64 rng(3);
    const double delta = 0.05;
    for (int d = 1; d <= 3; ++d) {
        auto prod = build_product_net(d, delta);
        for (int t = 0; t < 5; ++t) {
            std::vector<int> kv;
            std::vector<std::int64_t> sv;
            for (int i = 0; i < d; ++i) {
                kv.push_back(static_cast<int>(rng() % 4));
                sv.push_back(static_cast<std::int64_t>(rng() % (1u << kv.back())));
            }
            MultiLevel k(kv);
            MultiPosition s(sv);
            auto net = build_hat_net(k, s, prod);
            CHECK(net.depth() == prod.net.depth() + 2);
            CHECK(net.stats().W <= prod.net.stats().W + 7 * static_cast<std::size_t>(d));
            std::vector<double> mid;
            for (int i = 0; i < d; ++i)
                mid.push_back(std::ldexp(2.0 * static_cast<double>(sv[static_cast<std::size_t>(i)]) + 1.0, -kv[static_cast<std::size_t>(i)] - 1));
            CHECK(std::abs(net.eval(mid) - 1.0) <= delta);
            for (int n = 0; n < 2000; ++n) {
                auto x = random_point(rng, d);
                const double phi = tensor_hat_eval(k, s, x);
                const double out = net.eval(x);
                CHECK(std::abs(out - phi) <= delta);
                if (phi == 0.0)
                    CHECK(out == 0.0);
            }
        }
    }
}

TEST_CASE("compiler plan") {
    ApproxConfig cfg{2, 2.0, 3.0, 2.0, 0.1};
    CHECK(epsilon0(cfg) == doctest::Approx(0.25));
    auto p = plan(cfg);
    CHECK(p.m == 6);
    CHECK(p.delta == doctest::Approx(0.2));
    CHECK(p.eps0 == doctest::Approx(0.25));
    const double notch = 1.0 - std::pow(2.0, -0.5);
    const double inner = 2.0 * 6.0 * std::sqrt(3.0) * 4.0 / 0.1 / (3.0 * 64.0 * notch * notch);
    CHECK(inner == doctest::Approx(50.5).epsilon(0.01));
    CHECK(p.m == static_cast<int>(std::ceil(std::log2(inner))));
    cfg.eps = 0.3;
    CHECK_THROWS_AS(plan(cfg), EpsilonTooLarge);
    try {
        plan(cfg);
    } catch (const EpsilonTooLarge& e) {
        CHECK(e.eps0() == doctest::Approx(0.25));
    }
    cfg.eps.reset();
    CHECK_THROWS_AS(plan(cfg), InvalidParameter);
}

TEST_CASE("compile poly tent end to end") {
    auto f = poly_tent(2);
    ApproxConfig cfg{2, 2.0, 3.0, 2.0, 0.2};
    auto c = compile(f.oracle(), cfg);
    CHECK(c.terms == c.expansion.size());
    CHECK(c.terms == cardinality_D(enumerate_notched(2, 3.0, c.plan.m)));
    auto net = std::make_shared<ReluNetwork>(c.net);
    auto R = std::make_shared<FaberExpansion>(c.expansion);
    auto q = QuadratureSpec::tensor(64);
    CHECK(w1p_error(f.diff(), from_network(net), q, 2.0) <= 0.2);
    CHECK(w1p_error(from_expansion(R), from_network(net), q, 2.0) <= 0.1);

    auto lac = lacunary(2, 2.0);
    auto c2 = compile(lac.oracle(), cfg);
    CHECK(c2.net.same_pattern(c.net));

    auto zero = compile(zero_corpus(2).oracle(), cfg);
    CHECK(zero.net.depth() == 2);
    CHECK(zero.net.stats().W == 0);
    std::vector<double> x{0.3, 0.4};
    CHECK(zero.net.eval(x) == 0.0);
}

TEST_CASE("narrow layout") {
    auto f = bspline_bump(2, 2.0);
    ApproxConfig cfg{2, 2.0, 3.0, 2.0, 0.2};
    auto wide = compile(f.oracle(), cfg);
    auto narrow = compile_narrow(f.oracle(), cfg);
    CHECK(narrow.net.stats().N_w <= 12 * 2 + 3);
    CHECK(narrow.net.depth() >= wide.net.depth());
    std::mt19937_64 rng(4);
    for (int t = 0; t < 2000; ++t) {
        auto x = random_point(rng, 2);
        const double a = wide.net.eval(x), b = narrow.net.eval(x);
        CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
    }
}
