#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/metrics.hpp"
#include "fabernet/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace fabernet;

namespace {

std::vector<CorpusFunction> members(int d, double alpha) {
    std::vector<CorpusFunction> out;
    for (const auto& info : corpus_list())
        out.push_back(make_corpus(info.id, d, alpha));
    return out;
}

} // namespace

TEST_CASE("registry") {
    auto list = corpus_list();
    CHECK(list.size() == 6);
    for (const auto& info : list)
        CHECK(make_corpus(info.id, 2, 1.5).id == info.id);
    CHECK_THROWS_AS(make_corpus("nope", 2, 2.0), InvalidParameter);
    CHECK_THROWS_AS(power_tent(2, 2.5), InvalidParameter);
}

TEST_CASE("boundary values vanish") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int d = 1; d <= 3; ++d)
        for (const auto& f : members(d, 1.5))
            for (int face = 0; face < 2 * d; ++face)
                for (int t = 0; t < 1000; ++t) {
                    std::vector<double> x(static_cast<std::size_t>(d));
                    for (auto& v : x)
                        v = u(rng);
                    x[static_cast<std::size_t>(face / 2)] = face % 2;
                    CHECK(f.value(x) == 0.0);
                }
}

TEST_CASE("poly tent closed-form coefficients") {
    for (int d = 1; d <= 3; ++d) {
        auto f = poly_tent(d);
        for (const auto& k : enumerate_smolyak(d, 8).entries) {
            std::vector<std::int64_t> s;
            for (int ki : k.levels)
                s.push_back(((std::int64_t{1} << ki) - 1) / 2);
            MultiPosition sp(s);
            // Closed form from Delta_h^2 [x(1-x)] = -2 h^2 with h = 2^{-k-1}.
            double oracle = std::ldexp(1.0, -d);
            for (int ki : k.levels)
                oracle *= std::ldexp(1.0, -2 * ki - 2);
            const double got = lambda(f.oracle(), k, sp);
            CHECK(std::abs(got - oracle) <= 1e-12 * oracle);
            CHECK(f.lambda_exact(k, sp) == doctest::Approx(got).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic gradients match finite differences") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    const double h = 1e-6;
    for (int d = 1; d <= 3; ++d)
        for (const auto& f : members(d, 1.75)) {
            std::vector<double> g(static_cast<std::size_t>(d));
            for (int t = 0; t < 200; ++t) {
                std::vector<double> x(static_cast<std::size_t>(d));
                for (auto& v : x)
                    v = u(rng);
                f.gradient(x, g);
                for (int j = 0; j < d; ++j) {
                    auto xp = x, xm = x;
                    xp[static_cast<std::size_t>(j)] += h;
                    xm[static_cast<std::size_t>(j)] -= h;
                    const double fp = f.value(xp), f0 = f.value(x), fm = f.value(xm);
                    if (std::abs((fp - f0) - (f0 - fm)) > 1e-6 * h * (1.0 + std::abs(g[static_cast<std::size_t>(j)])))
                        continue; // near a kink
                    const double fd = (fp - fm) / (2 * h);
                    INFO(f.id);
                    CHECK(std::abs(fd - g[static_cast<std::size_t>(j)]) <= 1e-4 * (1e-6 + std::abs(fd)) + 1e-9);
                }
            }
        }
}

TEST_CASE("B-spline bump") {
    CHECK(bspline_M3(1.5) == 0.75);
    CHECK(bspline_M3(1.0) == 0.5);
    CHECK(bspline_M3(3.0) == 0.0);
    CHECK(bspline_M3_deriv(1.0) == 1.0);
    auto zero = bspline_bump(2, 2.0, 2, {0, 0, 0, 0});
    std::vector<double> x{0.4, 0.6};
    CHECK(zero.value(x) == 0.0);
    CHECK_THROWS_AS(bspline_bump(2, 2.0, 2, {1, 0}), InvalidParameter);

    for (double alpha : {1.5, 2.0})
        for (int d = 1; d <= 3; ++d) {
            const int mb = 3;
            std::vector<int> y{1, 0, 1, 1, 0, 1, 0, 1};
            auto f = bspline_bump(d, alpha, mb, y);
            std::vector<double> g(static_cast<std::size_t>(d));
            for (int j = 1; j <= 8; ++j) {
                std::vector<double> p(static_cast<std::size_t>(d), 0.5);
                p[0] = std::ldexp(j - 2.0 / 3.0, -mb);
                f.gradient(p, g);
                const double want = 4.0 * y[static_cast<std::size_t>(j - 1)] * std::pow(2.0, -(alpha - 1.0) * mb) * std::pow(24.0, -d);
                CHECK(g[0] == doctest::Approx(want).epsilon(1e-12));
            }
        }
}

TEST_CASE("lacunary constant is a valid bound") {
    // Dense check of sup_h h^{-alpha} |Delta_h^2 g| against the certified bound.
    for (double alpha : {1.25, 1.5, 2.0}) {
        const int K = 8;
        const double A = lacunary_difference_bound(alpha, K);
        auto g = [&](double t) {
            double v = 0.0;
            for (int k = 0; k <= K; ++k)
                v += std::exp2(-alpha * k) * std::sin(std::numbers::pi * std::ldexp(t, k));
            return v;
        };
        double seen = 0.0;
        for (int i = 1; i <= 400; ++i) {
            const double h = std::exp2(-14.0 + 13.0 * i / 400.0);
            for (int j = 0; j <= 200; ++j) {
                const double x = (1.0 - 2.0 * h) * j / 200.0;
                seen = std::max(seen, std::abs(g(x) - 2.0 * g(x + h) + g(x + 2.0 * h)) / std::pow(h, alpha));
            }
        }
        CHECK(seen <= A);
        CHECK(seen >= 0.5 * A);
    }
}

TEST_CASE("unit-ball members pass the seminorm estimate") {
    for (int d = 1; d <= 3; ++d)
        for (double alpha : {1.5, 2.0})
            for (const auto& f : members(d, alpha))
                if (f.certified) {
                    INFO(f.id << " d=" << d << " alpha=" << alpha);
                    CHECK(mixed_holder_seminorm_lb(f.oracle(), d, alpha, 20000) <= 1.0 + 1e-6);
                }
    CHECK(mixed_holder_seminorm_lb(poly_tent(2).oracle(), 2, 2.0, 20000) <= 1.0 + 1e-9);
    // power_tent saturates its norm; the estimate should come close.
    CHECK(mixed_holder_seminorm_lb(power_tent(1, 1.5).oracle(), 1, 1.5, 20000) >= 0.5);
}

TEST_CASE("coefficient decay") {
    for (int d = 1; d <= 4; ++d)
        for (double alpha : {1.5, 2.0})
            for (const auto& f : members(d, alpha)) {
                if (!f.certified)
                    continue;
                auto R = build_R(f.oracle(), enumerate_smolyak(d, d <= 2 ? 8 : 6));
                for (const auto& t : R.terms()) {
                    const double bound = std::exp2(-(alpha + 1.0) * d - alpha * t.index.k.l1());
                    INFO(f.id);
                    CHECK(std::abs(t.coefficient) <= bound * (1.0 + 1e-12));
                }
            }
}

TEST_CASE("truncated series") {
    auto f = truncated_series(2, 1.5, 4, 1);
    CHECK_FALSE(f.certified);
    auto g = truncated_series(2, 1.5, 4, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x{u(rng), u(rng)};
        CHECK(f.value(x) == g.value(x));
    }
    auto R = build_R(f.oracle(), enumerate_smolyak(2, 6));
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> x{u(rng), u(rng)};
        CHECK(std::abs(R.eval(x) - f.value(x)) <= 1e-14);
    }
    // Coefficient identity: finer stencils never see coarser kinks.
    double worst = 0.0;
    for (const auto& t : R.terms())
        worst = std::max(worst, std::abs(t.coefficient - f.lambda_exact(t.index.k, t.index.s)));
    CHECK(worst <= 1e-15);
}
