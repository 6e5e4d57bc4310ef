#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/metrics.hpp"
#include "fabernet/sampling.hpp"

#include <cmath>

using namespace fabernet;

namespace {

DiffFunction hat_function(int d) {
    return DiffFunction{d, [d](std::span<const double> x, std::span<double> g) {
                            MultiLevel k(std::vector<int>(static_cast<std::size_t>(d), 0));
                            MultiPosition s(std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
                            if (!g.empty()) {
                                auto gr = tensor_hat_grad(k, s, x);
                                std::copy(gr.begin(), gr.end(), g.begin());
                            }
                            return tensor_hat_eval(k, s, x);
                        }};
}

} // namespace

TEST_CASE("identical arguments give zero") {
    auto f = poly_tent(2).diff();
    for (double p : {1.0, 2.0, double(INFINITY)}) {
        CHECK(w1p_error(f, f, QuadratureSpec::tensor(32), p) == 0.0);
        CHECK(lp_error(f, f, QuadratureSpec::monte_carlo(2000), p) == 0.0);
    }
}

TEST_CASE("univariate hat norms") {
    auto hat = hat_function(1);
    auto zero = zero_function(1);
    for (double p : {1.0, 2.0, 3.0, double(INFINITY)})
        CHECK(w1p_error(hat, zero, QuadratureSpec::tensor(64), p) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(lp_error(hat, zero, QuadratureSpec::tensor(64), 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    // Midpoints (i + 1/2)/n with n = 64 never hit the peak; n odd does.
    CHECK(lp_error(hat, zero, QuadratureSpec::tensor(65), INFINITY) == 1.0);
}

TEST_CASE("bivariate hat: tensor scheme against Monte Carlo") {
    auto hat = hat_function(2);
    auto zero = zero_function(2);
    // Each partial is 2 phi(y) in magnitude: ||.||_2^2 = 2 * 4 * (1/3).
    const double exact = std::sqrt(8.0 / 3.0);
    CHECK(w1p_error(hat, zero, QuadratureSpec::tensor(256), 2.0) == doctest::Approx(exact).epsilon(1e-5));
    auto mc = w1p_estimate(hat, zero, QuadratureSpec::monte_carlo(1'000'000, 5), 2.0);
    CHECK(mc.std_error > 0.0);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.std_error);
}

TEST_CASE("tensor midpoint exactness on dyadic piecewise-linear data") {
    // 1-D: the derivative is constant on every cell, so midpoints integrate |.|^p exactly.
    auto f1 = poly_tent(1);
    auto R1 = std::make_shared<FaberExpansion>(build_R(f1.oracle(), enumerate_smolyak(1, 3)));
    for (double p : {1.0, 2.0}) {
        const double a = w1p_error(from_expansion(R1), zero_function(1), QuadratureSpec::tensor(32), p);
        const double b = w1p_error(from_expansion(R1), zero_function(1), QuadratureSpec::tensor(1024), p);
        CHECK(a == doctest::Approx(b).epsilon(1e-13));
    }
    // 2-D: partials are linear in the other coordinate, so only convergence holds.
    auto f = poly_tent(2);
    auto R = std::make_shared<FaberExpansion>(build_R(f.oracle(), enumerate_smolyak(2, 3)));
    auto g = from_expansion(R);
    auto zero = zero_function(2);
    const double a = w1p_error(g, zero, QuadratureSpec::tensor(32), 2.0);
    const double b = w1p_error(g, zero, QuadratureSpec::tensor(256), 2.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-3));
    auto mc = w1p_estimate(g, zero, QuadratureSpec::monte_carlo(200'000, 3), 2.0);
    CHECK(std::abs(mc.value - b) <= 3.0 * mc.std_error);
}

TEST_CASE("Monte Carlo convergence and determinism") {
    auto f = lacunary(2, 1.5).diff();
    auto g = poly_tent(2).diff();
    auto a = w1p_estimate(f, g, QuadratureSpec::monte_carlo(100'000, 8), 2.0);
    auto b = w1p_estimate(f, g, QuadratureSpec::monte_carlo(200'000, 8), 2.0);
    CHECK(std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_error, b.std_error));
    auto c = w1p_estimate(f, g, QuadratureSpec::monte_carlo(100'000, 8), 2.0);
    CHECK(a.value == c.value);
}

TEST_CASE("triangle inequality") {
    auto f = poly_tent(2).diff();
    auto g = lacunary(2, 1.5).diff();
    auto h = bspline_bump(2, 2.0).diff();
    auto q = QuadratureSpec::tensor(64);
    for (double p : {1.0, 2.0, double(INFINITY)})
        CHECK(w1p_error(f, h, q, p) <= 1.01 * (w1p_error(f, g, q, p) + w1p_error(g, h, q, p)));
}

TEST_CASE("measure reports every p on the same nodes") {
    auto f = poly_tent(3).diff();
    auto z = zero_function(3);
    auto q = QuadratureSpec::tensor(16);
    auto rep = measure(f, z, q, {1.0, 2.0, double(INFINITY)});
    CHECK(rep.nodes == 16 * 16 * 16);
    CHECK(rep.w1p_at(2.0).value == w1p_error(f, z, q, 2.0));
    CHECK(rep.sup == rep.lp_at(INFINITY).value);
    auto tab = tabulate(f, q);
    auto rep2 = measure(tab, z, {1.0, 2.0, double(INFINITY)});
    CHECK(rep2.w1p_at(1.0).value == rep.w1p_at(1.0).value);
}

TEST_CASE("quadrature validation") {
    CHECK_THROWS_AS(QuadratureSpec::tensor(8).validate(4), InvalidParameter);
    CHECK_THROWS_AS(QuadratureSpec::monte_carlo(10).validate(2), InvalidParameter);
    CHECK_THROWS_AS(QuadratureSpec::tensor(1).validate(2), InvalidParameter);
    CHECK(QuadratureSpec::default_for(2, 4).scheme == Scheme::tensor_midpoint);
    CHECK(QuadratureSpec::default_for(2, 4).n == 64);
    CHECK(QuadratureSpec::default_for(3, 4).scheme == Scheme::monte_carlo);
    CHECK(parse_scheme("tensor") == Scheme::tensor_midpoint);
    CHECK(parse_scheme("mc") == Scheme::monte_carlo);
}

TEST_CASE("mixed seminorm lower estimate") {
    auto zero = [](std::span<const double>) { return 0.0; };
    CHECK(mixed_holder_seminorm_lb(zero, 2, 2.0, 2000) == 0.0);
    auto poly1 = [](std::span<const double> x) { return x[0] * (1.0 - x[0]); };
    const double est = mixed_holder_seminorm_lb(poly1, 1, 2.0, 20000);
    CHECK(est <= 2.0);
    CHECK(est >= 1.99);
    CHECK(mixed_holder_seminorm_lb(poly_tent(2).oracle(), 2, 2.0, 20000) <= 1.0 + 1e-9);
}
