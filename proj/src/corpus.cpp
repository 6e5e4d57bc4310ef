#include "fabernet/corpus.hpp"

#include "fabernet/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace fabernet {

FunctionOracle CorpusFunction::oracle() const {
    return value;
}

DiffFunction CorpusFunction::diff() const {
    auto v = value;
    auto g = gradient;
    return DiffFunction{dim, [v, g](std::span<const double> x, std::span<double> grad) {
                            if (!grad.empty())
                                g(x, grad);
                            return v(x);
                        }};
}

namespace {

void check_dim(int d) {
    if (d < 1)
        throw InvalidParameter("corpus dimension must be >= 1");
}

void check_alpha(double alpha) {
    if (!(alpha > 1.0 && alpha <= 2.0))
        throw InvalidParameter("corpus smoothness alpha must lie in (1, 2]");
}

// f = c prod g(x_i) with gradient c g'(x_j) prod_{i != j} g(x_i).
CorpusFunction separable(std::string id, int d, double c, std::function<double(double)> g,
                         std::function<double(double)> dg) {
    CorpusFunction f;
    f.id = std::move(id);
    f.dim = d;
    f.value = [d, c, g](std::span<const double> x) {
        if (static_cast<int>(x.size()) != d)
            throw InvalidParameter("corpus function: dimension mismatch");
        double v = c;
        for (double xi : x)
            v *= g(xi);
        return v;
    };
    f.gradient = [d, c, g, dg](std::span<const double> x, std::span<double> grad) {
        if (static_cast<int>(x.size()) != d || static_cast<int>(grad.size()) != d)
            throw InvalidParameter("corpus gradient: dimension mismatch");
        for (int j = 0; j < d; ++j) {
            double v = c * dg(x[static_cast<std::size_t>(j)]);
            for (int i = 0; i < d; ++i)
                if (i != j)
                    v *= g(x[static_cast<std::size_t>(i)]);
            grad[static_cast<std::size_t>(j)] = v;
        }
    };
    return f;
}

} // namespace

CorpusFunction poly_tent(int d) {
    check_dim(d);
    auto f = separable(
        "poly_tent", d, std::ldexp(1.0, -d), [](double t) { return t * (1.0 - t); }, [](double t) { return 1.0 - 2.0 * t; });
    f.alpha_lo = 1.0;
    f.alpha_hi = 2.0;
    f.certified = true;
    f.norm_bound = 1.0;
    f.lambda_exact = [](const MultiLevel& k, const MultiPosition&) {
        double v = 1.0;
        for (int ki : k.levels) {
            if (ki < 0)
                return 0.0;
            v *= std::ldexp(1.0, -2 * ki - 3);
        }
        return v;
    };
    return f;
}

CorpusFunction power_tent(int d, double alpha) {
    check_dim(d);
    check_alpha(alpha);
    const double c = std::pow(std::exp2(alpha) - 2.0, -d);
    auto f = separable(
        "power_tent", d, c, [alpha](double t) { return t - std::pow(t, alpha); },
        [alpha](double t) { return 1.0 - alpha * std::pow(t, alpha - 1.0); });
    f.alpha_lo = 1.0;
    f.alpha_hi = alpha;
    f.certified = true;
    f.norm_bound = 1.0;
    return f;
}

double lacunary_difference_bound(double alpha, int K) {
    check_alpha(alpha);
    if (K < 0 || K > 40)
        throw InvalidParameter("lacunary order must lie in [0, 40]");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    // |Delta_h^2 sin(w x)| <= min(4, w^2 h^2); each term is min(increasing, decreasing) in h.
    auto sup_term = [&](int k, double a, double b) {
        const double w2 = pi2 * std::ldexp(1.0, 2 * k);
        const double scale = std::exp2(-alpha * k);
        auto inc = [&](double h) { return scale * w2 * std::pow(h, 2.0 - alpha); };
        auto dec = [&](double h) { return scale * 4.0 * std::pow(h, -alpha); };
        const double hstar = 2.0 / std::sqrt(w2);
        if (hstar <= a)
            return dec(a);
        if (hstar >= b)
            return inc(b);
        return inc(hstar);
    };
    const int pieces = 4096;
    const double lo = -60.0, hi = -1.0;
    double best = 0.0;
    double a = 0.0;
    for (int i = 0; i <= pieces; ++i) {
        const double b = std::exp2(lo + (hi - lo) * i / pieces);
        double s = 0.0;
        for (int k = 0; k <= K; ++k)
            s += sup_term(k, a, b);
        best = std::max(best, s);
        a = b;
    }
    return best * (1.0 + 1e-9);
}

namespace {

// sin(pi u) for u in [0, 2), reduced exactly so integers give exact zeros.
double sin_pi(double u) {
    if (u >= 1.0)
        return -sin_pi(u - 1.0);
    if (u > 0.5)
        u = 1.0 - u;
    return std::sin(std::numbers::pi * u);
}

} // namespace

CorpusFunction lacunary(int d, double alpha, int K) {
    check_dim(d);
    check_alpha(alpha);
    const double A = lacunary_difference_bound(alpha, K);
    double G = 0.0;
    for (int k = 0; k <= K; ++k)
        G += std::exp2(-alpha * k);
    const double c = std::pow(std::max(A, G), -d);
    auto g = [alpha, K](double t) {
        double v = 0.0;
        for (int k = 0; k <= K; ++k)
            v += std::exp2(-alpha * k) * sin_pi(std::fmod(std::ldexp(t, k), 2.0));
        return v;
    };
    auto dg = [alpha, K](double t) {
        double v = 0.0;
        for (int k = 0; k <= K; ++k)
            v += std::exp2((1.0 - alpha) * k) * std::numbers::pi *
                 std::cos(std::numbers::pi * std::fmod(std::ldexp(t, k), 2.0));
        return v;
    };
    auto f = separable("lacunary", d, c, g, dg);
    f.alpha_lo = 1.0;
    f.alpha_hi = alpha;
    f.certified = true;
    f.norm_bound = 1.0;
    f.feature_level = K;
    return f;
}

double bspline_M3(double x) {
    if (x < 0.0 || x >= 3.0)
        return 0.0;
    if (x < 1.0)
        return 0.5 * x * x;
    if (x < 2.0)
        return 0.5 * (-2.0 * x * x + 6.0 * x - 3.0);
    return 0.5 * (3.0 - x) * (3.0 - x);
}

double bspline_M3_deriv(double x) {
    if (x < 0.0 || x >= 3.0)
        return 0.0;
    if (x < 1.0)
        return x;
    if (x < 2.0)
        return -2.0 * x + 3.0;
    return x - 3.0;
}

CorpusFunction bspline_bump(int d, double alpha, int m_b, const std::vector<int>& y) {
    check_dim(d);
    check_alpha(alpha);
    if (m_b < 0 || m_b > 30)
        throw InvalidParameter("bump level must lie in [0, 30]");
    if (y.size() != (std::size_t{1} << m_b))
        throw InvalidParameter("bump selector must have 2^m_b entries");
    for (int v : y)
        if (v != 0 && v != 1)
            throw InvalidParameter("bump selector entries must be 0 or 1");
    auto psi = [](double t) { return bspline_M3(3.0 * t); };
    auto dpsi = [](double t) { return 3.0 * bspline_M3_deriv(3.0 * t); };
    const double c = std::pow(18.0, -d) * std::exp2(-alpha * m_b);
    const double n = std::ldexp(1.0, m_b);
    // First axis: sum_j y_j psi(2^m x - j + 1); only the cell containing x contributes.
    auto first = [=](double t, bool deriv) {
        const double u = n * t;
        const auto j0 = static_cast<long long>(std::floor(u));
        double v = 0.0;
        for (long long j = j0; j <= j0 + 1; ++j) { // psi_{m,j} lives on [(j-1)/n, j/n]
            if (j < 1 || j > static_cast<long long>(y.size()) || y[static_cast<std::size_t>(j - 1)] == 0)
                continue;
            const double arg = u - static_cast<double>(j) + 1.0;
            v += deriv ? n * dpsi(arg) : psi(arg);
        }
        return v;
    };
    CorpusFunction f;
    f.id = "bspline_bump";
    f.dim = d;
    f.value = [=](std::span<const double> x) {
        if (static_cast<int>(x.size()) != d)
            throw InvalidParameter("corpus function: dimension mismatch");
        double v = c * first(x[0], false);
        for (int i = 1; i < d; ++i)
            v *= psi(x[static_cast<std::size_t>(i)]);
        return v;
    };
    f.gradient = [=](std::span<const double> x, std::span<double> grad) {
        if (static_cast<int>(x.size()) != d || static_cast<int>(grad.size()) != d)
            throw InvalidParameter("corpus gradient: dimension mismatch");
        for (int j = 0; j < d; ++j) {
            double v = c * (j == 0 ? first(x[0], true) : first(x[0], false));
            for (int i = 1; i < d; ++i) {
                const double t = x[static_cast<std::size_t>(i)];
                v *= i == j ? dpsi(t) : psi(t);
            }
            grad[static_cast<std::size_t>(j)] = v;
        }
    };
    f.alpha_lo = 1.0;
    f.alpha_hi = 2.0;
    f.certified = true;
    f.norm_bound = 1.0;
    f.feature_level = m_b + 2;
    return f;
}

CorpusFunction bspline_bump(int d, double alpha) {
    std::vector<int> y(8);
    for (std::size_t j = 0; j < y.size(); ++j)
        y[j] = j % 2 == 0 ? 1 : 0;
    return bspline_bump(d, alpha, 3, y);
}

CorpusFunction truncated_series(int d, double alpha, int m_t, std::uint64_t seed) {
    check_dim(d);
    check_alpha(alpha);
    auto e = std::make_shared<FaberExpansion>(d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto set = enumerate_smolyak(d, m_t);
    for (const auto& k : set.entries) {
        const double amp = std::exp2(-(alpha + 1.0) * d - alpha * k.l1());
        std::vector<std::int64_t> s(k.dim(), 0);
        while (true) {
            e->set(FaberIndex{k, MultiPosition(s)}, amp * u(rng));
            std::size_t i = k.dim();
            while (i > 0 && s[i - 1] + 1 == positions_per_axis(k[i - 1])) {
                s[i - 1] = 0;
                --i;
            }
            if (i == 0)
                break;
            ++s[i - 1];
        }
    }
    CorpusFunction f;
    f.id = "truncated_series";
    f.dim = d;
    f.value = [e](std::span<const double> x) { return e->eval(x); };
    f.gradient = [e](std::span<const double> x, std::span<double> g) { e->eval_grad(x, g); };
    f.lambda_exact = [e](const MultiLevel& k, const MultiPosition& s) { return e->coefficient(FaberIndex{k, s}); };
    f.alpha_lo = alpha;
    f.alpha_hi = alpha;
    f.certified = false;
    f.feature_level = m_t + 1;
    return f;
}

CorpusFunction zero_corpus(int d) {
    check_dim(d);
    auto f = separable("zero", d, 0.0, [](double) { return 0.0; }, [](double) { return 0.0; });
    f.value = [d](std::span<const double> x) {
        if (static_cast<int>(x.size()) != d)
            throw InvalidParameter("corpus function: dimension mismatch");
        return 0.0;
    };
    f.alpha_lo = 1.0;
    f.alpha_hi = 2.0;
    f.certified = true;
    f.norm_bound = 0.0;
    f.lambda_exact = [](const MultiLevel&, const MultiPosition&) { return 0.0; };
    return f;
}

std::vector<CorpusInfo> corpus_list() {
    return {
        {"poly_tent", 1, 0, 1.0, 2.0, true, "2^-d prod x(1-x)"},
        {"power_tent", 1, 0, 1.0, 2.0, true, "(2^a-2)^-d prod (x - x^a); norm 1 at a"},
        {"lacunary", 1, 0, 1.0, 2.0, true, "normalized prod of sum_k 2^-ak sin(2^k pi x), K=8"},
        {"bspline_bump", 1, 0, 1.0, 2.0, true, "quadratic B-spline bumps, m_b=3, alternating y"},
        {"truncated_series", 1, 0, 1.0, 2.0, false, "random Faber series over |k|_1 <= 4, seed 1"},
        {"zero", 1, 0, 1.0, 2.0, true, "identically 0"},
    };
}

CorpusFunction make_corpus(const std::string& id, int d, double alpha) {
    if (id == "poly_tent")
        return poly_tent(d);
    if (id == "power_tent")
        return power_tent(d, alpha);
    if (id == "lacunary")
        return lacunary(d, alpha);
    if (id == "bspline_bump")
        return bspline_bump(d, alpha);
    if (id == "truncated_series")
        return truncated_series(d, alpha, 4, 1);
    if (id == "zero")
        return zero_corpus(d);
    throw InvalidParameter("unknown corpus function '" + id + "'");
}

} // namespace fabernet
