#include "fabernet/metrics.hpp"

#include "fabernet/error.hpp"
#include "fabernet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fabernet {

DiffFunction zero_function(int d) {
    return DiffFunction{d, [](std::span<const double>, std::span<double> g) {
                            std::fill(g.begin(), g.end(), 0.0);
                            return 0.0;
                        }};
}

DiffFunction from_expansion(std::shared_ptr<const FaberExpansion> e) {
    const int d = e->dim();
    return DiffFunction{d, [e](std::span<const double> x, std::span<double> g) {
                            return g.empty() ? e->eval(x) : e->eval_grad(x, g);
                        }};
}

DiffFunction from_network(std::shared_ptr<const ReluNetwork> net) {
    const int d = net->input_dim();
    return DiffFunction{d, [net](std::span<const double> x, std::span<double> g) {
                            return g.empty() ? net->eval(x) : net->eval_grad(x, g);
                        }};
}

std::string to_string(Scheme s) {
    return s == Scheme::tensor_midpoint ? "tensor" : "mc";
}

Scheme parse_scheme(const std::string& text) {
    if (text == "tensor" || text == "tensor-midpoint")
        return Scheme::tensor_midpoint;
    if (text == "mc" || text == "monte-carlo")
        return Scheme::monte_carlo;
    throw InvalidParameter("unknown quadrature scheme '" + text + "'");
}

QuadratureSpec QuadratureSpec::tensor(int n) {
    QuadratureSpec q;
    q.scheme = Scheme::tensor_midpoint;
    q.n = n;
    return q;
}

QuadratureSpec QuadratureSpec::monte_carlo(std::size_t N, std::uint64_t seed) {
    QuadratureSpec q;
    q.scheme = Scheme::monte_carlo;
    q.N = N;
    q.seed = seed;
    return q;
}

QuadratureSpec QuadratureSpec::default_for(int d, int level) {
    if (d <= 2)
        return tensor(1 << std::clamp(level + 2, 1, 24 / std::max(d, 1)));
    return monte_carlo(1'000'000, 42);
}

void QuadratureSpec::validate(int d) const {
    if (d < 1)
        throw InvalidParameter("quadrature dimension must be >= 1");
    if (scheme == Scheme::tensor_midpoint) {
        if (d > 3)
            throw InvalidParameter("tensor quadrature is limited to d <= 3");
        if (n < 2)
            throw InvalidParameter("tensor quadrature needs n >= 2");
        if (std::pow(static_cast<double>(n), d) > 4e9)
            throw InvalidParameter("tensor quadrature grid too large");
    } else if (N < 1000) {
        throw InvalidParameter("Monte Carlo quadrature needs N >= 1000");
    }
}

std::size_t QuadratureSpec::node_count(int d) const {
    if (scheme == Scheme::monte_carlo)
        return N;
    std::size_t c = 1;
    for (int i = 0; i < d; ++i)
        c *= static_cast<std::size_t>(n);
    return c;
}

namespace {

constexpr std::size_t kChunk = 4096;

void fill_chunk(const QuadratureSpec& q, int d, std::size_t chunk, std::size_t begin, std::size_t count,
                std::vector<double>& pts) {
    pts.resize(count * static_cast<std::size_t>(d));
    if (q.scheme == Scheme::tensor_midpoint) {
        const auto n = static_cast<std::size_t>(q.n);
        const double h = 1.0 / static_cast<double>(q.n);
        for (std::size_t c = 0; c < count; ++c) {
            std::size_t idx = begin + c;
            for (int i = d - 1; i >= 0; --i) {
                pts[c * d + static_cast<std::size_t>(i)] = (static_cast<double>(idx % n) + 0.5) * h;
                idx /= n;
            }
        }
    } else {
        std::seed_seq seq{static_cast<std::uint32_t>(q.seed), static_cast<std::uint32_t>(q.seed >> 32),
                          static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : pts)
            v = u(rng);
    }
}

} // namespace

void for_each_node_chunk(const QuadratureSpec& q, int d,
                         const std::function<void(std::size_t, std::size_t, std::size_t, std::span<const double>)>& body) {
    q.validate(d);
    const std::size_t total = q.node_count(d);
    parallel_chunks(total, kChunk, [&](std::size_t chunk, std::size_t b, std::size_t e) {
        std::vector<double> pts;
        fill_chunk(q, d, chunk, b, e - b, pts);
        body(chunk, b, e - b, pts);
    });
}

const NormEstimate& ErrorReport::w1p_at(double p) const {
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps[i] == p)
            return w1p[i];
    throw InvalidParameter("p not measured in this report");
}

const NormEstimate& ErrorReport::lp_at(double p) const {
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps[i] == p)
            return lp[i];
    throw InvalidParameter("p not measured in this report");
}

Tabulation tabulate(const DiffFunction& g, const QuadratureSpec& q) {
    Tabulation t;
    t.dim = g.dim;
    t.quadrature = q;
    const std::size_t total = q.node_count(g.dim);
    const auto d = static_cast<std::size_t>(g.dim);
    t.value.resize(total);
    t.grad.resize(total * d);
    for_each_node_chunk(q, g.dim, [&](std::size_t, std::size_t b, std::size_t count, std::span<const double> pts) {
        for (std::size_t c = 0; c < count; ++c)
            t.value[b + c] = g.fn(pts.subspan(c * d, d), std::span<double>(t.grad).subspan((b + c) * d, d));
    });
    return t;
}

namespace {

double pow_abs(double v, double p) {
    v = std::abs(v);
    if (p == 1.0)
        return v;
    if (p == 2.0)
        return v * v;
    return std::pow(v, p);
}

using LhsAt = std::function<double(std::size_t node, std::span<const double> x, std::span<double> grad)>;

ErrorReport measure_core(int d, const QuadratureSpec& q, const LhsAt& lhs, const DiffFunction& g2,
                         const std::vector<double>& ps) {
    if (g2.dim != d)
        throw InvalidParameter("dimension mismatch between measured functions");
    for (double p : ps)
        if (!(p >= 1.0))
            throw InvalidParameter("p must be >= 1");
    q.validate(d);
    const std::size_t total = q.node_count(d);
    const std::size_t nchunks = (total + kChunk - 1) / kChunk;
    const std::size_t np = ps.size();
    const auto ud = static_cast<std::size_t>(d);
    // Per chunk and per p: sum and sum of squares of the W and L integrands.
    std::vector<std::vector<double>> sw(np, std::vector<double>(nchunks)), sw2 = sw, sl = sw, sl2 = sw;
    std::vector<double> gmax(nchunks, 0.0), vmax(nchunks, 0.0);

    for_each_node_chunk(q, d, [&](std::size_t chunk, std::size_t b, std::size_t count, std::span<const double> pts) {
        std::vector<double> g1(ud), g2v(ud), diff(ud);
        std::vector<double> aw(np, 0.0), aw2(np, 0.0), al(np, 0.0), al2(np, 0.0);
        double gm = 0.0, vm = 0.0;
        for (std::size_t c = 0; c < count; ++c) {
            const auto x = pts.subspan(c * ud, ud);
            const double v1 = lhs(b + c, x, g1);
            const double v2 = g2.fn(x, g2v);
            const double e = v1 - v2;
            for (std::size_t i = 0; i < ud; ++i) {
                diff[i] = g1[i] - g2v[i];
                gm = std::max(gm, std::abs(diff[i]));
            }
            vm = std::max(vm, std::abs(e));
            for (std::size_t k = 0; k < np; ++k) {
                if (std::isinf(ps[k]))
                    continue;
                double w = 0.0;
                for (std::size_t i = 0; i < ud; ++i)
                    w += pow_abs(diff[i], ps[k]);
                const double l = pow_abs(e, ps[k]);
                aw[k] += w;
                aw2[k] += w * w;
                al[k] += l;
                al2[k] += l * l;
            }
        }
        for (std::size_t k = 0; k < np; ++k) {
            sw[k][chunk] = aw[k];
            sw2[k][chunk] = aw2[k];
            sl[k][chunk] = al[k];
            sl2[k][chunk] = al2[k];
        }
        gmax[chunk] = gm;
        vmax[chunk] = vm;
    });

    ErrorReport rep;
    rep.dim = d;
    rep.quadrature = q;
    rep.nodes = total;
    rep.ps = ps;
    rep.sup = *std::max_element(vmax.begin(), vmax.end());
    const double gsup = *std::max_element(gmax.begin(), gmax.end());
    const double n = static_cast<double>(total);
    auto finish = [&](double p, const std::vector<double>& s, const std::vector<double>& s2) {
        NormEstimate est;
        const double mean = pairwise_sum(s) / n;
        est.value = std::pow(mean, 1.0 / p);
        if (q.scheme == Scheme::monte_carlo && mean > 0.0) {
            const double var = std::max(0.0, pairwise_sum(s2) / n - mean * mean) * n / (n - 1.0);
            const double se_mean = std::sqrt(var / n);
            est.std_error = std::pow(mean, 1.0 / p - 1.0) / p * se_mean;
        }
        return est;
    };
    for (std::size_t k = 0; k < np; ++k) {
        if (std::isinf(ps[k])) {
            rep.w1p.push_back(NormEstimate{gsup, 0.0});
            rep.lp.push_back(NormEstimate{rep.sup, 0.0});
        } else {
            rep.w1p.push_back(finish(ps[k], sw[k], sw2[k]));
            rep.lp.push_back(finish(ps[k], sl[k], sl2[k]));
        }
    }
    return rep;
}

} // namespace

ErrorReport measure(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q,
                    const std::vector<double>& ps) {
    return measure_core(g1.dim, q, [&](std::size_t, std::span<const double> x, std::span<double> g) { return g1.fn(x, g); },
                        g2, ps);
}

ErrorReport measure(const Tabulation& g1, const DiffFunction& g2, const std::vector<double>& ps) {
    const auto d = static_cast<std::size_t>(g1.dim);
    return measure_core(
        g1.dim, g1.quadrature,
        [&](std::size_t node, std::span<const double>, std::span<double> g) {
            std::copy_n(g1.grad.begin() + static_cast<std::ptrdiff_t>(node * d), d, g.begin());
            return g1.value[node];
        },
        g2, ps);
}

NormEstimate w1p_estimate(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p) {
    return measure(g1, g2, q, {p}).w1p.front();
}

double w1p_error(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p) {
    return w1p_estimate(g1, g2, q, p).value;
}

double lp_error(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p) {
    return measure(g1, g2, q, {p}).lp.front().value;
}

double mixed_holder_seminorm_lb(const FunctionOracle& f, int d, double alpha, std::size_t samples, std::uint64_t seed) {
    if (d < 1)
        throw InvalidParameter("dimension must be >= 1");
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw InvalidParameter("alpha must lie in (0, 2]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lo = std::log2(0x1p-14), hi = std::log2(0.5);
    const double eps = std::numeric_limits<double>::epsilon();
    const auto ud = static_cast<std::size_t>(d);
    std::vector<double> x(ud), h(ud), pt(ud);
    std::vector<char> in_u(ud);
    std::vector<int> o(ud);
    double best = 0.0;
    for (std::size_t it = 0; it < samples; ++it) {
        double scale = 1.0;
        for (std::size_t i = 0; i < ud; ++i) {
            in_u[i] = (rng() & 1u) != 0;
            if (in_u[i]) {
                // Dyadic h and x keep every stencil coordinate exact.
                h[i] = std::ldexp(std::round(std::ldexp(std::exp2(lo + (hi - lo) * unit(rng)), 40)), -40);
                x[i] = std::ldexp(std::floor(std::ldexp((1.0 - 2.0 * h[i]) * unit(rng), 40)), -40);
                scale *= std::pow(h[i], -alpha);
            } else {
                h[i] = 0.0;
                x[i] = unit(rng);
            }
        }
        std::fill(o.begin(), o.end(), 0);
        double sum = 0.0, mag = 0.0;
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < ud; ++i) {
                pt[i] = in_u[i] ? x[i] + o[i] * h[i] : x[i];
                if (in_u[i])
                    w *= o[i] == 1 ? -2.0 : 1.0;
            }
            const double v = w * f(pt);
            sum += v;
            mag += std::abs(v);
            std::size_t i = ud;
            while (i > 0 && (!in_u[i - 1] || o[i - 1] == 2)) {
                o[i - 1] = 0;
                --i;
            }
            if (i == 0)
                break;
            ++o[i - 1];
        }
        const double slack = (4.0 * d + 8.0) * eps * mag;
        best = std::max(best, std::max(0.0, std::abs(sum) - slack) * scale);
    }
    return best;
}

} // namespace fabernet
