#include "fabernet/sampling.hpp"

#include "fabernet/error.hpp"
#include "fabernet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace fabernet {

void ApproxConfig::validate() const {
    if (d < 1)
        throw InvalidParameter("dimension must be >= 1");
    if (!(alpha > 1.0 && alpha <= 2.0))
        throw InvalidParameter("alpha must lie in (1, 2]");
    if (!(beta > alpha))
        throw InvalidParameter("beta must be strictly greater than alpha");
    if (!(p >= 1.0))
        throw InvalidParameter("p must be >= 1");
    if (eps && !(*eps > 0.0))
        throw InvalidParameter("epsilon must be positive");
}

double ApproxConfig::p_factor(double e) const {
    if (std::isinf(p))
        return 1.0;
    return std::pow(p + 1.0, e / p);
}

double ApproxConfig::K1() const {
    return 2.0 * p_factor(1.0) * std::max(2.0 * beta / (beta - 1.0), 1.0 / (std::exp2(alpha - 1.0) - 1.0));
}

double ApproxConfig::notch_factor() const {
    return 1.0 - std::exp2(-(beta - alpha) / (beta - 1.0));
}

double theorem31_bound(const ApproxConfig& cfg, int m) {
    cfg.validate();
    if (m < 0)
        throw InvalidParameter("level m must be >= 0");
    const double dd = cfg.d;
    return cfg.K1() * dd * dd * std::exp2(-m * (cfg.alpha - 1.0)) /
           (cfg.p_factor(dd) * std::exp2((cfg.alpha + 1.0) * dd) * std::pow(cfg.notch_factor(), dd));
}

double qk_norm_bound(const ApproxConfig& cfg, const MultiLevel& k) {
    cfg.validate();
    double norm_p = 0.0;
    if (std::isinf(cfg.p)) {
        norm_p = std::exp2(k.linf());
    } else {
        for (int v : k.levels)
            norm_p += std::exp2(cfg.p * v);
        norm_p = std::pow(norm_p, 1.0 / cfg.p);
    }
    const double dd = cfg.d;
    return std::exp2(-cfg.alpha * k.l1() + 1.0) * norm_p /
           (cfg.p_factor(dd - 1.0) * std::exp2((cfg.alpha + 1.0) * dd));
}

namespace {

std::vector<double> level_coefficients(const MultiLevel& k, int top, const std::function<double(std::span<const std::int64_t>)>& at) {
    // at() receives numerators over 2^top. Stencil order matches lambda().
    const std::size_t d = k.dim();
    std::size_t n = 1;
    for (std::size_t i = 0; i < d; ++i)
        n *= static_cast<std::size_t>(positions_per_axis(k[i]));
    std::vector<double> out(n);
    std::vector<std::int64_t> s(d, 0), num(d);
    std::vector<int> o(d);
    static constexpr double w3[3] = {-0.5, 1.0, -0.5};
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::fill(o.begin(), o.end(), 0);
        double sum = 0.0;
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                num[i] = (2 * s[i] + o[i]) << (top - k[i] - 1);
                w *= w3[o[i]];
            }
            sum += w * at(num);
            std::size_t i = d;
            while (i > 0 && o[i - 1] == 2) {
                o[i - 1] = 0;
                --i;
            }
            if (i == 0)
                break;
            ++o[i - 1];
        }
        out[idx] = sum;
        for (std::size_t i = d; i-- > 0;) {
            if (++s[i] < positions_per_axis(k[i]))
                break;
            s[i] = 0;
        }
    }
    return out;
}

void insert_level(FaberExpansion& e, const MultiLevel& k, const std::vector<double>& coef) {
    std::vector<std::int64_t> s(k.dim(), 0);
    for (double c : coef) {
        e.set(FaberIndex{k, MultiPosition(s)}, c);
        for (std::size_t i = k.dim(); i-- > 0;) {
            if (++s[i] < positions_per_axis(k[i]))
                break;
            s[i] = 0;
        }
    }
}

} // namespace

FaberExpansion build_R(const FunctionOracle& f, const IndexSet& set) {
    if (set.entries.empty())
        throw InvalidParameter("index set must be nonempty");
    const int d = set.dim;
    int top = 0;
    for (const auto& k : set.entries) {
        if (!k.nonnegative())
            throw InvalidParameter("sampling levels must be >= 0");
        top = std::max(top, k.linf() + 1);
    }
    const int bits = top + 1;
    const bool memo = d * bits <= 64;

    std::unordered_map<std::uint64_t, double> cache;
    if (memo) {
        const auto grid = grid_points(set);
        std::vector<double> values(grid.points.size());
        parallel_chunks(values.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                values[i] = f(grid.points[i].x);
        });
        cache.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t key = 0;
            for (const auto& c : grid.points[i].coords)
                key = (key << bits) | static_cast<std::uint64_t>(c.num << (top - c.exp));
            cache.emplace(key, values[i]);
        }
    }

    std::vector<std::vector<double>> coefs(set.entries.size());
    parallel_chunks(set.entries.size(), 1, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> pt(d);
        for (std::size_t j = b; j < e; ++j) {
            coefs[j] = level_coefficients(set.entries[j], top, [&](std::span<const std::int64_t> num) {
                if (memo) {
                    std::uint64_t key = 0;
                    for (auto v : num)
                        key = (key << bits) | static_cast<std::uint64_t>(v);
                    return cache.at(key);
                }
                for (int i = 0; i < d; ++i)
                    pt[i] = std::ldexp(static_cast<double>(num[i]), -top);
                return f(pt);
            });
        }
    });

    FaberExpansion out(d);
    for (std::size_t j = 0; j < set.entries.size(); ++j)
        insert_level(out, set.entries[j], coefs[j]);
    return out;
}

FaberExpansion build_R(const FunctionOracle& f, const ApproxConfig& cfg, int m) {
    cfg.validate();
    return build_R(f, enumerate_notched(cfg.d, cfg.beta, m));
}

FaberExpansion qk_layer(const FunctionOracle& f, const MultiLevel& k) {
    if (k.dim() == 0 || !k.nonnegative())
        throw InvalidParameter("q_k requires levels >= 0");
    IndexSet set;
    set.dim = static_cast<int>(k.dim());
    set.m = k.l1();
    set.entries = {k};
    return build_R(f, set);
}

} // namespace fabernet
