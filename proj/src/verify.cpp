#include "fabernet/verify.hpp"

#include "fabernet/constructors.hpp"
#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/metrics.hpp"
#include "fabernet/parallel.hpp"
#include "fabernet/relunet.hpp"
#include "fabernet/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace fabernet {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string p_str(double p) {
    return std::isinf(p) ? "inf" : short_num(p);
}

double beta_for(const ExperimentConfig& cfg, double alpha, std::size_t i) {
    return cfg.betas.empty() ? alpha + 1.0 : cfg.betas[i];
}

std::size_t beta_count(const ExperimentConfig& cfg) {
    return cfg.betas.empty() ? 1 : cfg.betas.size();
}

// Collects rows and derives the criterion status.
struct Recorder {
    CriterionResult result;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Recorder(int id, std::string name) {
        result.id = id;
        result.name = std::move(name);
    }

    bool add(std::string cell, double measured, double bound, bool ok) {
        result.rows.push_back({result.id, std::move(cell), measured, bound, ok ? Status::pass : Status::fail});
        return ok;
    }

    void skip(std::string cell, double measured, double bound) {
        result.rows.push_back({result.id, std::move(cell), measured, bound, Status::skip});
    }

    CriterionResult finish(std::string summary) {
        std::size_t fails = 0, skips = 0;
        for (const auto& r : result.rows) {
            fails += r.status == Status::fail;
            skips += r.status == Status::skip;
        }
        if (fails > 0)
            result.status = Status::fail;
        else if (!result.rows.empty() && skips == result.rows.size())
            result.status = Status::skip;
        else
            result.status = Status::pass;
        if (fails > 0)
            summary += "; " + std::to_string(fails) + " of " + std::to_string(result.rows.size()) + " rows failed";
        result.summary = std::move(summary);
        result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return std::move(result);
    }
};

std::vector<double> random_point(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x)
        v = u(rng);
    return x;
}

double product_of(std::span<const double> x, std::size_t skip = static_cast<std::size_t>(-1)) {
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (i != skip)
            v *= x[i];
    return v;
}

std::string compile_cell(int d, double alpha, double beta, double p) {
    return "d=" + std::to_string(d) + " alpha=" + short_num(alpha) + " beta=" + short_num(beta) + " p=" + p_str(p);
}

} // namespace

std::string to_string(Status s) {
    switch (s) {
    case Status::pass:
        return "PASS";
    case Status::fail:
        return "FAIL";
    case Status::skip:
        return "SKIP";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    for (int c : criteria)
        if (c < 1 || c > 10)
            throw InvalidParameter("criterion ids must lie in 1..10");
    auto check_alpha = [](double a) {
        if (!(a > 1.0 && a <= 2.0))
            throw InvalidParameter("alpha must lie in (1, 2], got " + short_num(a));
    };
    auto check_p = [](double p) {
        if (!(p >= 1.0))
            throw InvalidParameter("p must be >= 1, got " + short_num(p));
    };
    for (int d : dims)
        if (d < 2 || d > 6)
            throw InvalidParameter("sampling dimensions must lie in [2, 6]");
    for (double a : alphas) {
        check_alpha(a);
        for (double b : betas)
            if (!(b > a))
                throw InvalidParameter("beta must exceed alpha (beta=" + short_num(b) + ", alpha=" + short_num(a) + ")");
    }
    for (double p : ps)
        check_p(p);
    for (int m : ms)
        if (m < 0 || m > 12)
            throw InvalidParameter("levels m must lie in [0, 12]");
    for (const auto& id : corpus)
        (void)make_corpus(id, 2, 2.0);
    (void)make_corpus(rate_function, 2, 2.0);
    (void)make_corpus(rate_function_alpha2, 2, 2.0);
    (void)make_corpus(compile_function, 2, 2.0);
    for (const auto& id : architecture_corpus)
        (void)make_corpus(id, 2, 2.0);
    for (int d : compile_dims)
        if (d < 2 || d > 6)
            throw InvalidParameter("compiler dimensions must lie in [2, 6]");
    for (int d : narrow_dims)
        if (d < 2 || d > 6)
            throw InvalidParameter("narrow-layout dimensions must lie in [2, 6]");
    for (double a : compile_alphas) {
        check_alpha(a);
        for (double b : compile_betas)
            if (!(b > a))
                throw InvalidParameter("beta must exceed alpha (beta=" + short_num(b) + ", alpha=" + short_num(a) + ")");
    }
    for (double p : compile_ps)
        check_p(p);
    for (double e : eps)
        if (!(e > 0.0))
            throw InvalidParameter("eps must be positive");
    for (double e : sweep_eps)
        if (!(e > 0.0))
            throw InvalidParameter("eps must be positive");
    if (mc_samples < 1000)
        throw InvalidParameter("Monte Carlo sample count must be >= 1000");
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidParameter("linear fit needs at least two paired values");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

double fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// 1: R interpolates f on its grid.
CriterionResult check_interpolation(const ExperimentConfig&) {
    Recorder rec(1, "interpolation identity");
    double worst = 0.0;
    std::size_t cells = 0, points = 0;
    for (const auto& info : corpus_list())
        for (int d = 1; d <= 3; ++d)
            for (double alpha : {1.5, 2.0}) {
                const auto f = make_corpus(info.id, d, alpha);
                const auto oracle = f.oracle();
                for (double beta : {alpha + 0.5, alpha + 1.0}) {
                    double cell_worst = 0.0;
                    for (int m = 0; m <= 6; ++m) {
                        const auto set = enumerate_notched(d, beta, m);
                        const auto R = build_R(oracle, set);
                        const auto grid = grid_points(set);
                        for (const auto& p : grid.points)
                            cell_worst = std::max(cell_worst, std::abs(R.eval(p.x) - f.value(p.x)));
                        points += grid.points.size();
                        ++cells;
                    }
                    worst = std::max(worst, cell_worst);
                    rec.add("f=" + info.id + " d=" + std::to_string(d) + " alpha=" + short_num(alpha) +
                                " beta=" + short_num(beta) + " m=0..6",
                            cell_worst, 1e-12, cell_worst <= 1e-12);
                }
            }
    return rec.finish("max residual " + short_num(worst) + " over " + std::to_string(cells) + " grids, " +
                      std::to_string(points) + " points");
}

// 2: |lambda| <= 2^{-(alpha+1)d} 2^{-alpha|k|_1} for certified members.
CriterionResult check_coefficient_decay(const ExperimentConfig&) {
    Recorder rec(2, "coefficient decay");
    double worst = 0.0;
    std::size_t coefficients = 0;
    for (const auto& info : corpus_list()) {
        if (!info.certified)
            continue;
        for (int d = 1; d <= 4; ++d)
            for (double alpha : {1.5, 2.0}) {
                const auto f = make_corpus(info.id, d, alpha);
                const auto R = build_R(f.oracle(), enumerate_smolyak(d, 8));
                double ratio = 0.0;
                for (const auto& t : R.terms()) {
                    const double bound = std::exp2(-(alpha + 1.0) * d - alpha * t.index.k.l1());
                    ratio = std::max(ratio, std::abs(t.coefficient) / bound);
                }
                coefficients += R.size();
                worst = std::max(worst, ratio);
                // power_tent attains the bound exactly; allow one part in 1e12 of rounding.
                rec.add("f=" + info.id + " d=" + std::to_string(d) + " alpha=" + short_num(alpha) + " |k|_1<=8",
                        ratio, 1.0 + 1e-12, ratio <= 1.0 + 1e-12);
            }
    }
    return rec.finish("max |lambda|/bound " + num(worst) + " over " + std::to_string(coefficients) + " coefficients");
}

// 3: measured ||f - R|| against the closed-form bound, plus the fitted decay rate.
CriterionResult check_sampling_error(const ExperimentConfig& cfg) {
    Recorder rec(3, "sampling error bound");
    const int max_m = cfg.ms.empty() ? 0 : *std::max_element(cfg.ms.begin(), cfg.ms.end());
    double worst_ratio = 0.0;
    std::size_t cells = 0;
    std::vector<std::string> rate_notes;
    for (double alpha : cfg.alphas)
        for (std::size_t bi = 0; bi < beta_count(cfg); ++bi) {
            const double beta = beta_for(cfg, alpha, bi);
            for (int d : cfg.dims)
                for (const auto& id : cfg.corpus) {
                    const auto f = make_corpus(id, d, alpha);
                    if (!f.certified || alpha > f.alpha_hi || alpha < f.alpha_lo)
                        continue;
                    QuadratureSpec q;
                    if (d <= 2) {
                        const int level = std::min(11, std::max(max_m + 2, f.feature_level + 3));
                        q = QuadratureSpec::tensor(1 << level);
                    } else {
                        q = QuadratureSpec::monte_carlo(cfg.mc_samples, cfg.seed);
                    }
                    const auto tab = tabulate(f.diff(), q);
                    std::map<double, std::vector<std::pair<double, double>>> series; // p -> (m, error)
                    for (int m : cfg.ms) {
                        ApproxConfig ac{d, alpha, beta, 2.0, std::nullopt};
                        auto R = std::make_shared<FaberExpansion>(build_R(f.oracle(), ac, m));
                        const auto rep = measure(tab, from_expansion(R), cfg.ps);
                        for (std::size_t i = 0; i < cfg.ps.size(); ++i) {
                            ac.p = cfg.ps[i];
                            const double bound = theorem31_bound(ac, m);
                            const auto& est = rep.w1p[i];
                            const bool tensor = q.scheme == Scheme::tensor_midpoint;
                            const double allowed = tensor || std::isinf(ac.p) ? bound * 1.01 : bound + 3.0 * est.std_error;
                            worst_ratio = std::max(worst_ratio, est.value / bound);
                            rec.add("f=" + id + " d=" + std::to_string(d) + " alpha=" + short_num(alpha) + " beta=" +
                                        short_num(beta) + " p=" + p_str(ac.p) + " m=" + std::to_string(m) + " " +
                                        to_string(q.scheme),
                                    est.value, allowed, est.value <= allowed);
                            series[ac.p].emplace_back(m, est.value);
                            ++cells;
                        }
                    }
                    const std::string& rate_id = alpha < 2.0 ? cfg.rate_function : cfg.rate_function_alpha2;
                    if (id != rate_id || cfg.ms.size() < 2)
                        continue;
                    for (const auto& [p, pts] : series) {
                        std::vector<double> xs, ys;
                        for (const auto& [m, e] : pts) {
                            xs.push_back(m);
                            ys.push_back(std::log2(e));
                        }
                        const auto fit = linear_fit(xs, ys);
                        const double target = -(alpha - 1.0);
                        rec.add("rate f=" + id + " d=" + std::to_string(d) + " alpha=" + short_num(alpha) +
                                    " beta=" + short_num(beta) + " p=" + p_str(p),
                                fit.slope, target, std::abs(fit.slope - target) <= 0.3);
                        rate_notes.push_back(short_num(fit.slope));
                    }
                }
        }
    std::string rates;
    for (const auto& r : rate_notes)
        rates += (rates.empty() ? "" : ",") + r;
    return rec.finish(std::to_string(cells) + " cells, max measured/bound " + short_num(worst_ratio) +
                      "; fitted rates [" + rates + "]");
}

// 4: cardinality and exponential-sum bounds by exact enumeration.
CriterionResult check_cardinality(const ExperimentConfig&) {
    Recorder rec(4, "cardinality bounds");
    const auto d33 = cardinality_D(enumerate_notched(2, 2.0, 3));
    rec.add("|D^2_2(3)|", static_cast<double>(d33), 33.0, d33 == 33);
    double worst_d = 0.0, worst_g = 0.0, worst_e = 0.0;
    for (int d = 1; d <= 6; ++d)
        for (double beta : {1.5, 2.0, 3.0}) {
            double rd = 0.0, rg = 0.0;
            for (int m = 0; m <= 10; ++m) {
                const auto set = enumerate_notched(d, beta, m);
                rd = std::max(rd, static_cast<double>(cardinality_D(set)) / cardinality_D_bound(d, beta, m));
                rg = std::max(rg, static_cast<double>(grid_size(set)) / grid_size_bound(d, beta, m));
            }
            worst_d = std::max(worst_d, rd);
            worst_g = std::max(worst_g, rg);
            const std::string cell = "d=" + std::to_string(d) + " beta=" + short_num(beta) + " m=0..10";
            rec.add("|D| " + cell, rd, 1.0, rd <= 1.0);
            rec.add("|G| " + cell, rg, 1.0, rg <= 1.0);
        }
    for (int d = 1; d <= 6; ++d)
        for (double p : {1.0, 2.0, inf}) {
            double r = 0.0;
            for (int l = 0; l <= 12; ++l) {
                const auto e = exp_sum_check(d, l, p);
                r = std::max(r, e.exact / e.bound);
            }
            worst_e = std::max(worst_e, r);
            rec.add("exp-sum d=" + std::to_string(d) + " p=" + p_str(p) + " l=0..12", r, 1.0, r <= 1.0);
        }
    return rec.finish("|D^2_2(3)|=" + std::to_string(d33) + ", max ratios |D| " + short_num(worst_d) + ", |G| " +
                      short_num(worst_g) + ", exp-sum " + short_num(worst_e));
}

// 5: product network accuracy, zero preservation and size scaling.
CriterionResult check_product_nets(const ExperimentConfig& cfg) {
    Recorder rec(5, "product network contracts");
    const std::size_t samples = 100'000;
    std::vector<double> normalized;
    double worst_v = 0.0, worst_g = 0.0;
    for (int d : {2, 3, 4, 6})
        for (double delta : {0.1, 0.01, 0.001}) {
            const auto p = build_product_net(d, delta);
            const auto& net = p.net;
            std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(d * 1000) + static_cast<std::uint64_t>(1.0 / delta));
            double ev = 0.0, eg = 0.0, zero_out = 0.0;
            std::vector<double> g(static_cast<std::size_t>(d));
            for (std::size_t t = 0; t < samples; ++t) {
                auto x = random_point(rng, d);
                const double out = net.eval_grad(x, g);
                ev = std::max(ev, std::abs(out - product_of(x)));
                for (std::size_t j = 0; j < x.size(); ++j)
                    eg = std::max(eg, std::abs(g[j] - product_of(x, j)));
                x[static_cast<std::size_t>(rng() % static_cast<unsigned>(d))] = 0.0;
                zero_out = std::max(zero_out, std::abs(net.eval(x)));
            }
            worst_v = std::max(worst_v, ev);
            worst_g = std::max(worst_g, eg);
            const std::string cell = "d=" + std::to_string(d) + " delta=" + short_num(delta);
            rec.add("value " + cell, ev, delta, ev <= delta);
            rec.add("derivative " + cell, eg, delta, eg <= delta);
            rec.add("zero output " + cell, zero_out, 1e-15, zero_out <= 1e-15);
            const auto st = net.stats();
            normalized.push_back(static_cast<double>(st.W) / (d * std::log2(d / delta)));
            rec.add("width " + cell, st.N_w, 12.0 * d, st.N_w <= 12 * d);
        }
    const double hi = *std::max_element(normalized.begin(), normalized.end());
    const double lo = *std::min_element(normalized.begin(), normalized.end());
    rec.add("W/(d log2(d/delta)) max/min", hi / lo, 4.0, hi / lo <= 4.0);
    return rec.finish("max value error " + short_num(worst_v) + ", derivative error " + short_num(worst_g) +
                      ", W/(d log2(d/delta)) in [" + short_num(lo) + ", " + short_num(hi) + "]");
}

// 6: hat network accuracy, support and size accounting.
CriterionResult check_hat_nets(const ExperimentConfig& cfg) {
    Recorder rec(6, "hat network contracts");
    const std::size_t inside = 20'000, outside = 5'000;
    std::size_t hats = 0;
    double worst_v = 0.0, worst_g = 0.0;
    for (int d = 1; d <= 4; ++d)
        for (double delta : {0.1, 0.01, 0.001}) {
            const auto product = build_product_net(d, delta);
            const auto pst = product.net.stats();
            std::mt19937_64 rng(cfg.seed * 31 + static_cast<std::uint64_t>(d * 7) + static_cast<std::uint64_t>(1.0 / delta));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double ev = 0.0, eg = 0.0, leak = 0.0;
            bool sizes = true;
            for (int h = 0; h < 20; ++h) {
                std::vector<int> kv;
                std::vector<std::int64_t> sv;
                for (int i = 0; i < d; ++i) {
                    kv.push_back(static_cast<int>(rng() % 7));
                    sv.push_back(static_cast<std::int64_t>(rng() % (std::uint64_t{1} << kv.back())));
                }
                const MultiLevel k(kv);
                const MultiPosition s(sv);
                const auto net = build_hat_net(k, s, product);
                const auto st = net.stats();
                sizes = sizes && st.L == pst.L + 2 && st.W <= pst.W + 7 * static_cast<std::size_t>(d);
                std::vector<double> x(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
                for (std::size_t t = 0; t < inside; ++t) {
                    for (int i = 0; i < d; ++i)
                        x[static_cast<std::size_t>(i)] = std::ldexp(static_cast<double>(sv[static_cast<std::size_t>(i)]) + u(rng), -kv[static_cast<std::size_t>(i)]);
                    const double out = net.eval_grad(x, g);
                    ev = std::max(ev, std::abs(out - tensor_hat_eval(k, s, x)));
                    const auto gh = tensor_hat_grad(k, s, x);
                    for (int j = 0; j < d; ++j)
                        eg = std::max(eg, std::abs(g[static_cast<std::size_t>(j)] - gh[static_cast<std::size_t>(j)]) /
                                              std::ldexp(1.0, kv[static_cast<std::size_t>(j)] + 1));
                }
                for (std::size_t t = 0; t < outside; ++t) {
                    // Pick an axis and put that coordinate outside (or on the edge of) its interval.
                    for (int i = 0; i < d; ++i)
                        x[static_cast<std::size_t>(i)] = u(rng);
                    const auto j = static_cast<std::size_t>(rng() % static_cast<unsigned>(d));
                    const double a = std::ldexp(static_cast<double>(sv[j]), -kv[j]);
                    const double b = std::ldexp(static_cast<double>(sv[j] + 1), -kv[j]);
                    const double gap = 1.0 - (b - a);
                    if (gap <= 0.0 || t % 10 == 0) {
                        x[j] = t % 20 == 0 ? a : b;
                    } else {
                        const double r = u(rng) * gap;
                        x[j] = r < a ? r : b + (r - a);
                    }
                    if (tensor_hat_eval(k, s, x) == 0.0)
                        leak = std::max(leak, std::abs(net.eval(x)));
                }
                ++hats;
            }
            worst_v = std::max(worst_v, ev);
            worst_g = std::max(worst_g, eg);
            const std::string cell = "d=" + std::to_string(d) + " delta=" + short_num(delta) + " 20 hats";
            rec.add("value " + cell, ev, delta, ev <= delta);
            rec.add("derivative/2^(k_j+1) " + cell, eg, delta, eg <= delta);
            rec.add("support leak " + cell, leak, 0.0, leak == 0.0);
            rec.add("size recount " + cell, sizes ? 1.0 : 0.0, 1.0, sizes);
        }
    return rec.finish(std::to_string(hats) + " hats, max value error " + short_num(worst_v) +
                      ", max scaled derivative error " + short_num(worst_g));
}

// 7: end-to-end error budget and architecture independence.
CriterionResult check_end_to_end(const ExperimentConfig& cfg) {
    Recorder rec(7, "end-to-end compiler");
    std::string notes;
    for (int d : cfg.compile_dims)
        for (double alpha : cfg.compile_alphas)
            for (double beta : cfg.compile_betas)
                for (double p : cfg.compile_ps)
                    for (double e : cfg.eps) {
                        const ApproxConfig ac{d, alpha, beta, p, e};
                        const std::string cell = compile_cell(d, alpha, beta, p) + " eps=" + short_num(e);
                        const double e0 = epsilon0(ac);
                        if (e >= e0) {
                            rec.skip(cell + " (eps0=" + num(e0) + ")", e, e0);
                            notes += " skip eps=" + short_num(e) + " (eps0=" + short_num(e0) + ")";
                            continue;
                        }
                        const auto f = make_corpus(cfg.compile_function, d, alpha);
                        const auto c = compile(f.oracle(), ac);
                        auto net = std::make_shared<const ReluNetwork>(c.net);
                        auto R = std::make_shared<const FaberExpansion>(c.expansion);
                        const QuadratureSpec q = d <= 2 ? QuadratureSpec::tensor(1 << std::min(11, std::max(c.plan.m + 2, f.feature_level + 3)))
                                                        : QuadratureSpec::monte_carlo(cfg.mc_samples, cfg.seed);
                        const bool mc = q.scheme == Scheme::monte_carlo && !std::isinf(p);
                        const auto tab = tabulate(f.diff(), q);
                        const auto total = measure(tab, from_network(net), {p}).w1p[0];
                        const auto first = measure(tab, from_expansion(R), {p}).w1p[0];
                        const auto second = w1p_estimate(from_expansion(R), from_network(net), q, p);
                        auto slack = [&](const NormEstimate& est) { return mc ? 3.0 * est.std_error : 0.0; };
                        rec.add("||f-N|| " + cell, total.value, e + slack(total), total.value <= e + slack(total));
                        rec.add("||f-R|| " + cell, first.value, e / 2 + slack(first), first.value <= e / 2 + slack(first));
                        rec.add("||R-N|| " + cell, second.value, e / 2 + slack(second), second.value <= e / 2 + slack(second));
                        notes += " eps=" + short_num(e) + ": " + short_num(total.value) + " (" + short_num(first.value) +
                                 " + " + short_num(second.value) + ")";

                        // Architecture: identical dims; weight positions drawn from one pattern.
                        std::vector<ReluNetwork> nets;
                        std::vector<std::string> ids;
                        for (const auto& id : cfg.architecture_corpus) {
                            const auto g = make_corpus(id, d, alpha);
                            const auto cg = compile(g.oracle(), ac);
                            bool all_nonzero = true;
                            for (const auto& t : cg.expansion.terms())
                                all_nonzero = all_nonzero && t.coefficient != 0.0;
                            nets.push_back(cg.net);
                            ids.push_back(id + (all_nonzero ? "" : "*"));
                        }
                        std::size_t ref = 0;
                        for (std::size_t i = 0; i < nets.size(); ++i)
                            if (nets[i].stats().W > nets[ref].stats().W)
                                ref = i;
                        for (std::size_t i = 0; i < nets.size(); ++i) {
                            const bool full = ids[i].back() != '*';
                            const bool ok = nets[i].dims() == nets[ref].dims() &&
                                            (full ? nets[i].same_pattern(nets[ref]) : nets[i].pattern_subset_of(nets[ref]));
                            rec.add("architecture " + ids[i] + " vs " + ids[ref] + " " + cell, ok ? 1.0 : 0.0, 1.0, ok);
                        }
                    }
    return rec.finish("errors" + notes);
}

// 8: size and depth scaling over an eps sweep (statistics only).
CriterionResult check_scaling(const ExperimentConfig& cfg) {
    Recorder rec(8, "scaling laws");
    const auto sweep = report_sweep(cfg, false);
    std::map<std::tuple<int, double, double, double>, std::vector<const SweepRow*>> groups;
    for (const auto& r : sweep.rows)
        if (!r.skipped)
            groups[{r.d, r.alpha, r.beta, r.p}].push_back(&r);
    std::string notes;
    for (const auto& [key, rows] : groups) {
        const auto [d, alpha, beta, p] = key;
        const std::string cell = compile_cell(d, alpha, beta, p);
        if (rows.size() < 3) {
            rec.skip("too few eps below eps0 " + cell, static_cast<double>(rows.size()), 3.0);
            continue;
        }
        std::vector<double> x, lw, l;
        for (const auto* r : rows) {
            x.push_back(std::log2(1.0 / r->eps));
            lw.push_back(std::log2(static_cast<double>(r->W)));
            l.push_back(r->L);
        }
        const auto fw = linear_fit(x, lw);
        const auto fl = linear_fit(x, l);
        const double target = 1.0 / (alpha - 1.0);
        rec.add("log2 W slope " + cell, fw.slope, target, std::abs(fw.slope - target) <= 0.5);
        rec.add("depth R^2 " + cell, fl.r2, 0.95, fl.r2 >= 0.95);
        notes += " " + cell + ": slope " + short_num(fw.slope) + ", depth R^2 " + short_num(fl.r2);
    }
    for (const auto& r : sweep.rows)
        if (r.skipped)
            rec.skip(compile_cell(r.d, r.alpha, r.beta, r.p) + " eps=" + short_num(r.eps) + " (eps0=" + num(r.eps0) + ")",
                     r.eps, r.eps0);
    return rec.finish(notes.empty() ? "no cells" : notes.substr(1) + "; K2=" + short_num(sweep.K2) + " K3=" +
                                                       short_num(sweep.K3));
}

// 9: narrow layout equals the wide one; width linear in d.
CriterionResult check_narrow(const ExperimentConfig& cfg) {
    Recorder rec(9, "narrow layout");
    const std::size_t samples = 10'000;
    std::vector<double> per_d;
    std::vector<int> ds;
    std::string notes;
    for (int d : cfg.narrow_dims) {
        const double alpha = cfg.compile_alphas.front(), beta = cfg.compile_betas.front(), p = cfg.compile_ps.front();
        ApproxConfig ac{d, alpha, beta, p, std::nullopt};
        const double e0 = epsilon0(ac);
        ac.eps = e0 / 2.0;
        const std::string cell = compile_cell(d, alpha, beta, p) + " eps=eps0/2=" + short_num(e0 / 2.0);
        const auto f = make_corpus(cfg.compile_function, d, alpha);
        const auto wide = compile(f.oracle(), ac);
        const auto narrow = compile_narrow(f.oracle(), ac);
        std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(d));
        double worst = 0.0;
        for (std::size_t t = 0; t < samples; ++t) {
            const auto x = random_point(rng, d);
            const double a = wide.net.eval(x), b = narrow.net.eval(x);
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
        rec.add("output equality " + cell, worst, 1e-9, worst <= 1e-9);
        const auto sw = wide.net.stats(), sn = narrow.net.stats();
        rec.add("depth " + cell, sn.L, sw.L, sn.L >= sw.L);
        per_d.push_back(static_cast<double>(sn.N_w) / d);
        ds.push_back(d);
        notes += " d=" + std::to_string(d) + ": terms " + std::to_string(wide.terms) + ", N_w " + std::to_string(sn.N_w) +
                 " (wide " + std::to_string(sw.N_w) + "), L " + std::to_string(sn.L);
    }
    if (!per_d.empty()) {
        // One constant must cover every d; the gadget width is at most 12d plus d + 1 channels.
        const double K4 = *std::max_element(per_d.begin(), per_d.end());
        for (std::size_t i = 0; i < ds.size(); ++i)
            rec.add("N_w/d d=" + std::to_string(ds[i]), per_d[i], K4, per_d[i] <= K4);
        rec.add("fitted K4", K4, 14.0, K4 <= 14.0);
        notes += "; K4=" + short_num(K4);
    }
    return rec.finish(notes.empty() ? "no cells" : notes.substr(1));
}

namespace {

ReluNetwork random_network(std::mt19937_64& rng, int d, int depth, int width) {
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    std::vector<Layer> layers;
    int cols = d;
    for (int l = 0; l < depth; ++l) {
        const int rows = l + 1 == depth ? 1 : 1 + static_cast<int>(rng() % static_cast<unsigned>(width));
        Layer layer(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c)
                if (rng() % 3 != 0)
                    layer.add(r, c, w(rng));
            if (rng() % 2)
                layer.set_bias(r, w(rng));
        }
        layers.push_back(std::move(layer));
        cols = rows;
    }
    return ReluNetwork(std::move(layers));
}

// Source rows first, then ReLU rows, then one collation row accumulating ReLU outputs.
SpecialNetwork random_special(std::mt19937_64& rng, int d, int depth, int width) {
    std::uniform_real_distribution<double> w(-2.0, 2.0);
    std::vector<Layer> layers;
    std::vector<std::vector<char>> linear;
    int cols = d, prev_relu = 0;
    bool prev_coll = false;
    for (int l = 0; l + 1 < depth; ++l) {
        const int relu = 1 + static_cast<int>(rng() % static_cast<unsigned>(width));
        const bool coll = l > 0;
        const int rows = d + relu + (coll ? 1 : 0);
        Layer layer(rows, cols);
        for (int i = 0; i < d; ++i)
            layer.add(i, l == 0 ? i : i, 1.0);
        for (int r = 0; r < relu; ++r) {
            for (int c = 0; c < (l == 0 ? d : d + prev_relu); ++c)
                if (rng() % 2)
                    layer.add(d + r, c, w(rng));
            layer.set_bias(d + r, w(rng));
        }
        if (coll) {
            const int cr = d + relu;
            if (prev_coll)
                layer.add(cr, d + prev_relu, 1.0);
            for (int c = d; c < d + prev_relu; ++c)
                layer.add(cr, c, w(rng));
            layer.set_bias(cr, w(rng));
        }
        std::vector<char> flags(static_cast<std::size_t>(rows), 0);
        for (int i = 0; i < d; ++i)
            flags[static_cast<std::size_t>(i)] = 1;
        if (coll)
            flags.back() = 1;
        layers.push_back(std::move(layer));
        linear.push_back(std::move(flags));
        cols = rows;
        prev_relu = relu;
        prev_coll = coll;
    }
    Layer out(1, cols);
    for (int c = d; c < cols; ++c)
        out.add(0, c, w(rng));
    out.set_bias(0, w(rng));
    layers.push_back(std::move(out));
    return SpecialNetwork{ReluNetwork(std::move(layers)), d, std::move(linear)};
}

} // namespace

// 10: combinator identities and size accounting.
CriterionResult check_combinators(const ExperimentConfig& cfg) {
    Recorder rec(10, "combinator exactness");
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> lam(-3.0, 3.0);
    double worst_par = 0.0, worst_sp = 0.0;
    int size_ok = 0, shape_ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const int d = 1 + static_cast<int>(rng() % 4);
        const int n = 1 + static_cast<int>(rng() % 5);
        std::vector<ReluNetwork> nets;
        std::vector<double> lambdas;
        for (int j = 0; j < n; ++j) {
            nets.push_back(random_network(rng, d, 2 + static_cast<int>(rng() % 5), 6));
            lambdas.push_back(lam(rng));
        }
        const auto par = parallelize(nets, lambdas);
        double err = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const auto x = random_point(rng, d);
            double want = 0.0, scale = 1.0;
            for (int j = 0; j < n; ++j) {
                const double v = nets[static_cast<std::size_t>(j)].eval(x);
                want += lambdas[static_cast<std::size_t>(j)] * v;
                scale += std::abs(lambdas[static_cast<std::size_t>(j)] * v);
            }
            err = std::max(err, std::abs(par.eval(x) - want) / scale);
        }
        worst_par = std::max(worst_par, err);
        const bool size = par.stats().W <= parallelize_size_bound(nets);
        size_ok += size;
        rec.add("parallelize trial " + std::to_string(t) + " (n=" + std::to_string(n) + ")", err, 1e-9, err <= 1e-9);
        rec.add("parallelize size trial " + std::to_string(t), static_cast<double>(par.stats().W),
                static_cast<double>(parallelize_size_bound(nets)), size);

        const auto sp = random_special(rng, d, 3 + static_cast<int>(rng() % 5), 5);
        const auto st = special_to_standard(sp);
        double serr = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const auto x = random_point(rng, d);
            const double want = sp.eval(x);
            serr = std::max(serr, std::abs(st.eval(x) - want) / std::max(1.0, std::abs(want)));
        }
        worst_sp = std::max(worst_sp, serr);
        const bool shape = st.depth() == sp.net.depth() && st.stats().N_w == sp.net.stats().N_w;
        shape_ok += shape;
        rec.add("special_to_standard trial " + std::to_string(t), serr, 1e-9, serr <= 1e-9);
        rec.add("special_to_standard shape trial " + std::to_string(t), shape ? 1.0 : 0.0, 1.0, shape);
    }
    return rec.finish(std::to_string(trials) + " trials: parallelize max rel error " + short_num(worst_par) +
                      ", special max rel error " + short_num(worst_sp) + ", size bound held " +
                      std::to_string(size_ok) + "/" + std::to_string(trials) + ", L and N_w preserved " +
                      std::to_string(shape_ok) + "/" + std::to_string(trials));
}

CriterionResult run_criterion(int id, const ExperimentConfig& cfg) {
    switch (id) {
    case 1:
        return check_interpolation(cfg);
    case 2:
        return check_coefficient_decay(cfg);
    case 3:
        return check_sampling_error(cfg);
    case 4:
        return check_cardinality(cfg);
    case 5:
        return check_product_nets(cfg);
    case 6:
        return check_hat_nets(cfg);
    case 7:
        return check_end_to_end(cfg);
    case 8:
        return check_scaling(cfg);
    case 9:
        return check_narrow(cfg);
    case 10:
        return check_combinators(cfg);
    default:
        throw InvalidParameter("unknown criterion " + std::to_string(id));
    }
}

int VerifyReport::exit_code() const {
    for (const auto& r : results)
        if (r.status == Status::fail)
            return 1;
    return 0;
}

void write_check_rows(std::ostream& out, const std::vector<CriterionResult>& results) {
    out << "criterion,cell,measured,bound,status\n";
    for (const auto& r : results)
        for (const auto& row : r.rows)
            out << row.criterion << ",\"" << row.cell << "\"," << num(row.measured) << ',' << num(row.bound) << ','
                << to_string(row.status) << '\n';
}

VerifyReport verify_all(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    VerifyReport report;
    for (int id : cfg.criteria) {
        auto r = run_criterion(id, cfg);
        if (log) {
            char secs[32];
            std::snprintf(secs, sizeof secs, "%.1f", r.seconds);
            *log << to_string(r.status) << " criterion " << r.id << " " << r.name << " (" << secs << " s): " << r.summary
                 << '\n'
                 << std::flush;
        }
        report.results.push_back(std::move(r));
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(std::filesystem::path(cfg.out_dir) / "verify.csv");
    if (!csv)
        throw std::runtime_error("cannot write verify.csv in " + cfg.out_dir);
    write_check_rows(csv, report.results);
    return report;
}

SweepResult report_sweep(const ExperimentConfig& cfg, bool measure_error) {
    cfg.validate();
    struct Cell {
        int d;
        double alpha, beta, p, eps;
    };
    std::vector<Cell> cells;
    for (int d : cfg.compile_dims)
        for (double alpha : cfg.compile_alphas)
            for (double beta : cfg.compile_betas)
                for (double p : cfg.compile_ps)
                    for (double e : cfg.sweep_eps)
                        cells.push_back({d, alpha, beta, p, e});
    std::vector<SweepRow> rows(cells.size());
    // Cells are independent; each one writes only its own row.
    parallel_chunks(cells.size(), 1, [&](std::size_t, std::size_t b, std::size_t) {
        const auto& c = cells[b];
        SweepRow& r = rows[b];
        r.d = c.d;
        r.alpha = c.alpha;
        r.beta = c.beta;
        r.p = c.p;
        r.eps = c.eps;
        r.err_w1p = std::numeric_limits<double>::quiet_NaN();
        const ApproxConfig ac{c.d, c.alpha, c.beta, c.p, c.eps};
        r.eps0 = epsilon0(ac);
        r.B = constant_B(ac);
        if (c.eps >= r.eps0) {
            r.skipped = true;
            return;
        }
        const auto f = make_corpus(cfg.compile_function, c.d, c.alpha);
        const auto compiled = compile(f.oracle(), ac);
        const auto st = compiled.net.stats();
        r.m = compiled.plan.m;
        r.delta = compiled.plan.delta;
        r.terms = compiled.terms;
        r.W = st.W;
        r.L = st.L;
        r.N_w = st.N_w;
        r.bound_thm31 = theorem31_bound(ac, r.m);
        if (measure_error) {
            auto net = std::make_shared<const ReluNetwork>(compiled.net);
            const QuadratureSpec q = c.d <= 2 ? QuadratureSpec::tensor(1 << std::min(11, std::max(r.m + 2, f.feature_level + 3)))
                                              : QuadratureSpec::monte_carlo(cfg.mc_samples, cfg.seed);
            r.err_w1p = w1p_error(f.diff(), from_network(net), q, c.p);
        }
    });
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.d, a.alpha, a.beta, a.p, b.eps) < std::tie(b.d, b.alpha, b.beta, b.p, a.eps);
    });
    SweepResult out;
    out.rows = std::move(rows);
    std::vector<double> xl, yl, xw, yw;
    for (const auto& r : out.rows) {
        if (r.skipped)
            continue;
        const double le = std::log2(1.0 / r.eps);
        xl.push_back(std::log2(static_cast<double>(r.d)) * le);
        yl.push_back(r.L);
        xw.push_back(std::pow(r.B, -r.d) * std::pow(r.eps, -1.0 / (r.alpha - 1.0)) * le);
        yw.push_back(static_cast<double>(r.W));
    }
    out.K2 = fit_through_origin(xl, yl);
    out.K3 = fit_through_origin(xw, yw);
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "d,alpha,beta,p,eps,m,delta,terms,W,L,Nw,err_W1p,bound_thm31,B,eps0,K2,K3,status\n";
    for (const auto& r : result.rows) {
        out << r.d << ',' << num(r.alpha) << ',' << num(r.beta) << ',' << (std::isinf(r.p) ? "inf" : num(r.p)) << ','
            << num(r.eps) << ',';
        if (r.skipped) {
            out << ",,,,,,,,," << num(r.B) << ',' << num(r.eps0) << ',' << num(result.K2) << ',' << num(result.K3)
                << ",SKIP\n";
            continue;
        }
        out << r.m << ',' << num(r.delta) << ',' << r.terms << ',' << r.W << ',' << r.L << ',' << r.N_w << ','
            << (std::isnan(r.err_w1p) ? "" : num(r.err_w1p)) << ',' << num(r.bound_thm31) << ',' << num(r.B) << ','
            << num(r.eps0) << ',' << num(result.K2) << ',' << num(result.K3) << ','
            << (std::isnan(r.err_w1p) ? "OK" : (r.err_w1p <= r.eps ? "PASS" : "FAIL")) << '\n';
    }
}

} // namespace fabernet
