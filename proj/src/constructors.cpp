#include "fabernet/constructors.hpp"

#include "fabernet/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fabernet {

namespace {

// Sawtooth step on one branch: from (n1, n2, acc) columns of the previous layer
// to (n1', n2', acc') rows of the next. acc == n1 on the first step.
void sawtooth_step(Layer& layer, int n1p, int n2p, int accp, int r_n1, int r_n2, int r_acc, int s) {
    const double scale = std::ldexp(1.0, -2 * s);
    layer.add(r_n1, n1p, 2.0);
    layer.add(r_n1, n2p, -4.0);
    layer.add(r_n2, n1p, 2.0);
    layer.add(r_n2, n2p, -4.0);
    layer.set_bias(r_n2, -0.5);
    layer.add(r_acc, accp, 1.0);
    layer.add(r_acc, n1p, -2.0 * scale);
    layer.add(r_acc, n2p, 4.0 * scale);
}

void check_depth(int m_sq) {
    if (m_sq < 1 || m_sq > 40)
        throw InvalidParameter("squaring depth must lie in [1, 40]");
}

} // namespace

ReluNetwork build_square_net(int m_sq) {
    check_depth(m_sq);
    std::vector<Layer> layers;
    Layer first(2, 1);
    first.add(0, 0, 1.0);
    first.add(1, 0, 1.0);
    first.set_bias(1, -0.5);
    layers.push_back(std::move(first));
    // Hidden layout after the first step: n1 = 0, n2 = 1, acc = 2.
    for (int s = 1; s < m_sq; ++s) {
        Layer layer(3, layers.back().rows());
        sawtooth_step(layer, 0, 1, s == 1 ? 0 : 2, 0, 1, 2, s);
        layers.push_back(std::move(layer));
    }
    const double scale = std::ldexp(1.0, -2 * m_sq);
    Layer out(1, layers.back().rows());
    out.add(0, m_sq == 1 ? 0 : 2, 1.0);
    out.add(0, 0, -2.0 * scale);
    out.add(0, 1, 4.0 * scale);
    layers.push_back(std::move(out));
    return ReluNetwork(std::move(layers));
}

int node_depth_for(double delta_node) {
    if (!(delta_node > 0.0))
        throw InvalidParameter("node accuracy must be positive");
    int m = 1;
    while (std::max(std::ldexp(1.0, -2 * m), std::ldexp(1.0, -m + 1)) > delta_node)
        ++m;
    return m;
}

namespace {

// Appends one tree level combining n signals (columns of the previous layer) pairwise.
// Returns the number of signals after the level.
int append_level(std::vector<Layer>& layers, int n, int cols, int m) {
    const int P = n / 2;
    const bool carry = (n % 2) != 0;
    const int cr = carry ? 1 : 0;

    // Stage 0: u = (x+y)/2, a = sigma(x-y), b = sigma(y-x).
    Layer l0(3 * P + cr, cols);
    for (int i = 0; i < P; ++i) {
        l0.add(3 * i, 2 * i, 0.5);
        l0.add(3 * i, 2 * i + 1, 0.5);
        l0.add(3 * i + 1, 2 * i, 1.0);
        l0.add(3 * i + 1, 2 * i + 1, -1.0);
        l0.add(3 * i + 2, 2 * i, -1.0);
        l0.add(3 * i + 2, 2 * i + 1, 1.0);
    }
    if (carry)
        l0.add(3 * P, n - 1, 1.0);
    layers.push_back(std::move(l0));

    // Stage 1: first sawtooth inputs; v = (a+b)/2 is folded into the v branch.
    // Branches interleave (u even, v odd) so both run the same arithmetic.
    auto at1 = [](int i, int br, int which) { return 4 * i + 2 * which + br; };
    Layer l1(4 * P + cr, 3 * P + cr);
    for (int i = 0; i < P; ++i) {
        l1.add(at1(i, 0, 0), 3 * i, 1.0);
        l1.add(at1(i, 1, 0), 3 * i + 1, 0.5);
        l1.add(at1(i, 1, 0), 3 * i + 2, 0.5);
        l1.add(at1(i, 0, 1), 3 * i, 1.0);
        l1.set_bias(at1(i, 0, 1), -0.5);
        l1.add(at1(i, 1, 1), 3 * i + 1, 0.5);
        l1.add(at1(i, 1, 1), 3 * i + 2, 0.5);
        l1.set_bias(at1(i, 1, 1), -0.5);
    }
    if (carry)
        l1.add(4 * P, 3 * P, 1.0);
    layers.push_back(std::move(l1));

    auto atk = [](int i, int br, int which) { return 6 * i + 2 * which + br; };
    for (int s = 1; s < m; ++s) {
        const bool from_first = s == 1;
        const int prev_rows = layers.back().rows();
        Layer l(6 * P + cr, prev_rows);
        for (int i = 0; i < P; ++i)
            for (int br = 0; br < 2; ++br) {
                const int n1p = from_first ? at1(i, br, 0) : atk(i, br, 0);
                const int n2p = from_first ? at1(i, br, 1) : atk(i, br, 1);
                const int accp = from_first ? n1p : atk(i, br, 2);
                sawtooth_step(l, n1p, n2p, accp, atk(i, br, 0), atk(i, br, 1), atk(i, br, 2), s);
            }
        if (carry)
            l.add(6 * P, prev_rows - 1, 1.0);
        layers.push_back(std::move(l));
    }

    // Output stage: f_m(u) - f_m(v) per pair.
    const double scale = std::ldexp(1.0, -2 * m);
    const int prev_rows = layers.back().rows();
    Layer out(P + cr, prev_rows);
    for (int i = 0; i < P; ++i)
        for (int br = 0; br < 2; ++br) {
            const double sign = br == 0 ? 1.0 : -1.0;
            const int n1p = m == 1 ? at1(i, br, 0) : atk(i, br, 0);
            const int n2p = m == 1 ? at1(i, br, 1) : atk(i, br, 1);
            const int accp = m == 1 ? n1p : atk(i, br, 2);
            out.add(i, accp, sign);
            out.add(i, n1p, -2.0 * scale * sign);
            out.add(i, n2p, 4.0 * scale * sign);
        }
    if (carry)
        out.add(P, prev_rows - 1, 1.0);
    layers.push_back(std::move(out));
    return P + cr;
}

} // namespace

ReluNetwork build_pair_product_net_depth(int m_sq) {
    check_depth(m_sq);
    std::vector<Layer> layers;
    append_level(layers, 2, 2, m_sq);
    return ReluNetwork(std::move(layers));
}

ReluNetwork build_pair_product_net(double delta_node) {
    return build_pair_product_net_depth(node_depth_for(delta_node));
}

ProductNet build_product_net_depth(int d, int m_sq) {
    if (d < 1)
        throw InvalidParameter("product arity must be >= 1");
    check_depth(m_sq);
    ProductNet out;
    out.arity = d;
    out.m_sq = m_sq;
    std::vector<Layer> layers;
    if (d == 1) {
        Layer a(1, 1), b(1, 1);
        a.add(0, 0, 1.0);
        b.add(0, 0, 1.0);
        layers.push_back(std::move(a));
        layers.push_back(std::move(b));
    } else {
        int n = d;
        int cols = d;
        while (n > 1) {
            n = append_level(layers, n, cols, m_sq);
            cols = layers.back().rows();
            ++out.levels;
        }
    }
    out.net = ReluNetwork(std::move(layers));
    return out;
}

namespace {

bool product_accurate(const ReluNetwork& net, int d, double delta) {
    std::mt19937_64 rng(0x5eed0001ULL + static_cast<unsigned>(d));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
    for (int trial = 0; trial < 4000; ++trial) {
        for (auto& v : x)
            v = u(rng);
        const double val = net.eval_grad(x, g);
        double prod = 1.0;
        for (double v : x)
            prod *= v;
        if (std::abs(val - prod) > delta)
            return false;
        for (int j = 0; j < d; ++j) {
            double pj = 1.0;
            for (int i = 0; i < d; ++i)
                if (i != j)
                    pj *= x[static_cast<std::size_t>(i)];
            if (std::abs(g[static_cast<std::size_t>(j)] - pj) > delta)
                return false;
        }
    }
    return true;
}

} // namespace

ProductNet build_product_net(int d, double delta) {
    if (d < 1)
        throw InvalidParameter("product arity must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidParameter("product accuracy must lie in (0, 1)");
    const double delta_node = delta / (3.0 * d);
    int m = node_depth_for(delta_node);
    ProductNet out = build_product_net_depth(d, m);
    for (int bump = 0; bump < 4 && !product_accurate(out.net, d, delta); ++bump)
        out = build_product_net_depth(d, ++m);
    out.delta = delta;
    out.delta_node = delta_node;
    return out;
}

ReluNetwork build_hat_net(const MultiLevel& k, const MultiPosition& s, const ProductNet& product) {
    const int d = static_cast<int>(k.dim());
    if (d != product.arity)
        throw InvalidParameter("hat network: product arity does not match dimension");
    if (!k.nonnegative() || !valid_position(k, s))
        throw InvalidParameter("hat network requires levels >= 0 and valid positions");
    std::vector<Layer> layers;
    Layer g1(2 * d, d);
    for (int i = 0; i < d; ++i) {
        const double slope = std::ldexp(1.0, k[i] + 1);
        const double shift = static_cast<double>(2 * s[i] + 1);
        g1.add(2 * i, i, slope);
        g1.set_bias(2 * i, -shift);
        g1.add(2 * i + 1, i, -slope);
        g1.set_bias(2 * i + 1, shift);
    }
    Layer g2(d, 2 * d);
    for (int i = 0; i < d; ++i) {
        g2.add(i, 2 * i, -1.0);
        g2.add(i, 2 * i + 1, -1.0);
        g2.set_bias(i, 1.0);
    }
    layers.push_back(std::move(g1));
    layers.push_back(std::move(g2));
    for (const auto& l : product.net.layers())
        layers.push_back(l);
    return ReluNetwork(std::move(layers));
}

ReluNetwork build_hat_net(const MultiLevel& k, const MultiPosition& s, double delta) {
    return build_hat_net(k, s, build_product_net(static_cast<int>(k.dim()), delta));
}

double epsilon0(const ApproxConfig& cfg) {
    cfg.validate();
    const double d = cfg.d;
    const double t2 = d / (std::exp2(cfg.alpha * d) * (1.0 - std::exp2(1.0 - cfg.alpha)));
    const double t3 = cfg.K1() * d * d /
                      (cfg.p_factor(d) * std::exp2((cfg.alpha + 1.0) * d) * std::pow(cfg.notch_factor(), d));
    return std::min({1.0, t2, t3});
}

double constant_B(const ApproxConfig& cfg) {
    cfg.validate();
    const double d = cfg.d;
    const double inner = cfg.p_factor(1.0) * std::exp2(cfg.alpha + 1.0) * cfg.notch_factor() /
                         std::pow(d, 2.0 * cfg.alpha / d);
    return (1.0 - std::exp2(-1.0 / (cfg.beta - 1.0))) * std::pow(inner, 1.0 / (cfg.alpha - 1.0));
}

CompilerPlan plan(const ApproxConfig& cfg) {
    cfg.validate();
    if (cfg.d < 2)
        throw InvalidParameter("the network compiler requires d >= 2");
    if (!cfg.eps)
        throw InvalidParameter("the network compiler requires a target epsilon");
    CompilerPlan pl;
    pl.cfg = cfg;
    pl.eps = *cfg.eps;
    pl.eps0 = epsilon0(cfg);
    pl.K1 = cfg.K1();
    pl.B = constant_B(cfg);
    if (!(pl.eps < pl.eps0))
        throw EpsilonTooLarge(pl.eps, pl.eps0);
    const double d = cfg.d;
    const double arg = 2.0 * pl.K1 * d * d / pl.eps /
                       (cfg.p_factor(d) * std::exp2((cfg.alpha + 1.0) * d) * std::pow(cfg.notch_factor(), d));
    pl.m = std::max(0, static_cast<int>(std::ceil(std::log2(arg) / (cfg.alpha - 1.0))));
    pl.delta = (1.0 - std::exp2(1.0 - cfg.alpha)) * std::exp2(cfg.alpha * d) * pl.eps / (2.0 * d);
    return pl;
}

namespace {

ReluNetwork zero_network(int d) {
    std::vector<Layer> layers;
    layers.emplace_back(1, d);
    layers.emplace_back(1, 1);
    return ReluNetwork(std::move(layers));
}

ReluNetwork assemble_wide(const std::vector<FaberTerm>& terms, const ProductNet& product) {
    std::vector<ReluNetwork> nets;
    std::vector<double> lambdas, bounds;
    nets.reserve(terms.size());
    for (const auto& t : terms) {
        nets.push_back(build_hat_net(t.index.k, t.index.s, product));
        lambdas.push_back(t.coefficient);
        bounds.push_back(0.0); // equal depths: no shift is needed
    }
    return parallelize(nets, lambdas, bounds);
}

ReluNetwork assemble_narrow(const std::vector<FaberTerm>& terms, const ProductNet& product) {
    const int d = product.arity;
    const auto& pl = product.net.layers();
    // Hat layers: two gadget layers then the product layers; hidden = all but the last.
    std::vector<int> hat_rows{2 * d, d};
    for (const auto& l : pl)
        hat_rows.push_back(l.rows());
    const int Lh = static_cast<int>(hat_rows.size());
    const int H = Lh - 1;
    const int J = static_cast<int>(terms.size());

    std::vector<Layer> layers;
    std::vector<std::vector<char>> linear;
    layers.reserve(static_cast<std::size_t>(J) * H + 1);
    int prev_rows = d;
    int prev_hat_off = 0; // first hat row in the previous layer
    ReluNetwork prev_hat;
    for (int j = 0; j < J; ++j) {
        auto hat = build_hat_net(terms[static_cast<std::size_t>(j)].index.k,
                                 terms[static_cast<std::size_t>(j)].index.s, product);
        const auto& hl = hat.layers();
        const bool coll = j > 0;
        const int hat_off = d + (coll ? 1 : 0);
        for (int t = 0; t < H; ++t) {
            Layer layer(hat_off + hat_rows[static_cast<std::size_t>(t)], prev_rows);
            std::vector<char> flags(static_cast<std::size_t>(layer.rows()), 0);
            for (int i = 0; i < d; ++i) {
                layer.add(i, i, 1.0);
                flags[static_cast<std::size_t>(i)] = 1;
            }
            if (coll) {
                flags[static_cast<std::size_t>(d)] = 1;
                const bool prev_coll = j > 1 || t > 0;
                if (prev_coll)
                    layer.add(d, d, 1.0);
                if (t == 0) { // fold in the previous hat's output layer
                    const double lam = terms[static_cast<std::size_t>(j - 1)].coefficient;
                    const auto& lastl = prev_hat.layers().back();
                    if (lam != 0.0) {
                        for (const auto& e : lastl.entries())
                            if (lam * e.weight != 0.0)
                                layer.add(d, prev_hat_off + e.col, lam * e.weight);
                        layer.add_bias(d, lam * lastl.bias()[0]);
                    }
                }
            }
            const int col_off = t == 0 ? 0 : prev_hat_off;
            for (const auto& e : hl[static_cast<std::size_t>(t)].entries())
                layer.add(hat_off + e.row, col_off + e.col, e.weight);
            for (int r = 0; r < hl[static_cast<std::size_t>(t)].rows(); ++r)
                layer.add_bias(hat_off + r, hl[static_cast<std::size_t>(t)].bias()[static_cast<std::size_t>(r)]);
            layers.push_back(std::move(layer));
            linear.push_back(std::move(flags));
            prev_rows = layers.back().rows();
            prev_hat_off = hat_off;
        }
        prev_hat = std::move(hat);
    }
    Layer out(1, prev_rows);
    if (J > 1)
        out.add(0, d, 1.0);
    const double lam = terms.back().coefficient;
    if (lam != 0.0) {
        const auto& lastl = prev_hat.layers().back();
        for (const auto& e : lastl.entries())
            if (lam * e.weight != 0.0)
                out.add(0, prev_hat_off + e.col, lam * e.weight);
        out.add_bias(0, lam * lastl.bias()[0]);
    }
    layers.push_back(std::move(out));
    SpecialNetwork special{ReluNetwork(std::move(layers)), d, std::move(linear)};
    return special_to_standard(special);
}

} // namespace

ReluNetwork assemble_hat_sum(const std::vector<FaberTerm>& terms, const ProductNet& product, bool narrow) {
    const int d = product.arity;
    const bool all_zero = std::all_of(terms.begin(), terms.end(), [](const FaberTerm& t) { return t.coefficient == 0.0; });
    if (terms.empty() || all_zero)
        return zero_network(d);
    return narrow ? assemble_narrow(terms, product) : assemble_wide(terms, product);
}

namespace {

CompiledNetwork compile_impl(const FunctionOracle& f, const ApproxConfig& cfg, bool narrow) {
    CompiledNetwork out;
    out.plan = plan(cfg);
    out.expansion = build_R(f, cfg, out.plan.m);
    const auto product = build_product_net(cfg.d, out.plan.delta);
    out.m_sq = product.m_sq;
    const auto terms = out.expansion.terms();
    out.terms = terms.size();
    out.net = assemble_hat_sum(terms, product, narrow);
    return out;
}

} // namespace

CompiledNetwork compile(const FunctionOracle& f, const ApproxConfig& cfg) {
    return compile_impl(f, cfg, false);
}

CompiledNetwork compile_narrow(const FunctionOracle& f, const ApproxConfig& cfg) {
    return compile_impl(f, cfg, true);
}

} // namespace fabernet
