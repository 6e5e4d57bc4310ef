#include "fabernet/relunet.hpp"

#include "fabernet/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fabernet {

Layer::Layer(int rows, int cols) : rows_(rows), cols_(cols), bias_(static_cast<std::size_t>(rows), 0.0) {
    if (rows < 1 || cols < 1)
        throw InvalidParameter("layer dimensions must be positive");
    row_start_.assign(static_cast<std::size_t>(rows) + 1, 0);
}

void Layer::add(int r, int c, double w) {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
        throw InvalidParameter("layer entry out of range");
    if (w == 0.0)
        throw InvalidParameter("explicit zero weights are not stored");
    if (!std::isfinite(w))
        throw InvalidParameter("non-finite weight");
    entries_.push_back(Entry{r, c, w});
    dirty_ = true;
}

void Layer::set_bias(int r, double b) {
    if (r < 0 || r >= rows_)
        throw InvalidParameter("bias index out of range");
    if (!std::isfinite(b))
        throw InvalidParameter("non-finite bias");
    bias_[static_cast<std::size_t>(r)] = b;
}

void Layer::add_bias(int r, double b) {
    if (r < 0 || r >= rows_)
        throw InvalidParameter("bias index out of range");
    bias_[static_cast<std::size_t>(r)] += b;
}

void Layer::finalize() {
    if (!dirty_)
        return;
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    std::vector<Entry> merged;
    merged.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
            merged.back().weight += e.weight;
        else
            merged.push_back(e);
    }
    std::erase_if(merged, [](const Entry& e) { return e.weight == 0.0; });
    entries_ = std::move(merged);
    row_start_.assign(static_cast<std::size_t>(rows_) + 1, 0);
    for (const auto& e : entries_)
        ++row_start_[static_cast<std::size_t>(e.row) + 1];
    for (std::size_t r = 0; r < static_cast<std::size_t>(rows_); ++r)
        row_start_[r + 1] += row_start_[r];
    dirty_ = false;
}

const std::vector<Entry>& Layer::entries() const {
    if (dirty_)
        throw std::logic_error("layer read before finalize()");
    return entries_;
}

std::size_t Layer::weight_count() const {
    return entries().size();
}

std::size_t Layer::bias_count() const {
    return static_cast<std::size_t>(std::count_if(bias_.begin(), bias_.end(), [](double b) { return b != 0.0; }));
}

void Layer::apply(std::span<const double> in, std::span<double> out) const {
    if (dirty_)
        throw std::logic_error("layer read before finalize()");
    const Entry* e = entries_.data();
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        const auto end = row_start_[static_cast<std::size_t>(r) + 1];
        for (auto i = row_start_[static_cast<std::size_t>(r)]; i < end; ++i)
            acc += e[i].weight * in[static_cast<std::size_t>(e[i].col)];
        out[static_cast<std::size_t>(r)] = acc + bias_[static_cast<std::size_t>(r)];
    }
}

ReluNetwork::ReluNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.size() < 2)
        throw InvalidParameter("a network needs at least 2 layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].finalize();
        if (l > 0 && layers_[l].cols() != layers_[l - 1].rows())
            throw InvalidParameter("layer dimensions do not chain at layer " + std::to_string(l + 1));
    }
    if (layers_.back().rows() != 1)
        throw InvalidParameter("network output dimension must be 1");
}

std::vector<int> ReluNetwork::dims() const {
    std::vector<int> out;
    if (layers_.empty())
        return out;
    out.push_back(layers_.front().cols());
    for (const auto& l : layers_)
        out.push_back(l.rows());
    return out;
}

double ReluNetwork::eval(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim())
        throw InvalidParameter("input dimension mismatch");
    std::vector<double> a(x.begin(), x.end()), b;
    const std::size_t last = layers_.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
        b.resize(static_cast<std::size_t>(layers_[l].rows()));
        layers_[l].apply(a, b);
        if (l < last)
            for (auto& v : b)
                v = v > 0.0 ? v : 0.0;
        std::swap(a, b);
    }
    return a[0];
}

double ReluNetwork::eval_grad(std::span<const double> x, std::span<double> grad) const {
    if (static_cast<int>(x.size()) != input_dim() || grad.size() != x.size())
        throw InvalidParameter("input dimension mismatch");
    const std::size_t nl = layers_.size();
    std::vector<std::vector<double>> act(nl + 1);
    act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < nl; ++l) {
        act[l + 1].resize(static_cast<std::size_t>(layers_[l].rows()));
        layers_[l].apply(act[l], act[l + 1]);
        if (l + 1 < nl)
            for (auto& v : act[l + 1])
                v = v > 0.0 ? v : 0.0;
    }
    // act holds post-activation values; a hidden unit is active iff its value is > 0.
    std::vector<double> g{1.0}, gp;
    for (std::size_t l = nl; l-- > 0;) {
        gp.assign(static_cast<std::size_t>(layers_[l].cols()), 0.0);
        const auto& entries = layers_[l].entries();
        const auto& rs = layers_[l].row_start();
        for (std::size_t r = 0; r < g.size(); ++r) {
            const double up = g[r];
            if (up == 0.0)
                continue;
            for (auto i = rs[r]; i < rs[r + 1]; ++i)
                gp[static_cast<std::size_t>(entries[i].col)] += entries[i].weight * up;
        }
        if (l > 0)
            for (std::size_t i = 0; i < gp.size(); ++i)
                if (!(act[l][i] > 0.0))
                    gp[i] = 0.0;
        std::swap(g, gp);
    }
    std::copy(g.begin(), g.end(), grad.begin());
    return act[nl][0];
}

std::vector<double> ReluNetwork::grad(std::span<const double> x) const {
    std::vector<double> g(x.size(), 0.0);
    eval_grad(x, g);
    return g;
}

NetworkStats ReluNetwork::stats() const {
    NetworkStats s;
    s.L = depth();
    s.dims = dims();
    for (const auto& l : layers_)
        s.W += l.weight_count() + l.bias_count();
    s.N_w = s.dims.empty() ? 0 : *std::max_element(s.dims.begin(), s.dims.end());
    return s;
}

NetworkStats stats(const ReluNetwork& net) {
    return net.stats();
}

namespace {

bool layer_subset(const Layer& a, const Layer& b) {
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    std::size_t j = 0;
    for (const auto& e : ea) {
        while (j < eb.size() && (eb[j].row < e.row || (eb[j].row == e.row && eb[j].col < e.col)))
            ++j;
        if (j == eb.size() || eb[j].row != e.row || eb[j].col != e.col)
            return false;
    }
    for (std::size_t r = 0; r < a.bias().size(); ++r)
        if (a.bias()[r] != 0.0 && b.bias()[r] == 0.0)
            return false;
    return true;
}

} // namespace

bool ReluNetwork::pattern_subset_of(const ReluNetwork& other) const {
    if (dims() != other.dims())
        return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
        if (!layer_subset(layers_[l], other.layers_[l]))
            return false;
    return true;
}

bool ReluNetwork::same_pattern(const ReluNetwork& other) const {
    return pattern_subset_of(other) && other.pattern_subset_of(*this);
}

std::vector<std::vector<Interval>> layer_intervals(const ReluNetwork& net,
                                                   const std::vector<std::vector<char>>& linear_rows) {
    const auto& layers = net.layers();
    std::vector<std::vector<Interval>> out;
    std::vector<Interval> in(static_cast<std::size_t>(net.input_dim()), Interval{0.0, 1.0});
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<Interval> pre(static_cast<std::size_t>(layer.rows()));
        std::vector<Interval> mag(pre.size());
        for (int r = 0; r < layer.rows(); ++r) {
            const double b = layer.bias()[static_cast<std::size_t>(r)];
            pre[static_cast<std::size_t>(r)] = Interval{b, b};
            mag[static_cast<std::size_t>(r)] = Interval{std::abs(b), std::abs(b)};
        }
        for (const auto& e : layer.entries()) {
            const auto& src = in[static_cast<std::size_t>(e.col)];
            auto& dst = pre[static_cast<std::size_t>(e.row)];
            auto& m = mag[static_cast<std::size_t>(e.row)];
            const double a = e.weight > 0.0 ? e.weight * src.lo : e.weight * src.hi;
            const double b = e.weight > 0.0 ? e.weight * src.hi : e.weight * src.lo;
            dst.lo += a;
            dst.hi += b;
            m.lo += std::abs(a);
            m.hi += std::abs(b);
        }
        // Outward allowance for rounding, proportional to the summed magnitudes.
        for (std::size_t r = 0; r < pre.size(); ++r) {
            pre[r].lo -= 1e-12 * mag[r].lo;
            pre[r].hi += 1e-12 * mag[r].hi;
        }
        out.push_back(pre);
        if (l + 1 < layers.size()) {
            in = pre;
            for (std::size_t r = 0; r < in.size(); ++r) {
                const bool linear = l < linear_rows.size() && r < linear_rows[l].size() && linear_rows[l][r];
                if (!linear) {
                    in[r].lo = std::max(in[r].lo, 0.0);
                    in[r].hi = std::max(in[r].hi, 0.0);
                }
            }
        }
    }
    return out;
}

double bound_output(const ReluNetwork& net) {
    const auto iv = layer_intervals(net).back().front();
    return std::max(std::abs(iv.lo), std::abs(iv.hi));
}

std::size_t parallelize_size_bound(const std::vector<ReluNetwork>& nets) {
    int L = 0;
    for (const auto& n : nets)
        L = std::max(L, n.depth());
    std::size_t total = 0;
    for (const auto& n : nets) {
        total += n.stats().W;
        if (n.depth() < L)
            total += static_cast<std::size_t>(L - n.depth() + 2);
    }
    return total;
}

namespace {

double sampled_max(const ReluNetwork& net) {
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(net.input_dim()));
    double best = 0.0;
    for (int i = 0; i < 64; ++i) {
        for (auto& v : x)
            v = u(rng);
        best = std::max(best, std::abs(net.eval(x)));
    }
    return best;
}

} // namespace

ReluNetwork parallelize(const std::vector<ReluNetwork>& nets, const std::vector<double>& lambdas,
                        const std::vector<double>& bounds) {
    if (nets.empty())
        throw InvalidParameter("parallelize needs at least one network");
    if (lambdas.size() != nets.size() || bounds.size() != nets.size())
        throw InvalidParameter("parallelize: one lambda and one bound per network");
    const int d = nets.front().input_dim();
    int L = 0;
    for (const auto& n : nets) {
        if (n.input_dim() != d)
            throw InvalidParameter("parallelize: input dimensions differ");
        L = std::max(L, n.depth());
    }
    for (std::size_t j = 0; j < nets.size(); ++j) {
        if (!(bounds[j] >= 0.0) || !std::isfinite(bounds[j]))
            throw InvalidParameter("parallelize: output bounds must be finite and >= 0");
        if (nets[j].depth() < L && bounds[j] < sampled_max(nets[j]))
            throw InvalidParameter("parallelize: bound of network " + std::to_string(j) + " is below a sampled output");
    }

    // rows_of(j, l): rows contributed by net j to hidden layer l (0-based, l < L-1).
    auto rows_of = [&](std::size_t j, int l) { return l < nets[j].depth() - 1 ? nets[j].layers()[l].rows() : 1; };
    std::vector<std::vector<int>> off(nets.size(), std::vector<int>(static_cast<std::size_t>(L), 0));
    std::vector<int> width(static_cast<std::size_t>(L), 0);
    for (int l = 0; l + 1 < L; ++l)
        for (std::size_t j = 0; j < nets.size(); ++j) {
            off[j][l] = width[l];
            width[l] += rows_of(j, l);
        }
    width[L - 1] = 1;

    std::vector<Layer> layers;
    for (int l = 0; l < L; ++l)
        layers.emplace_back(width[l], l == 0 ? d : width[l - 1]);

    for (std::size_t j = 0; j < nets.size(); ++j) {
        const auto& src = nets[j].layers();
        const int Lj = nets[j].depth();
        const double lam = lambdas[j];
        for (int l = 0; l < Lj; ++l) {
            const int col_off = l == 0 ? 0 : off[j][l - 1];
            const bool is_final = l == L - 1;
            if (is_final) { // equal depth: scaled output layer
                if (lam == 0.0)
                    continue;
                for (const auto& e : src[l].entries()) {
                    const double w = lam * e.weight;
                    if (w != 0.0)
                        layers[l].add(0, col_off + e.col, w);
                }
                layers[l].add_bias(0, lam * src[l].bias()[0]);
                continue;
            }
            for (const auto& e : src[l].entries())
                layers[l].add(off[j][l] + e.row, col_off + e.col, e.weight);
            for (int r = 0; r < src[l].rows(); ++r)
                layers[l].add_bias(off[j][l] + r, src[l].bias()[static_cast<std::size_t>(r)]);
            if (l == Lj - 1) // shifted output, now a hidden unit
                layers[l].add_bias(off[j][l], bounds[j]);
        }
        for (int l = Lj; l < L; ++l) {
            if (l == L - 1) {
                if (lam != 0.0) {
                    layers[l].add(0, off[j][l - 1], lam);
                    layers[l].add_bias(0, -lam * bounds[j]);
                }
            } else {
                layers[l].add(off[j][l], off[j][l - 1], 1.0);
            }
        }
    }
    return ReluNetwork(std::move(layers));
}

ReluNetwork parallelize(const std::vector<ReluNetwork>& nets, const std::vector<double>& lambdas) {
    std::vector<double> bounds;
    bounds.reserve(nets.size());
    for (const auto& n : nets)
        bounds.push_back(bound_output(n));
    return parallelize(nets, lambdas, bounds);
}

double SpecialNetwork::eval(std::span<const double> x) const {
    const auto& layers = net.layers();
    if (static_cast<int>(x.size()) != net.input_dim())
        throw InvalidParameter("input dimension mismatch");
    std::vector<double> a(x.begin(), x.end()), b;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        b.resize(static_cast<std::size_t>(layers[l].rows()));
        layers[l].apply(a, b);
        if (l + 1 < layers.size())
            for (std::size_t r = 0; r < b.size(); ++r) {
                const bool linear = l < linear_rows.size() && r < linear_rows[l].size() && linear_rows[l][r];
                if (!linear)
                    b[r] = std::max(b[r], 0.0);
            }
        std::swap(a, b);
    }
    return a[0];
}

ReluNetwork special_to_standard(const SpecialNetwork& special) {
    const auto& src = special.net.layers();
    const auto iv = layer_intervals(special.net, special.linear_rows);
    std::vector<Layer> layers(src.begin(), src.end());
    for (std::size_t l = 0; l + 1 < src.size(); ++l) {
        if (l >= special.linear_rows.size())
            break;
        const auto& flags = special.linear_rows[l];
        std::vector<double> shift(static_cast<std::size_t>(src[l].rows()), 0.0);
        for (std::size_t r = 0; r < flags.size() && r < shift.size(); ++r) {
            if (!flags[r])
                continue;
            const double lo = iv[l][r].lo;
            if (!std::isfinite(lo))
                throw InvalidParameter("special_to_standard: unbounded activation-free row");
            const double c = lo < 0.0 ? -lo : 0.0;
            shift[r] = c;
            if (c != 0.0)
                layers[l].add_bias(static_cast<int>(r), c);
        }
        for (const auto& e : src[l + 1].entries()) {
            const double c = shift[static_cast<std::size_t>(e.col)];
            if (c != 0.0)
                layers[l + 1].add_bias(e.row, -e.weight * c);
        }
    }
    return ReluNetwork(std::move(layers));
}

} // namespace fabernet
