#include "fabernet/faber.hpp"

#include "fabernet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fabernet {

namespace {

void check_unit(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("hat argument outside [0,1]");
}

void check_pair(int k, std::int64_t s) {
    if (s < 0 || s >= positions_per_axis(k))
        throw InvalidParameter("position out of range for level");
}

} // namespace

double hat_eval(int k, std::int64_t s, double x) {
    check_unit(x);
    check_pair(k, s);
    if (k == -1)
        return s == 0 ? 1.0 - x : x;
    const double t = std::ldexp(x, k + 1) - static_cast<double>(2 * s + 1);
    return std::max(0.0, 1.0 - std::abs(t));
}

double hat_deriv(int k, std::int64_t s, double x) {
    check_unit(x);
    check_pair(k, s);
    if (k == -1)
        return s == 0 ? -1.0 : 1.0;
    const double slope = std::ldexp(1.0, k + 1);
    const double t = std::ldexp(x, k + 1) - static_cast<double>(2 * s);
    if (x == 1.0) // no right neighbourhood; take the left derivative
        return (t > 0.0 && t <= 1.0) ? slope : (t > 1.0 && t <= 2.0) ? -slope : 0.0;
    if (t >= 0.0 && t < 1.0)
        return slope;
    if (t >= 1.0 && t < 2.0)
        return -slope;
    return 0.0;
}

double tensor_hat_eval(const MultiLevel& k, const MultiPosition& s, std::span<const double> x) {
    if (k.dim() != s.dim() || k.dim() != x.size())
        throw InvalidParameter("dimension mismatch in tensor_hat_eval");
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        v *= hat_eval(k[i], s[i], x[i]);
    return v;
}

std::vector<double> tensor_hat_grad(const MultiLevel& k, const MultiPosition& s, std::span<const double> x) {
    if (k.dim() != s.dim() || k.dim() != x.size())
        throw InvalidParameter("dimension mismatch in tensor_hat_grad");
    const std::size_t d = x.size();
    std::vector<double> val(d), der(d), g(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        val[i] = hat_eval(k[i], s[i], x[i]);
        der[i] = hat_deriv(k[i], s[i], x[i]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        double p = der[j];
        for (std::size_t i = 0; i < d && p != 0.0; ++i)
            if (i != j)
                p *= val[i];
        g[j] = p;
    }
    return g;
}

double lambda(const FunctionOracle& f, const MultiLevel& k, const MultiPosition& s) {
    if (!valid_position(k, s))
        throw InvalidParameter("invalid (k, s) pair");
    const std::size_t d = k.dim();
    // Per axis: the stencil nodes as exact dyadics and their weights.
    std::vector<std::vector<double>> nodes(d), weights(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (k[i] == -1) {
            nodes[i] = {static_cast<double>(s[i])};
            weights[i] = {1.0};
        } else {
            const int e = k[i] + 1;
            const double base = static_cast<double>(2 * s[i]);
            nodes[i] = {std::ldexp(base, -e), std::ldexp(base + 1.0, -e), std::ldexp(base + 2.0, -e)};
            weights[i] = {-0.5, 1.0, -0.5};
        }
    }
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> pt(d);
    double sum = 0.0;
    while (true) {
        double w = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            pt[i] = nodes[i][idx[i]];
            w *= weights[i][idx[i]];
        }
        sum += w * f(pt);
        std::size_t i = d;
        while (i > 0 && idx[i - 1] + 1 == nodes[i - 1].size()) {
            idx[i - 1] = 0;
            --i;
        }
        if (i == 0)
            break;
        ++idx[i - 1];
    }
    return sum;
}

FaberExpansion::FaberExpansion(int dim) : dim_(dim) {
    if (dim < 1)
        throw InvalidParameter("expansion dimension must be >= 1");
}

std::size_t FaberExpansion::offset(const MultiLevel& k, const MultiPosition& s) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < k.dim(); ++i)
        off = off * static_cast<std::size_t>(positions_per_axis(k[i])) + static_cast<std::size_t>(s[i]);
    return off;
}

void FaberExpansion::set(const FaberIndex& index, double coefficient) {
    if (static_cast<int>(index.k.dim()) != dim_ || !valid_position(index.k, index.s))
        throw InvalidParameter("invalid Faber index for expansion");
    if (!std::isfinite(coefficient))
        throw InvalidParameter("non-finite Faber coefficient");
    auto it = blocks_.find(index.k);
    if (it == blocks_.end()) {
        std::size_t n = 1;
        for (int v : index.k.levels) {
            const auto c = static_cast<std::size_t>(positions_per_axis(v));
            if (n > (std::size_t{1} << 40) / c)
                throw InvalidParameter("level block too large");
            n *= c;
        }
        it = blocks_.emplace(index.k, Block{std::vector<double>(n, 0.0), std::vector<char>(n, 0)}).first;
        for (int v : index.k.levels) {
            max_level_ = std::max(max_level_, v);
            has_boundary_ = has_boundary_ || v == -1;
        }
    }
    const auto off = offset(index.k, index.s);
    if (!it->second.present[off]) {
        it->second.present[off] = 1;
        ++count_;
    }
    it->second.coef[off] = coefficient;
}

double FaberExpansion::coefficient(const FaberIndex& index) const {
    auto it = blocks_.find(index.k);
    if (it == blocks_.end() || !valid_position(index.k, index.s))
        return 0.0;
    return it->second.coef[offset(index.k, index.s)];
}

bool FaberExpansion::contains(const FaberIndex& index) const {
    auto it = blocks_.find(index.k);
    if (it == blocks_.end() || !valid_position(index.k, index.s))
        return false;
    return it->second.present[offset(index.k, index.s)] != 0;
}

std::vector<FaberTerm> FaberExpansion::terms() const {
    std::vector<FaberTerm> out;
    out.reserve(count_);
    for (const auto& [k, block] : blocks_) {
        std::vector<std::int64_t> s(k.dim(), 0);
        for (std::size_t off = 0; off < block.coef.size(); ++off) {
            if (block.present[off])
                out.push_back(FaberTerm{FaberIndex{k, MultiPosition(s)}, block.coef[off]});
            for (std::size_t i = k.dim(); i-- > 0;) {
                if (++s[i] < positions_per_axis(k[i]))
                    break;
                s[i] = 0;
            }
        }
    }
    return out;
}

std::vector<MultiLevel> FaberExpansion::levels() const {
    std::vector<MultiLevel> out;
    for (const auto& entry : blocks_)
        out.push_back(entry.first);
    return out;
}

FaberExpansion FaberExpansion::level(const MultiLevel& k) const {
    FaberExpansion e(dim_);
    auto it = blocks_.find(k);
    if (it != blocks_.end()) {
        e.blocks_.emplace(k, it->second);
        e.count_ = static_cast<std::size_t>(std::count(it->second.present.begin(), it->second.present.end(), 1));
        for (int v : k.levels) {
            e.max_level_ = std::max(e.max_level_, v);
            e.has_boundary_ = e.has_boundary_ || v == -1;
        }
    }
    return e;
}

double FaberExpansion::accumulate(const MultiLevel& k, const Block& block, std::span<const double> x,
                                  std::span<double> grad) const {
    const std::size_t d = k.dim();
    // Candidate positions per axis: the cell containing x (two vertices for k = -1).
    std::int64_t cand[2 * 32];
    double val[2 * 32], der[2 * 32];
    int ncand[32];
    for (std::size_t i = 0; i < d; ++i) {
        if (k[i] == -1) {
            ncand[i] = 2;
            for (int c = 0; c < 2; ++c) {
                cand[2 * i + c] = c;
                val[2 * i + c] = c == 0 ? 1.0 - x[i] : x[i];
                der[2 * i + c] = c == 0 ? -1.0 : 1.0;
            }
        } else {
            const std::int64_t n = std::int64_t{1} << k[i];
            auto s = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], k[i])));
            s = std::clamp<std::int64_t>(s, 0, n - 1);
            ncand[i] = 1;
            cand[2 * i] = s;
            val[2 * i] = hat_eval(k[i], s, x[i]);
            der[2 * i] = grad.empty() ? 0.0 : hat_deriv(k[i], s, x[i]);
        }
    }
    double sum = 0.0;
    int choice[32] = {};
    while (true) {
        std::size_t off = 0;
        double v = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            off = off * static_cast<std::size_t>(positions_per_axis(k[i])) + static_cast<std::size_t>(cand[2 * i + choice[i]]);
            v *= val[2 * i + choice[i]];
        }
        const double c = block.coef[off];
        if (c != 0.0) {
            sum += c * v;
            if (!grad.empty()) {
                for (std::size_t j = 0; j < d; ++j) {
                    double g = c * der[2 * j + choice[j]];
                    for (std::size_t i = 0; i < d && g != 0.0; ++i)
                        if (i != j)
                            g *= val[2 * i + choice[i]];
                    grad[j] += g;
                }
            }
        }
        std::size_t i = d;
        while (i > 0 && choice[i - 1] + 1 == ncand[i - 1]) {
            choice[i - 1] = 0;
            --i;
        }
        if (i == 0)
            break;
        ++choice[i - 1];
    }
    return sum;
}

double FaberExpansion::eval(std::span<const double> x) const {
    return eval_grad(x, {});
}

double FaberExpansion::eval_grad(std::span<const double> x, std::span<double> grad) const {
    if (static_cast<int>(x.size()) != dim_)
        throw InvalidParameter("dimension mismatch in expansion eval");
    if (dim_ > 32)
        throw InvalidParameter("expansion eval supports d <= 32");
    for (double v : x)
        check_unit(v);
    if (!grad.empty())
        std::fill(grad.begin(), grad.end(), 0.0);
    double sum = 0.0;
    if (has_boundary_) {
        for (const auto& [k, block] : blocks_)
            sum += accumulate(k, block, x, grad);
        return sum;
    }
    // One cell per axis and level: tabulate position, hat value and slope once.
    const auto d = static_cast<std::size_t>(dim_);
    const auto levels = static_cast<std::size_t>(max_level_ + 1);
    thread_local std::vector<std::int64_t> pos;
    thread_local std::vector<double> val, der;
    pos.resize(d * levels);
    val.resize(d * levels);
    der.resize(d * levels);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < levels; ++l) {
            const int k = static_cast<int>(l);
            const std::int64_t n = std::int64_t{1} << k;
            const auto s = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::ldexp(x[i], k))), 0, n - 1);
            pos[i * levels + l] = s;
            val[i * levels + l] = hat_eval(k, s, x[i]);
            der[i * levels + l] = grad.empty() ? 0.0 : hat_deriv(k, s, x[i]);
        }
    for (const auto& [k, block] : blocks_) {
        std::size_t off = 0;
        double v = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t at = i * levels + static_cast<std::size_t>(k[i]);
            off = (off << k[i]) + static_cast<std::size_t>(pos[at]);
            v *= val[at];
        }
        const double c = block.coef[off];
        if (c == 0.0)
            continue;
        sum += c * v;
        if (grad.empty())
            continue;
        for (std::size_t j = 0; j < d; ++j) {
            double g = c * der[j * levels + static_cast<std::size_t>(k[j])];
            for (std::size_t i = 0; i < d && g != 0.0; ++i)
                if (i != j)
                    g *= val[i * levels + static_cast<std::size_t>(k[i])];
            grad[j] += g;
        }
    }
    return sum;
}

std::vector<double> FaberExpansion::grad(std::span<const double> x) const {
    std::vector<double> g(x.size(), 0.0);
    eval_grad(x, g);
    return g;
}

void write_expansion(std::ostream& out, const FaberExpansion& e) {
    char buf[64];
    for (const auto& t : e.terms()) {
        for (std::size_t i = 0; i < t.index.k.dim(); ++i)
            out << (i ? " " : "") << t.index.k[i];
        out << " |";
        for (std::size_t i = 0; i < t.index.s.dim(); ++i)
            out << ' ' << t.index.s[i];
        std::snprintf(buf, sizeof buf, "%.17g", t.coefficient);
        out << " | " << buf << '\n';
    }
}

FaberExpansion read_expansion(std::istream& in) {
    FaberExpansion e;
    bool have_dim = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        const auto bar1 = line.find('|');
        const auto bar2 = bar1 == std::string::npos ? bar1 : line.find('|', bar1 + 1);
        if (bar2 == std::string::npos)
            throw InvalidParameter("malformed expansion line " + std::to_string(lineno));
        std::istringstream ks(line.substr(0, bar1)), ss(line.substr(bar1 + 1, bar2 - bar1 - 1)),
            cs(line.substr(bar2 + 1));
        std::vector<int> k;
        std::vector<std::int64_t> s;
        for (int v; ks >> v;)
            k.push_back(v);
        for (std::int64_t v; ss >> v;)
            s.push_back(v);
        std::string coef_text;
        cs >> coef_text;
        if (k.empty() || k.size() != s.size() || coef_text.empty())
            throw InvalidParameter("malformed expansion line " + std::to_string(lineno));
        if (!have_dim) {
            e = FaberExpansion(static_cast<int>(k.size()));
            have_dim = true;
        }
        char* end = nullptr;
        const double c = std::strtod(coef_text.c_str(), &end);
        if (end == coef_text.c_str() || *end != '\0')
            throw InvalidParameter("bad coefficient on expansion line " + std::to_string(lineno));
        e.set(FaberIndex{MultiLevel(k), MultiPosition(s)}, c);
    }
    if (!have_dim)
        throw InvalidParameter("expansion file has no terms");
    return e;
}

} // namespace fabernet
