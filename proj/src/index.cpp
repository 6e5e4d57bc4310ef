#include "fabernet/index.hpp"

#include "fabernet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace fabernet {

MultiLevel::MultiLevel(std::vector<int> k) : levels(std::move(k)) {
    for (int v : levels)
        if (v < -1)
            throw InvalidParameter("level entries must be >= -1");
}

int MultiLevel::l1() const noexcept {
    return std::accumulate(levels.begin(), levels.end(), 0);
}

int MultiLevel::linf() const noexcept {
    return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
}

bool MultiLevel::nonnegative() const noexcept {
    return std::all_of(levels.begin(), levels.end(), [](int v) { return v >= 0; });
}

MultiPosition::MultiPosition(std::vector<std::int64_t> s) : positions(std::move(s)) {
    for (auto v : positions)
        if (v < 0)
            throw InvalidParameter("positions must be non-negative");
}

std::int64_t positions_per_axis(int k) {
    if (k < -1 || k > 62)
        throw InvalidParameter("level out of range");
    return k == -1 ? 2 : (std::int64_t{1} << k);
}

bool valid_position(const MultiLevel& k, const MultiPosition& s) {
    if (k.dim() != s.dim())
        return false;
    for (std::size_t i = 0; i < k.dim(); ++i)
        if (s[i] < 0 || s[i] >= positions_per_axis(k[i]))
            return false;
    return true;
}

std::string to_string(IndexSetKind kind) {
    switch (kind) {
    case IndexSetKind::notched: return "notched";
    case IndexSetKind::smolyak: return "smolyak";
    case IndexSetKind::full: return "full";
    }
    return "?";
}

IndexSetKind parse_index_set_kind(const std::string& text) {
    if (text == "notched") return IndexSetKind::notched;
    if (text == "smolyak") return IndexSetKind::smolyak;
    if (text == "full") return IndexSetKind::full;
    throw InvalidParameter("unknown index set kind '" + text + "'");
}

bool IndexSet::contains(const MultiLevel& k) const {
    return std::binary_search(entries.begin(), entries.end(), k);
}

namespace {

void check_dim_level(int d, int m) {
    if (d < 1)
        throw InvalidParameter("dimension must be >= 1");
    if (m < 0)
        throw InvalidParameter("level m must be >= 0");
    if (m > 62)
        throw InvalidParameter("level m too large");
}

void compositions_rec(int d, int remaining, std::vector<int>& cur, std::vector<MultiLevel>& out) {
    const auto i = cur.size();
    if (static_cast<int>(i) == d - 1) {
        cur.push_back(remaining);
        out.emplace_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        cur.push_back(v);
        compositions_rec(d, remaining - v, cur, out);
        cur.pop_back();
    }
}

} // namespace

std::vector<MultiLevel> compositions(int d, int n) {
    std::vector<MultiLevel> out;
    if (d < 1 || n < 0)
        return out;
    std::vector<int> cur;
    cur.reserve(d);
    compositions_rec(d, n, cur, out);
    return out;
}

IndexSet enumerate_notched(int d, const Ratio& beta, int m) {
    check_dim_level(d, m);
    if (beta.num <= beta.den)
        throw InvalidParameter("beta must be > 1");
    IndexSet set;
    set.dim = d;
    set.m = m;
    set.kind = IndexSetKind::notched;
    set.beta = beta;
    // Each |k|_1 = m - j slice is disjoint from the others.
    for (int j = 0; j <= m; ++j) {
        const std::int64_t min_inf = m - beta.floor_times(j);
        for (auto& k : compositions(d, m - j))
            if (k.linf() >= min_inf)
                set.entries.push_back(std::move(k));
    }
    std::sort(set.entries.begin(), set.entries.end());
    return set;
}

IndexSet enumerate_notched(int d, double beta, int m) {
    if (!(beta > 1.0))
        throw InvalidParameter("beta must be > 1");
    return enumerate_notched(d, Ratio::from_double(beta), m);
}

IndexSet enumerate_smolyak(int d, int m) {
    check_dim_level(d, m);
    IndexSet set;
    set.dim = d;
    set.m = m;
    set.kind = IndexSetKind::smolyak;
    for (int n = 0; n <= m; ++n)
        for (auto& k : compositions(d, n))
            set.entries.push_back(std::move(k));
    std::sort(set.entries.begin(), set.entries.end());
    return set;
}

IndexSet enumerate_full(int d, int m) {
    check_dim_level(d, m);
    IndexSet set;
    set.dim = d;
    set.m = m;
    set.kind = IndexSetKind::full;
    std::vector<int> k(d, 0);
    while (true) {
        set.entries.emplace_back(k);
        int i = d - 1;
        while (i >= 0 && k[i] == m) {
            k[i] = 0;
            --i;
        }
        if (i < 0)
            break;
        ++k[i];
    }
    return set; // odometer order is already lexicographic
}

Dyadic Dyadic::reduce(std::int64_t num, int exp) {
    if (num == 0)
        return Dyadic{0, 0};
    while (exp > 0 && (num % 2) == 0) {
        num /= 2;
        --exp;
    }
    return Dyadic{num, exp};
}

double Dyadic::value() const {
    return std::ldexp(static_cast<double>(num), -exp);
}

std::string Dyadic::str() const {
    if (exp == 0)
        return std::to_string(num);
    return std::to_string(num) + "/2^" + std::to_string(exp);
}

namespace {

void require_grid_set(const IndexSet& set) {
    if (set.entries.empty())
        throw InvalidParameter("index set must be nonempty");
    for (const auto& k : set.entries) {
        if (!k.nonnegative())
            throw InvalidParameter("grid levels must be >= 0");
        if (k.linf() > 60)
            throw InvalidParameter("grid level too fine");
    }
}

} // namespace

SparseGrid grid_points(const IndexSet& set) {
    require_grid_set(set);
    const int d = set.dim;
    int top = 0;
    for (const auto& k : set.entries)
        top = std::max(top, k.linf() + 1);

    // Common denominator 2^top makes deduplication exact integer comparison.
    std::vector<std::vector<std::int64_t>> raw;
    std::vector<std::int64_t> t(d);
    for (const auto& k : set.entries) {
        std::fill(t.begin(), t.end(), 0);
        while (true) {
            std::vector<std::int64_t> pt(d);
            for (int i = 0; i < d; ++i)
                pt[i] = t[i] << (top - k[i] - 1);
            raw.push_back(std::move(pt));
            int i = d - 1;
            while (i >= 0 && t[i] == (std::int64_t{1} << (k[i] + 1))) {
                t[i] = 0;
                --i;
            }
            if (i < 0)
                break;
            ++t[i];
        }
    }
    std::sort(raw.begin(), raw.end());
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

    SparseGrid grid;
    grid.dim = d;
    grid.points.reserve(raw.size());
    for (const auto& pt : raw) {
        GridPoint gp;
        gp.coords.reserve(d);
        gp.x.reserve(d);
        for (auto v : pt) {
            gp.coords.push_back(Dyadic::reduce(v, top));
            gp.x.push_back(gp.coords.back().value());
        }
        grid.points.push_back(std::move(gp));
    }
    return grid;
}

std::uint64_t grid_size(const IndexSet& set) {
    require_grid_set(set);
    const int d = set.dim;
    // A point whose coordinate i has exact dyadic level l_i (0 for the endpoints)
    // lies in the level-(k+1) lattice iff l <= k + 1 componentwise. Count the
    // down-closure of {k + 1} weighted by the number of points of each pattern.
    constexpr int bits = 6;
    std::set<std::vector<int>> wide;
    std::unordered_set<std::uint64_t> packed;
    const bool use_packed = d * bits <= 64;

    std::vector<int> l(d);
    for (const auto& k : set.entries) {
        std::fill(l.begin(), l.end(), 0);
        while (true) {
            if (use_packed) {
                std::uint64_t key = 0;
                for (int i = 0; i < d; ++i)
                    key = (key << bits) | static_cast<std::uint64_t>(l[i]);
                packed.insert(key);
            } else {
                wide.insert(l);
            }
            int i = d - 1;
            while (i >= 0 && l[i] == k[i] + 1) {
                l[i] = 0;
                --i;
            }
            if (i < 0)
                break;
            ++l[i];
        }
    }

    auto weight = [](int level) -> std::uint64_t { return level == 0 ? 2 : (std::uint64_t{1} << (level - 1)); };
    std::uint64_t total = 0;
    auto add_pattern = [&](auto&& get) {
        std::uint64_t w = 1;
        for (int i = 0; i < d; ++i)
            if (__builtin_mul_overflow(w, weight(get(i)), &w))
                throw std::overflow_error("grid size overflows 64 bits");
        if (__builtin_add_overflow(total, w, &total))
            throw std::overflow_error("grid size overflows 64 bits");
    };
    if (use_packed) {
        for (auto key : packed)
            add_pattern([&](int i) { return static_cast<int>((key >> (bits * (d - 1 - i))) & ((1u << bits) - 1)); });
    } else {
        for (const auto& pat : wide)
            add_pattern([&](int i) { return pat[i]; });
    }
    return total;
}

std::uint64_t cardinality_D(const IndexSet& set) {
    std::uint64_t total = 0;
    for (const auto& k : set.entries) {
        if (!k.nonnegative())
            throw InvalidParameter("cardinality_D requires levels >= 0");
        const int n = k.l1();
        if (n > 63)
            throw std::overflow_error("2^|k|_1 overflows 64 bits");
        if (__builtin_add_overflow(total, std::uint64_t{1} << n, &total))
            throw std::overflow_error("cardinality overflows 64 bits");
    }
    return total;
}

double cardinality_D_bound(int d, double beta, int m) {
    return beta / (beta - 1.0) * d * std::pow(1.0 - std::exp2(-1.0 / (beta - 1.0)), -d) * std::exp2(m);
}

double grid_size_bound(int d, double beta, int m) {
    return cardinality_D_bound(d, beta, m) * std::exp2(d);
}

ExpSum exp_sum_check(int d, int l, double p) {
    if (d < 1 || l < 0 || !(p >= 1.0))
        throw InvalidParameter("exp_sum_check requires d >= 1, l >= 0, p >= 1");
    ExpSum r;
    for (const auto& k : compositions(d, l)) {
        if (std::isinf(p)) {
            r.exact += std::exp2(k.linf());
        } else {
            double s = 0.0;
            for (int v : k.levels)
                s += std::exp2(p * v);
            r.exact += std::pow(s, 1.0 / p);
        }
    }
    r.bound = d * std::exp2(l + d - 1);
    return r;
}

void write_index_set(std::ostream& out, const IndexSet& set) {
    for (const auto& k : set.entries) {
        for (std::size_t i = 0; i < k.dim(); ++i)
            out << (i ? " " : "") << k[i];
        out << '\n';
    }
}

void write_grid(std::ostream& out, const SparseGrid& grid) {
    for (const auto& pt : grid.points) {
        for (std::size_t i = 0; i < pt.coords.size(); ++i)
            out << (i ? " " : "") << pt.coords[i].str();
        out << '\n';
    }
}

} // namespace fabernet
