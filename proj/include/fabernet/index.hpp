#pragma once

// Multi-index sets and dyadic sparse grids organizing the Faber expansion.

#include "fabernet/ratio.hpp"

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fabernet {

/// Level multi-index k. Entries are >= -1; -1 only appears in the general
/// (boundary-including) Faber basis.
struct MultiLevel {
    std::vector<int> levels;

    MultiLevel() = default;
    explicit MultiLevel(std::vector<int> k);

    std::size_t dim() const noexcept { return levels.size(); }
    int operator[](std::size_t i) const { return levels[i]; }
    int l1() const noexcept;
    int linf() const noexcept;
    bool nonnegative() const noexcept;

    auto operator<=>(const MultiLevel&) const = default;
};

/// Position multi-index s paired with a MultiLevel.
struct MultiPosition {
    std::vector<std::int64_t> positions;

    MultiPosition() = default;
    explicit MultiPosition(std::vector<std::int64_t> s);

    std::size_t dim() const noexcept { return positions.size(); }
    std::int64_t operator[](std::size_t i) const { return positions[i]; }

    auto operator<=>(const MultiPosition&) const = default;
};

/// Number of admissible positions for one axis: 2^k for k >= 0, 2 for k = -1.
std::int64_t positions_per_axis(int k);

/// True when s_i lies in Z(k_i) for every axis.
bool valid_position(const MultiLevel& k, const MultiPosition& s);

enum class IndexSetKind { notched, smolyak, full };

std::string to_string(IndexSetKind kind);
IndexSetKind parse_index_set_kind(const std::string& text);

struct IndexSet {
    int dim = 0;
    int m = 0;
    IndexSetKind kind = IndexSetKind::smolyak;
    std::optional<Ratio> beta; ///< set for notched sets only
    std::vector<MultiLevel> entries; ///< sorted ascending, no duplicates

    std::size_t size() const noexcept { return entries.size(); }
    bool contains(const MultiLevel& k) const;
};

/// {k in N_0^d : exists j in 0..m with |k|_1 = m - j and |k|_inf >= m - floor(beta j)}.
IndexSet enumerate_notched(int d, const Ratio& beta, int m);
IndexSet enumerate_notched(int d, double beta, int m);

/// {k in N_0^d : |k|_1 <= m}.
IndexSet enumerate_smolyak(int d, int m);

/// {k in N_0^d : |k|_inf <= m}.
IndexSet enumerate_full(int d, int m);

/// All k in N_0^d with |k|_1 == n, lexicographic order.
std::vector<MultiLevel> compositions(int d, int n);

/// Dyadic rational num / 2^exp in lowest terms (num odd, or num == 0 with exp == 0).
struct Dyadic {
    std::int64_t num = 0;
    int exp = 0;

    static Dyadic reduce(std::int64_t num, int exp);
    double value() const;
    std::string str() const; ///< "num/2^exp", or "0" / "1"

    auto operator<=>(const Dyadic&) const = default;
};

struct GridPoint {
    std::vector<Dyadic> coords;
    std::vector<double> x;

    auto operator<=>(const GridPoint& o) const { return coords <=> o.coords; }
    bool operator==(const GridPoint& o) const { return coords == o.coords; }
};

/// Union over k in S of the level-(k+1) dyadic lattices {2^{-k-1} t : t in {0..2^{k+1}}^d}.
/// These are exactly the stencil points the coefficient functionals of S read.
struct SparseGrid {
    int dim = 0;
    std::vector<GridPoint> points; ///< deduplicated, lexicographic by exact coordinates
};

SparseGrid grid_points(const IndexSet& set);

/// |grid_points(set)| computed by counting dyadic level patterns, without materializing points.
std::uint64_t grid_size(const IndexSet& set);

/// Sum over k in set of 2^{|k|_1}: the number of (k, s) basis terms. Throws std::overflow_error.
std::uint64_t cardinality_D(const IndexSet& set);

/// (beta / (beta - 1)) d (1 - 2^{-1/(beta-1)})^{-d} 2^m.
double cardinality_D_bound(int d, double beta, int m);
/// cardinality_D_bound times 2^d.
double grid_size_bound(int d, double beta, int m);

struct ExpSum {
    double exact = 0.0;
    double bound = 0.0;
};

/// Sum over |k|_1 = l of |2^k|_p against d 2^{l+d-1}. p may be +infinity.
ExpSum exp_sum_check(int d, int l, double p);

/// Writes one line "k_1 ... k_d" per entry.
void write_index_set(std::ostream& out, const IndexSet& set);
/// Writes one line "x_1 ... x_d" per point, each as an exact dyadic "s/2^k".
void write_grid(std::ostream& out, const SparseGrid& grid);

} // namespace fabernet
