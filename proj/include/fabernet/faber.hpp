#pragma once

// Univariate and tensor-product Faber hat functions, coefficient functionals,
// and finite Faber expansions.

#include "fabernet/index.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace fabernet {

using FunctionOracle = std::function<double(std::span<const double>)>;

struct FaberIndex {
    MultiLevel k;
    MultiPosition s;

    auto operator<=>(const FaberIndex&) const = default;
};

struct FaberTerm {
    FaberIndex index;
    double coefficient = 0.0;
};

/// phi_{k,s}(x): max(0, 1 - |2^{k+1} x - 2s - 1|) for k >= 0; 1 - x (s = 0) or x (s = 1) for k = -1.
/// Throws std::domain_error for x outside [0, 1].
double hat_eval(int k, std::int64_t s, double x);

/// Right derivative of phi_{k,s} (left derivative at x = 1).
double hat_deriv(int k, std::int64_t s, double x);

double tensor_hat_eval(const MultiLevel& k, const MultiPosition& s, std::span<const double> x);
std::vector<double> tensor_hat_grad(const MultiLevel& k, const MultiPosition& s, std::span<const double> x);

/// Mixed second-difference functional. Reads f at 3 points per axis with k_i >= 0
/// (offsets 0, 2^{-k_i-1}, 2^{-k_i}) and at the vertex s_i for k_i = -1.
double lambda(const FunctionOracle& f, const MultiLevel& k, const MultiPosition& s);

/// Finite Faber series. Coefficients are stored per level in dense blocks so that
/// evaluation touches one candidate cell per level.
class FaberExpansion {
public:
    FaberExpansion() = default;
    explicit FaberExpansion(int dim);

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }

    /// Inserts or overwrites one term.
    void set(const FaberIndex& index, double coefficient);
    /// Coefficient of a term, 0 when absent.
    double coefficient(const FaberIndex& index) const;
    bool contains(const FaberIndex& index) const;

    /// All terms sorted by (k, s).
    std::vector<FaberTerm> terms() const;
    std::vector<MultiLevel> levels() const;

    /// Single-level slice q_k of this expansion.
    FaberExpansion level(const MultiLevel& k) const;

    double eval(std::span<const double> x) const;
    /// Value and gradient; grad must have dim() entries.
    double eval_grad(std::span<const double> x, std::span<double> grad) const;
    std::vector<double> grad(std::span<const double> x) const;

private:
    struct Block {
        std::vector<double> coef;
        std::vector<char> present;
    };

    std::size_t offset(const MultiLevel& k, const MultiPosition& s) const;
    double accumulate(const MultiLevel& k, const Block& block, std::span<const double> x, std::span<double> grad) const;

    int dim_ = 0;
    std::size_t count_ = 0;
    std::map<MultiLevel, Block> blocks_;
    int max_level_ = -1;
    bool has_boundary_ = false; ///< some level entry is -1
};

/// One line "k_1 ... k_d | s_1 ... s_d | coefficient" per term, 17 significant digits.
void write_expansion(std::ostream& out, const FaberExpansion& e);
/// Inverse of write_expansion. Lines starting with '#' are skipped.
FaberExpansion read_expansion(std::istream& in);

} // namespace fabernet
