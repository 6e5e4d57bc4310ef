#pragma once

// Sparse-grid sampling operator R_beta(m, f) and its error budget.

#include "fabernet/faber.hpp"
#include "fabernet/index.hpp"

#include <optional>

namespace fabernet {

struct ApproxConfig {
    int d = 2;
    double alpha = 2.0;
    double beta = 3.0;
    double p = 2.0; ///< may be +infinity
    std::optional<double> eps;

    /// Throws InvalidParameter unless d >= 1, 1 < alpha <= 2, beta > alpha, p >= 1 and eps > 0 when set.
    void validate() const;

    /// (p+1)^{e/p}, with limit 1 for p = infinity.
    double p_factor(double e) const;
    /// 2 (p+1)^{1/p} max{2 beta / (beta - 1), 1 / (2^{alpha-1} - 1)}.
    double K1() const;
    /// 1 - 2^{-(beta - alpha)/(beta - 1)}.
    double notch_factor() const;
};

/// K1 d^2 2^{-m(alpha-1)} / ((p+1)^{d/p} 2^{(alpha+1)d} notch_factor^d).
double theorem31_bound(const ApproxConfig& cfg, int m);

/// Upper bound on ||q_k(f)|| in the homogeneous W^1_p norm for f in the unit ball:
/// 2^{-alpha|k|_1 + 1} |2^k|_p / ((p+1)^{(d-1)/p} 2^{(alpha+1)d}).
double qk_norm_bound(const ApproxConfig& cfg, const MultiLevel& k);

/// Sum over k in set of q_k(f). Each grid point is evaluated once; f must be safe to call concurrently.
FaberExpansion build_R(const FunctionOracle& f, const IndexSet& set);
/// R over the notched set of cfg at level m.
FaberExpansion build_R(const FunctionOracle& f, const ApproxConfig& cfg, int m);

/// Single level q_k(f) with 2^{|k|_1} terms.
FaberExpansion qk_layer(const FunctionOracle& f, const MultiLevel& k);

} // namespace fabernet
