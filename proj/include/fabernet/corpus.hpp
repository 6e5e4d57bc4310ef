#pragma once

// Test functions vanishing on the boundary of the unit cube, most with a certified
// bound on the mixed Hoelder-Zygmund norm.

#include "fabernet/faber.hpp"
#include "fabernet/metrics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fabernet {

struct CorpusFunction {
    std::string id;
    int dim = 0;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    /// Smoothness range on which the norm certificate holds.
    double alpha_lo = 1.0;
    double alpha_hi = 2.0;
    bool certified = false;
    /// Proven upper bound on the norm for the declared alpha (certified members only).
    double norm_bound = 0.0;
    /// Closed-form coefficient functional, when known.
    std::function<double(const MultiLevel&, const MultiPosition&)> lambda_exact;
    /// Finest dyadic level on which the function still has structure (0 for smooth members).
    int feature_level = 0;

    FunctionOracle oracle() const;
    DiffFunction diff() const;
};

/// 2^{-d} prod x_i (1 - x_i).
CorpusFunction poly_tent(int d);
/// (2^alpha - 2)^{-d} prod (x_i - x_i^alpha); norm exactly 1 at smoothness alpha.
CorpusFunction power_tent(int d, double alpha);
/// c prod g(x_i), g(x) = sum_{k=0}^{K} 2^{-alpha k} sin(2^k pi x), c from a rigorous bound.
CorpusFunction lacunary(int d, double alpha, int K = 8);
/// B-spline bump family 18^{-d} 2^{-alpha m_b} (sum_j y_j psi_{m_b,j}(x_1)) prod_{l>=2} psi(x_l).
CorpusFunction bspline_bump(int d, double alpha, int m_b, const std::vector<int>& y);
CorpusFunction bspline_bump(int d, double alpha);
/// Random Faber expansion over |k|_1 <= m_t with coefficients saturating the decay estimate.
CorpusFunction truncated_series(int d, double alpha, int m_t, std::uint64_t seed);
CorpusFunction zero_corpus(int d);

/// Quadratic B-spline with knots 0, 1, 2, 3 and its derivative.
double bspline_M3(double x);
double bspline_M3_deriv(double x);

/// Rigorous upper bound on sup_h h^{-alpha} |Delta_h^2 g| for the lacunary profile g.
double lacunary_difference_bound(double alpha, int K);

struct CorpusInfo {
    std::string id;
    int d_min = 1;
    int d_max = 0; ///< 0: unbounded
    double alpha_lo = 1.0;
    double alpha_hi = 2.0;
    bool certified = false;
    std::string note;
};

std::vector<CorpusInfo> corpus_list();
/// Builds a registered member with default parameters. Throws InvalidParameter for unknown ids.
CorpusFunction make_corpus(const std::string& id, int d, double alpha);

} // namespace fabernet
