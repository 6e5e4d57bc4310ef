#pragma once

// Explicit ReLU networks: squaring and product gadgets, hat networks, and the
// compiler turning a sparse-grid interpolant into a network.

#include "fabernet/faber.hpp"
#include "fabernet/relunet.hpp"
#include "fabernet/sampling.hpp"

#include <cstddef>

namespace fabernet {

/// f_m(t) = t - sum_{s=1}^m g_s(t) / 4^s on [0,1]: the piecewise-linear interpolant of t^2
/// at the nodes j 2^{-m}. Depth m + 1.
ReluNetwork build_square_net(int m_sq);

/// Smallest m with max(2^{-2m}, 2^{-m+1}) <= delta_node.
int node_depth_for(double delta_node);

/// P(x, y) = f_m((x+y)/2) - f_m(|x-y|/2). The two squaring branches are evaluated with
/// identical arithmetic, so P is exactly 0 whenever x = 0 or y = 0.
ReluNetwork build_pair_product_net(double delta_node);
/// Same network for an explicit squaring depth.
ReluNetwork build_pair_product_net_depth(int m_sq);

struct ProductNet {
    ReluNetwork net;
    int arity = 0;
    double delta = 0.0;
    double delta_node = 0.0;
    int m_sq = 0;
    int levels = 0; ///< ceil(log2 arity) tree levels
};

/// Binary tree of pair products approximating x_1 ... x_d on [0,1]^d with value and
/// a.e. derivative error <= delta.
ProductNet build_product_net(int d, double delta);
/// Tree for a fixed squaring depth, without the empirical accuracy check.
ProductNet build_product_net_depth(int d, int m_sq);

/// Hat gadget y_i = sigma(1 - sigma(2^{k_i+1} x_i - 2 s_i - 1) - sigma(2 s_i + 1 - 2^{k_i+1} x_i))
/// followed by the product network. Output is exactly 0 outside the support of phi_{k,s}.
ReluNetwork build_hat_net(const MultiLevel& k, const MultiPosition& s, const ProductNet& product);
ReluNetwork build_hat_net(const MultiLevel& k, const MultiPosition& s, double delta);

struct CompilerPlan {
    ApproxConfig cfg;
    double eps = 0.0;
    int m = 0;
    double delta = 0.0;
    double eps0 = 0.0;
    double K1 = 0.0;
    double B = 0.0;
};

/// min{1, d/(2^{alpha d}(1-2^{1-alpha})), K1 d^2/((p+1)^{d/p} 2^{(alpha+1)d} notch^d)}.
double epsilon0(const ApproxConfig& cfg);
/// (1 - 2^{-1/(beta-1)}) ((p+1)^{1/p} 2^{alpha+1} notch / d^{2 alpha/d})^{1/(alpha-1)}.
double constant_B(const ApproxConfig& cfg);

/// Derived level m, accuracy delta and constants. Throws EpsilonTooLarge when eps >= eps0.
CompilerPlan plan(const ApproxConfig& cfg);

struct CompiledNetwork {
    ReluNetwork net;
    CompilerPlan plan;
    FaberExpansion expansion; ///< R_beta(m, f)
    std::size_t terms = 0;
    int m_sq = 0;
};

/// Parallel sum of lambda_{k,s}(f) times the hat networks over D_beta(m).
CompiledNetwork compile(const FunctionOracle& f, const ApproxConfig& cfg);
/// Same sum, chained sequentially through d source rows and one collation row.
CompiledNetwork compile_narrow(const FunctionOracle& f, const ApproxConfig& cfg);

/// Network computing sum_j lambda_j hat_j for an explicit list of terms, in either layout.
ReluNetwork assemble_hat_sum(const std::vector<FaberTerm>& terms, const ProductNet& product, bool narrow);

} // namespace fabernet
