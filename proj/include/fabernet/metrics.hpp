#pragma once

// Quadrature estimates of L_p, sup and homogeneous W^1_p distances, and an
// empirical lower estimate of the mixed Hoelder-Zygmund norm.

#include "fabernet/faber.hpp"
#include "fabernet/relunet.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fabernet {

/// Function with value and a.e. gradient. fn(x, grad) returns the value and, when
/// grad is non-empty, writes the gradient into it.
struct DiffFunction {
    int dim = 0;
    std::function<double(std::span<const double>, std::span<double>)> fn;
};

DiffFunction zero_function(int d);
DiffFunction from_expansion(std::shared_ptr<const FaberExpansion> e);
DiffFunction from_network(std::shared_ptr<const ReluNetwork> net);

enum class Scheme { tensor_midpoint, monte_carlo };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);

struct QuadratureSpec {
    Scheme scheme = Scheme::monte_carlo;
    int n = 64;                   ///< nodes per axis, tensor scheme
    std::size_t N = 1'000'000;    ///< samples, Monte Carlo
    std::uint64_t seed = 42;

    static QuadratureSpec tensor(int n);
    static QuadratureSpec monte_carlo(std::size_t N, std::uint64_t seed = 42);
    /// Tensor midpoint with n = 2^{level+2} for d <= 2, Monte Carlo with 10^6 samples otherwise.
    static QuadratureSpec default_for(int d, int level);

    /// Throws InvalidParameter on too few nodes or a tensor scheme for d > 3.
    void validate(int d) const;
    std::size_t node_count(int d) const;
};

struct NormEstimate {
    double value = 0.0;
    double std_error = 0.0; ///< 0 for deterministic schemes
};

struct ErrorReport {
    int dim = 0;
    QuadratureSpec quadrature;
    std::size_t nodes = 0;
    std::vector<double> ps;
    std::vector<NormEstimate> w1p; ///< one per p; p = inf gives max_i max_nodes |d_i e|
    std::vector<NormEstimate> lp;  ///< one per p
    double sup = 0.0;              ///< max over nodes of |e|

    const NormEstimate& w1p_at(double p) const;
    const NormEstimate& lp_at(double p) const;
};

/// Values and gradients of one function at the nodes of a quadrature spec.
struct Tabulation {
    int dim = 0;
    QuadratureSpec quadrature;
    std::vector<double> value;
    std::vector<double> grad; ///< node-major, dim entries per node
};

Tabulation tabulate(const DiffFunction& g, const QuadratureSpec& q);

/// Distances between g1 and g2 for every p in ps. All p are evaluated on the same nodes.
ErrorReport measure(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q,
                    const std::vector<double>& ps);
ErrorReport measure(const Tabulation& g1, const DiffFunction& g2, const std::vector<double>& ps);

NormEstimate w1p_estimate(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p);
double w1p_error(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p);
double lp_error(const DiffFunction& g1, const DiffFunction& g2, const QuadratureSpec& q, double p);

/// Calls body(chunk, first_node, count, points) for each chunk; points holds count*d coordinates.
void for_each_node_chunk(const QuadratureSpec& q, int d,
                         const std::function<void(std::size_t, std::size_t, std::size_t, std::span<const double>)>& body);

/// Lower estimate of the mixed Hoelder-Zygmund norm: the largest sampled quotient
/// prod_{i in u} h_i^{-alpha} |Delta_h^{2,u} f(x)| over random (u, x, h), with the
/// floating-point rounding allowance subtracted so the estimate does not overshoot.
double mixed_holder_seminorm_lb(const FunctionOracle& f, int d, double alpha, std::size_t samples,
                                std::uint64_t seed = 7);

} // namespace fabernet
