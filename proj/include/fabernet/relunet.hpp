#pragma once

// Sparse feed-forward ReLU networks: evaluation, a.e. gradient, interval bounds,
// parallelization and special (source/collation channel) networks.

#include <cstdint>
#include <span>
#include <vector>

namespace fabernet {

struct Entry {
    int row = 0;
    int col = 0;
    double weight = 0.0;

    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Affine map R^cols -> R^rows with a sparse weight matrix and dense bias.
/// Entries are sorted by (row, col), unique, and never zero.
class Layer {
public:
    Layer() = default;
    Layer(int rows, int cols);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }

    /// Adds w to entry (r, c). Zero w is rejected; entries summing to zero are dropped at finalize().
    void add(int r, int c, double w);
    void set_bias(int r, double b);
    void add_bias(int r, double b);

    /// Sorts and merges pending entries. Required before any read access.
    void finalize();
    bool finalized() const noexcept { return !dirty_; }

    const std::vector<Entry>& entries() const;
    const std::vector<double>& bias() const noexcept { return bias_; }
    /// CSR offsets: entries of row r are entries()[row_start()[r] .. row_start()[r+1]).
    const std::vector<std::size_t>& row_start() const noexcept { return row_start_; }
    std::size_t weight_count() const;
    std::size_t bias_count() const;

    /// out = W in + b (no activation). Entries of each row accumulate in stored order.
    void apply(std::span<const double> in, std::span<double> out) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    bool dirty_ = false;
    std::vector<Entry> entries_;
    std::vector<double> bias_;
    std::vector<std::size_t> row_start_;
};

struct NetworkStats {
    int L = 0;
    std::size_t W = 0;
    int N_w = 0;
    std::vector<int> dims;
};

class ReluNetwork {
public:
    ReluNetwork() = default;
    /// Layers must chain (cols of layer l+1 == rows of layer l), output dim 1, at least 2 layers.
    explicit ReluNetwork(std::vector<Layer> layers);

    int input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().cols(); }
    int depth() const noexcept { return static_cast<int>(layers_.size()); }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<int> dims() const;

    double eval(std::span<const double> x) const;
    /// Gradient with sigma'(0) = 0.
    std::vector<double> grad(std::span<const double> x) const;
    double eval_grad(std::span<const double> x, std::span<double> grad) const;

    NetworkStats stats() const;

    /// Same dims and same set of (layer, row, col) weight positions and nonzero bias positions.
    bool same_pattern(const ReluNetwork& other) const;
    /// Every weight/bias position of this network is present in other (dims equal).
    bool pattern_subset_of(const ReluNetwork& other) const;

private:
    std::vector<Layer> layers_;
};

NetworkStats stats(const ReluNetwork& net);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Per-layer pre-activation intervals for inputs in [0,1]^d. Hidden rows flagged in
/// linear_rows skip the ReLU clamp. The last entry is the output interval.
std::vector<std::vector<Interval>> layer_intervals(const ReluNetwork& net,
                                                   const std::vector<std::vector<char>>& linear_rows = {});

/// Guaranteed upper bound on sup |net(x)| over [0,1]^d.
double bound_output(const ReluNetwork& net);

/// Output sum_j lambda_j net_j(x). bounds[j] >= sup |net_j| is required for nets shorter
/// than the deepest one; bounds smaller than a sampled output are rejected.
ReluNetwork parallelize(const std::vector<ReluNetwork>& nets, const std::vector<double>& lambdas,
                        const std::vector<double>& bounds);
/// As above with bounds from bound_output.
ReluNetwork parallelize(const std::vector<ReluNetwork>& nets, const std::vector<double>& lambdas);

/// Sum over j<L_j<L of (L - L_j + 2) plus sum of W_j.
std::size_t parallelize_size_bound(const std::vector<ReluNetwork>& nets);

/// Network whose hidden rows may be activation-free: the first `sources` rows of each
/// hidden layer copy the input, and collation rows accumulate partial sums.
struct SpecialNetwork {
    ReluNetwork net;
    int sources = 0;
    /// linear_rows[l][r] != 0 when hidden row r of layer l has no activation.
    std::vector<std::vector<char>> linear_rows;

    double eval(std::span<const double> x) const;
};

/// Shifts every activation-free row by c = max(0, -lower bound) so the ReLU is exact,
/// and compensates in the next layer's bias. Depth and width are unchanged.
ReluNetwork special_to_standard(const SpecialNetwork& special);

} // namespace fabernet
