#pragma once

// Acceptance suite and parameter sweeps shared by the command-line tool and the
// acceptance test binary.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace fabernet {

struct ExperimentConfig {
    /// Acceptance criteria to run (1..10).
    std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    // Sampling-operator grid (criterion 3).
    std::vector<int> dims{2, 3};
    std::vector<double> alphas{1.5, 2.0};
    /// Absolute beta values; empty means beta = alpha + 1.
    std::vector<double> betas;
    std::vector<double> ps{1.0, 2.0, std::numeric_limits<double>::infinity()};
    std::vector<int> ms{1, 2, 3, 4, 5, 6};
    std::vector<std::string> corpus{"poly_tent", "power_tent", "lacunary", "bspline_bump"};
    /// Corpus member whose error rate is fitted for alpha < 2 (rough at every point).
    std::string rate_function = "lacunary";
    /// Member used at alpha = 2, where lacunary series carry a k 2^{-2k} coefficient factor.
    std::string rate_function_alpha2 = "poly_tent";

    // Compiler cells (criteria 7, 8 and 9, sweep). Betas are absolute.
    std::vector<int> compile_dims{2};
    std::vector<double> compile_alphas{2.0};
    std::vector<double> compile_betas{3.0};
    std::vector<double> compile_ps{2.0};
    std::string compile_function = "poly_tent";
    /// Members compiled at the same parameters for the architecture comparison.
    std::vector<std::string> architecture_corpus{"poly_tent", "power_tent", "lacunary", "bspline_bump"};
    std::vector<double> eps{0.2, 0.1};
    std::vector<double> sweep_eps{0.2, 0.1, 0.05, 0.025, 0.0125};
    /// Dimensions compared in the narrow layout check, each at eps0 / 2.
    std::vector<int> narrow_dims{2, 3, 4};

    /// Monte Carlo sample count for d >= 3.
    std::size_t mc_samples = 1'000'000;
    std::string out_dir = ".";
    std::uint64_t seed = 42;

    /// Throws InvalidParameter on out-of-range entries (beta <= alpha, alpha outside (1, 2], ...).
    void validate() const;
};

enum class Status { pass, fail, skip };

std::string to_string(Status s);

/// One measured-vs-bound row.
struct CheckRow {
    int criterion = 0;
    std::string cell;
    double measured = 0.0;
    double bound = 0.0;
    Status status = Status::pass;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    Status status = Status::pass;
    std::string summary;
    std::vector<CheckRow> rows;
    double seconds = 0.0;
};

CriterionResult check_interpolation(const ExperimentConfig& cfg);   // 1
CriterionResult check_coefficient_decay(const ExperimentConfig& cfg); // 2
CriterionResult check_sampling_error(const ExperimentConfig& cfg);  // 3
CriterionResult check_cardinality(const ExperimentConfig& cfg);     // 4
CriterionResult check_product_nets(const ExperimentConfig& cfg);    // 5
CriterionResult check_hat_nets(const ExperimentConfig& cfg);        // 6
CriterionResult check_end_to_end(const ExperimentConfig& cfg);      // 7
CriterionResult check_scaling(const ExperimentConfig& cfg);         // 8
CriterionResult check_narrow(const ExperimentConfig& cfg);          // 9
CriterionResult check_combinators(const ExperimentConfig& cfg);     // 10

CriterionResult run_criterion(int id, const ExperimentConfig& cfg);

struct VerifyReport {
    std::vector<CriterionResult> results;
    /// 0 when nothing failed, 1 otherwise.
    int exit_code() const;
};

/// Runs the selected criteria, streaming one status line per criterion to log
/// (when non-null), and writes <out_dir>/verify.csv.
VerifyReport verify_all(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void write_check_rows(std::ostream& out, const std::vector<CriterionResult>& results);

struct SweepRow {
    int d = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double p = 0.0;
    double eps = 0.0;
    int m = 0;
    double delta = 0.0;
    std::size_t terms = 0;
    std::size_t W = 0;
    int L = 0;
    int N_w = 0;
    double err_w1p = 0.0; ///< NaN when not measured
    double bound_thm31 = 0.0;
    double B = 0.0;
    double eps0 = 0.0;
    bool skipped = false; ///< eps >= eps0
};

struct SweepResult {
    std::vector<SweepRow> rows; ///< sorted by (d, alpha, beta, p, eps descending)
    /// Least-squares constants through the origin: L ~ K2 log2 d log2(1/eps),
    /// W ~ K3 B^{-d} eps^{-1/(alpha-1)} log2(1/eps).
    double K2 = 0.0;
    double K3 = 0.0;
};

/// Compiles compile_function for every compiler cell and sweep_eps value, and
/// records sizes; measures the W^1_p error when measure is set.
SweepResult report_sweep(const ExperimentConfig& cfg, bool measure = true);
/// CSV with 17 significant digits, one row per cell.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Least-squares slope and R^2 of y against x (with intercept).
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Least-squares coefficient c of y = c x.
double fit_through_origin(const std::vector<double>& x, const std::vector<double>& y);

} // namespace fabernet
