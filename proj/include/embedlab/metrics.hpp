#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// ---- classification metrics ----

// Per-class recall over the classes present in y_true, indexed by class id
// (absent classes get NaN).
std::vector<double> per_class_recall(std::span<const int> y_true,
                                     std::span<const int> y_pred,
                                     std::size_t num_classes = 0);

// Mean per-class recall over classes present in y_true.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

struct F1Result {
    std::vector<double> per_class;  // F1 per class id; 0 on zero division
    double weighted = 0.0;          // support-weighted mean
    double macro = 0.0;             // unweighted mean over classes present in y_true
};
F1Result f1_scores(std::span<const int> y_true, std::span<const int> y_pred,
                   std::size_t num_classes = 0);

// Rank-based (Mann-Whitney) AUROC with midrank tie handling. Equals the
// brute-force pairwise statistic exactly. Labels must contain both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Macro-averaged one-vs-rest AUROC. Every class in [0, C) must be present.
double multiclass_auroc(const MatrixXdRM& probs, std::span<const int> labels);

// ---- bootstrap ----

struct MetricEntry {
    double point = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_boot = 0;
    std::uint64_t seed = 0;
};

// statistic receives a multiset of row indices (the resample) and returns the
// metric value; it may throw DegenerateLabels, in which case the replicate is
// redrawn (up to 100 retries, then BootstrapDegenerate). Replicate streams
// are forked from the seed by replicate index, so results are identical for
// any thread count.
MetricEntry bootstrap_ci(const std::function<double(std::span<const std::size_t>)>& statistic,
                         std::size_t n, std::size_t n_boot, std::uint64_t seed,
                         unsigned threads = 1);

// Raw replicate vector (same resampling scheme); used for t-tests on
// bootstrap distributions.
std::vector<double> bootstrap_replicates(
    const std::function<double(std::span<const std::size_t>)>& statistic,
    std::size_t n, std::size_t n_boot, std::uint64_t seed, unsigned threads = 1);

// ---- hypothesis tests ----

enum class Alternative { two_sided, greater, less };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df = 0.0;  // where applicable
};

// Unequal-variance t-test, Welch-Satterthwaite degrees of freedom, two-sided.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Paired t-test on differences a-b, two-sided. Zero-variance differences with
// zero mean give t=0, p=1.
TestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Signed-rank test on a-b. Zero differences are dropped; ties get midranks.
// Exact null distribution (conditional on the observed ranks) for n <= 25,
// else normal approximation with tie correction and continuity correction.
// The statistic is W+ = sum of ranks of positive differences.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                Alternative alt);

// ---- cross-validation aggregation: mean +/- 1.96 * SD/sqrt(N) ----

struct CvSummary {
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n = 0;
};
CvSummary cv_aggregate(std::span<const double> fold_values);

// ---- special functions (double precision, exposed for tests) ----
namespace detail {
double regularized_incomplete_beta(double a, double b, double x);
double regularized_gamma_q(double s, double x);  // upper: Q(s, x)
double student_t_sf(double t, double df);        // P(T > t)
double chi2_sf(double x, double df);
double normal_sf(double z);
}  // namespace detail

}  // namespace embedlab
