#pragma once

#include <span>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// Product-limit survival estimate with Greenwood variance, evaluated as a
// right-continuous step function. Entries are stored at event times only;
// censored times shrink the risk set without adding steps.
struct KmCurve {
    std::vector<double> times;      // distinct event times, ascending
    std::vector<double> survival;   // S(t) just after each event time
    std::vector<double> variance;   // Greenwood variance of S at each time
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;

    double at(double t) const;       // S(t)
    double at_left(double t) const;  // S(t-)
};

KmCurve kaplan_meier(std::span<const double> time, std::span<const int> event);

struct LogRankResult {
    double chi2 = 0.0;
    double p_value = 1.0;
};

// Two-group log-rank test, 1 df.
LogRankResult log_rank(std::span<const double> time_a, std::span<const int> event_a,
                       std::span<const double> time_b, std::span<const int> event_b);

struct CoxResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd hazard_ratio;  // exp(beta)
    Eigen::VectorXd se;
    Eigen::VectorXd ci_lo;         // 95% CI of the hazard ratio
    Eigen::VectorXd ci_hi;
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;        // false flags non-convergence (e.g. monotone likelihood)
};

// Cox proportional hazards by Newton-Raphson on the Breslow partial
// likelihood with step-halving; converges when the score norm drops below
// tol or after max_iter iterations.
CoxResult cox_fit(const MatrixXdRM& covariates, std::span<const double> time,
                  std::span<const int> event, std::size_t max_iter = 50, double tol = 1e-8);

// Cumulative-case / dynamic-control AUC at the horizon, censoring handled by
// inverse-probability-of-censoring weights from the Kaplan-Meier estimate of
// the censoring distribution. Equals the static AUROC of indicator(T <= t)
// when no censoring is present.
double time_dependent_roc(std::span<const double> time, std::span<const int> event,
                          std::span<const double> risk_score, double horizon);

}  // namespace embedlab
