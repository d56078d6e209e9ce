#include "embedlab/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "embedlab/errors.hpp"
#include "embedlab/metrics.hpp"

namespace embedlab {

namespace {

void check_survival_input(std::span<const double> time, std::span<const int> event) {
    if (time.empty())
        throw DataError("no records");
    if (time.size() != event.size())
        throw ShapeError("time and event length mismatch");
    for (double t : time)
        if (!(t > 0.0) || !std::isfinite(t))
            throw DataError("times must be positive and finite");
}

}  // namespace

double KmCurve::at(double t) const {
    // S of the last event time <= t
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double KmCurve::at_left(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve kaplan_meier(std::span<const double> time, std::span<const int> event) {
    check_survival_input(time, event);
    const std::size_t n = time.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    KmCurve curve;
    double s = 1.0;
    double greenwood_sum = 0.0;
    std::size_t i = 0;
    std::size_t at_risk = n;
    while (i < n) {
        const double t = time[order[i]];
        std::size_t deaths = 0, removed = 0;
        while (i < n && time[order[i]] == t) {
            if (event[order[i]] != 0) ++deaths;
            ++removed;
            ++i;
        }
        if (deaths > 0) {
            const double nr = static_cast<double>(at_risk);
            const double d = static_cast<double>(deaths);
            s *= 1.0 - d / nr;
            if (nr - d > 0.0)
                greenwood_sum += d / (nr * (nr - d));
            curve.times.push_back(t);
            curve.survival.push_back(s);
            curve.variance.push_back(s * s * greenwood_sum);
            curve.at_risk.push_back(at_risk);
            curve.events.push_back(deaths);
        }
        at_risk -= removed;
    }
    return curve;
}

LogRankResult log_rank(std::span<const double> time_a, std::span<const int> event_a,
                       std::span<const double> time_b, std::span<const int> event_b) {
    check_survival_input(time_a, event_a);
    check_survival_input(time_b, event_b);

    struct Obs {
        double t;
        int ev;
        int grp;
    };
    std::vector<Obs> all;
    all.reserve(time_a.size() + time_b.size());
    for (std::size_t i = 0; i < time_a.size(); ++i)
        all.push_back({time_a[i], event_a[i], 0});
    for (std::size_t i = 0; i < time_b.size(); ++i)
        all.push_back({time_b[i], event_b[i], 1});
    std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.t < y.t; });

    std::size_t total_events = 0;
    for (const auto& o : all) total_events += o.ev != 0 ? 1 : 0;
    if (total_events == 0)
        throw DegenerateTest("no events in either group");

    double observed_a = 0.0, expected_a = 0.0, variance = 0.0;
    std::size_t risk_a = time_a.size();
    std::size_t risk_b = time_b.size();
    std::size_t i = 0;
    const std::size_t n = all.size();
    while (i < n) {
        const double t = all[i].t;
        std::size_t d_a = 0, d_b = 0, rm_a = 0, rm_b = 0;
        while (i < n && all[i].t == t) {
            if (all[i].grp == 0) {
                ++rm_a;
                if (all[i].ev != 0) ++d_a;
            } else {
                ++rm_b;
                if (all[i].ev != 0) ++d_b;
            }
            ++i;
        }
        const double d = static_cast<double>(d_a + d_b);
        if (d > 0.0) {
            const double n1 = static_cast<double>(risk_a);
            const double n2 = static_cast<double>(risk_b);
            const double nt = n1 + n2;
            observed_a += static_cast<double>(d_a);
            expected_a += d * n1 / nt;
            if (nt > 1.0)
                variance += d * (n1 / nt) * (n2 / nt) * (nt - d) / (nt - 1.0);
        }
        risk_a -= rm_a;
        risk_b -= rm_b;
    }

    LogRankResult r;
    if (variance <= 0.0) {
        r.chi2 = 0.0;
        r.p_value = 1.0;
        return r;
    }
    const double diff = observed_a - expected_a;
    r.chi2 = diff * diff / variance;
    r.p_value = detail::chi2_sf(r.chi2, 1.0);
    return r;
}

namespace {

// Breslow log partial likelihood, score and information. Rows sorted by
// descending time accumulate into the risk set before their own event group
// is processed; ties share the full risk set.
struct PartialLik {
    double ll = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd info;  // negative Hessian
};

PartialLik breslow(const MatrixXdRM& x, std::span<const double> time,
                   std::span<const int> event, const Eigen::VectorXd& beta,
                   const std::vector<std::size_t>& desc_order) {
    const auto p = x.cols();
    PartialLik out;
    out.score = Eigen::VectorXd::Zero(p);
    out.info = Eigen::MatrixXd::Zero(p, p);

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

    const std::size_t n = desc_order.size();
    std::size_t i = 0;
    while (i < n) {
        const double t = time[desc_order[i]];
        // enter everyone with this time into the risk set
        std::size_t j = i;
        while (j < n && time[desc_order[j]] == t) {
            const auto r = desc_order[j];
            const auto xr = x.row(static_cast<Eigen::Index>(r));
            const double w = std::exp(xr.dot(beta));
            s0 += w;
            s1 += w * xr.transpose();
            s2 += w * xr.transpose() * xr;
            ++j;
        }
        // then process the events at this time against the full risk set
        std::size_t deaths = 0;
        Eigen::VectorXd xsum = Eigen::VectorXd::Zero(p);
        for (std::size_t k = i; k < j; ++k) {
            const auto r = desc_order[k];
            if (event[r] != 0) {
                ++deaths;
                xsum += x.row(static_cast<Eigen::Index>(r)).transpose();
            }
        }
        if (deaths > 0) {
            const double d = static_cast<double>(deaths);
            out.ll += xsum.dot(beta) - d * std::log(s0);
            const Eigen::VectorXd mean = s1 / s0;
            out.score += xsum - d * mean;
            out.info += d * (s2 / s0 - mean * mean.transpose());
        }
        i = j;
    }
    return out;
}

}  // namespace

CoxResult cox_fit(const MatrixXdRM& covariates, std::span<const double> time,
                  std::span<const int> event, std::size_t max_iter, double tol) {
    check_survival_input(time, event);
    const auto n = static_cast<std::size_t>(covariates.rows());
    const auto p = covariates.cols();
    if (n != time.size())
        throw ShapeError("covariate rows != record count");
    if (p == 0)
        throw DataError("no covariates");
    for (Eigen::Index i = 0; i < covariates.rows(); ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (!std::isfinite(covariates(i, j)))
                throw DataError("non-finite covariate");
    std::size_t n_events = 0;
    for (int e : event) n_events += e != 0 ? 1 : 0;
    if (n_events == 0)
        throw DataError("no events");
    for (Eigen::Index j = 0; j < p; ++j) {
        const double first = covariates(0, j);
        bool varies = false;
        for (Eigen::Index i = 1; i < covariates.rows(); ++i)
            if (covariates(i, j) != first) {
                varies = true;
                break;
            }
        if (!varies)
            throw DegenerateCovariate("covariate column " + std::to_string(j) + " is constant");
    }

    std::vector<std::size_t> desc(n);
    std::iota(desc.begin(), desc.end(), std::size_t{0});
    std::sort(desc.begin(), desc.end(),
              [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

    CoxResult res;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    PartialLik cur = breslow(covariates, time, event, beta, desc);
    res.converged = false;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        if (cur.score.norm() < tol) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        const Eigen::VectorXd direction = cur.info.ldlt().solve(cur.score);
        double step = 1.0;
        bool improved = false;
        // near the optimum the true likelihood gain drops below the rounding
        // noise of ll itself; accept anything within that noise band so the
        // quadratic Newton step can still drive the score to the tolerance
        const double slack =
            8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(cur.ll));
        for (int h = 0; h < 30; ++h) {
            const Eigen::VectorXd candidate = beta + step * direction;
            if ((candidate.array() == beta.array()).all()) break;  // step underflowed
            PartialLik next = breslow(covariates, time, event, candidate, desc);
            if (std::isfinite(next.ll) && next.ll >= cur.ll - slack) {
                beta = candidate;
                cur = std::move(next);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;  // monotone likelihood / numerical limit
    }
    if (cur.score.norm() < tol) res.converged = true;
    // a runaway coefficient means the partial likelihood is monotone
    // (perfect separation); the score can still vanish numerically there
    if (beta.cwiseAbs().maxCoeff() > 15.0) res.converged = false;

    res.beta = beta;
    res.log_likelihood = cur.ll;
    res.hazard_ratio = beta.array().exp();
    const Eigen::MatrixXd cov = cur.info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    res.se = cov.diagonal().array().max(0.0).sqrt();
    res.ci_lo = (beta - 1.96 * res.se).array().exp();
    res.ci_hi = (beta + 1.96 * res.se).array().exp();
    return res;
}

double time_dependent_roc(std::span<const double> time, std::span<const int> event,
                          std::span<const double> risk_score, double horizon) {
    check_survival_input(time, event);
    if (risk_score.size() != time.size())
        throw ShapeError("risk_score length mismatch");
    if (!(horizon > 0.0))
        throw RangeError("horizon must be positive");

    // censoring distribution G(t) = P(C > t): KM with flipped indicator
    std::vector<int> censor_indicator(event.size());
    for (std::size_t i = 0; i < event.size(); ++i)
        censor_indicator[i] = event[i] != 0 ? 0 : 1;
    const KmCurve g = kaplan_meier(time, censor_indicator);

    // cases: event by the horizon; controls: still at risk past it
    std::vector<std::size_t> cases, controls;
    std::vector<double> case_weight;
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (time[i] <= horizon && event[i] != 0) {
            const double gi = g.at_left(time[i]);
            if (gi <= 0.0) continue;  // inestimable past the last censoring time
            cases.push_back(i);
            case_weight.push_back(1.0 / gi);
        } else if (time[i] > horizon) {
            controls.push_back(i);
        }
    }
    if (cases.empty() || controls.empty())
        throw DegenerateHorizon("no cases or no controls at horizon " + std::to_string(horizon));
    const double g_horizon = g.at(horizon);
    if (g_horizon <= 0.0)
        throw DegenerateHorizon("censoring survival vanishes at horizon");
    const double control_weight = 1.0 / g_horizon;

    double num = 0.0, w_cases = 0.0;
    for (std::size_t a = 0; a < cases.size(); ++a) {
        w_cases += case_weight[a];
        const double ra = risk_score[cases[a]];
        double row = 0.0;
        for (const std::size_t b : controls) {
            const double rb = risk_score[b];
            if (ra > rb) row += 1.0;
            else if (ra == rb) row += 0.5;
        }
        num += case_weight[a] * control_weight * row;
    }
    const double w_controls = control_weight * static_cast<double>(controls.size());
    return num / (w_cases * w_controls);
}

}  // namespace embedlab
