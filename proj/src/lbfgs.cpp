#include "embedlab/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "embedlab/errors.hpp"

namespace embedlab {

LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f_grad,
    Eigen::VectorXd x0, std::size_t max_iter, double grad_tol, std::size_t history) {
    const auto n = x0.size();
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd g(n), g_new(n);
    double fx = f_grad(x, g);
    if (!std::isfinite(fx))
        throw DataError("objective not finite at start point");

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    LbfgsResult res;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        res.grad_norm = g.norm();
        if (res.grad_norm < grad_tol) {
            res.converged = true;
            break;
        }

        // two-loop recursion
        Eigen::VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            q *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;

        double dir_deriv = g.dot(dir);
        if (dir_deriv >= 0.0) {
            // fall back to steepest descent if the approximation degenerates
            dir = -g;
            dir_deriv = -g.squaredNorm();
        }

        // Armijo backtracking
        constexpr double c1 = 1e-4;
        double step = s_hist.empty() ? std::min(1.0, 1.0 / res.grad_norm) : 1.0;
        double fx_new = fx;
        Eigen::VectorXd x_new = x;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            fx_new = f_grad(x_new, g_new);
            if (std::isfinite(fx_new) && fx_new <= fx + c1 * step * dir_deriv) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further progress possible at fp precision

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        g = g_new;
        fx = fx_new;
        res.iterations = iter + 1;
    }
    res.x = std::move(x);
    res.fx = fx;
    res.grad_norm = g.norm();
    if (res.grad_norm < grad_tol) res.converged = true;
    return res;
}

}  // namespace embedlab
