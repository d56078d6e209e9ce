#pragma once

#include <Eigen/Dense>
#include <functional>

namespace embedlab {

struct LbfgsResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with Armijo backtracking line search. f_grad must
// return the objective and fill grad. Suited to smooth convex objectives;
// descent is monotone, so fx never exceeds the value at x0.
LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f_grad,
    Eigen::VectorXd x0, std::size_t max_iter, double grad_tol, std::size_t history = 10);

}  // namespace embedlab
