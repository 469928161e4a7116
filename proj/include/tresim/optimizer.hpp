#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace tresim {

struct BfgsOptions {
  double grad_tol = 1e-6;   // sup-norm of the gradient
  double rel_tol = 1e-10;   // relative objective change after an accepted step
  int max_iter = 200;
  int max_backtracks = 40;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Minimizes f with inverse-Hessian BFGS and a backtracking Armijo search.
///
/// `f(x, g)` returns the objective and writes its gradient into g; a
/// non-finite return marks x as infeasible and the step is shortened.
/// `inv_hessian0` seeds the inverse-Hessian estimate (and is restored when
/// the search direction stops being a descent direction).
template <class Objective>
BfgsResult bfgs_minimize(Objective&& f, Eigen::VectorXd x, const Eigen::MatrixXd& inv_hessian0,
                         const BfgsOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), g_new(n), x_new(n);
  Eigen::MatrixXd h = inv_hessian0;

  BfgsResult res;
  double fx = f(x, g);
  if (!std::isfinite(fx)) {
    res.x = x;
    return res;
  }

  bool reset_once = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < opt.grad_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd dir = -(h * g);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h = inv_hessian0;
      dir = -(h * g);
      slope = g.dot(dir);
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      double next = 0.5 * step;
      if (std::isfinite(f_new)) {
        // minimizer of the interpolating quadratic, kept within [0.1, 0.5] * step
        const double denom = 2.0 * (f_new - fx - slope * step);
        if (denom > 0.0) next = std::clamp(-slope * step * step / denom, 0.1 * step, 0.5 * step);
      } else {
        next = 0.1 * step;
      }
      step = next;
    }

    if (!accepted) {
      if (reset_once) break;
      // one more try along steepest descent scaled by the prior curvature
      reset_once = true;
      h = inv_hessian0;
      continue;
    }
    reset_once = false;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) -
           rho * (hy * s.transpose() + s * hy.transpose());
    }

    const double change = std::abs(fx - f_new);
    x = x_new;
    g = g_new;
    fx = f_new;
    // a stalled objective only counts when the gradient is nearly flat too;
    // otherwise keep iterating, the curvature estimate usually recovers
    if (change <= opt.rel_tol * std::max(1.0, std::abs(fx)) && g.lpNorm<Eigen::Infinity>() < 10.0 * opt.grad_tol) {
      res.converged = true;
      res.iterations = it + 1;
      break;
    }
  }

  res.x = x;
  res.value = fx;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  if (res.grad_norm < opt.grad_tol) res.converged = true;
  return res;
}

}  // namespace tresim
