#pragma once

// Reference implementations used only by tests. They share no code paths
// with the library's closed form.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "tresim/bayes.hpp"
#include "tresim/pd_metrics.hpp"
#include "tresim/pk_model.hpp"

namespace oracle {

/// One-compartment zero-order infusion: C = R/cl (1 - e^{-k tau}) during,
/// decaying with k = cl/v afterwards.
inline double one_compartment(double t, double cl, double v, const tresim::DosingRegimen& reg) {
  const double k = cl / v;
  double c = 0.0;
  for (const auto& e : reg.events()) {
    if (t <= e.start) continue;
    const double r = e.amount * 1000.0 / e.duration;
    const double on = std::min(t, e.end()) - e.start;
    c += r / cl * (1.0 - std::exp(-k * on)) * std::exp(-k * std::max(0.0, t - e.end()));
  }
  return c;
}

/// Integrates the compartment amounts piecewise with an augmented 3x3
/// matrix exponential (the constant input rate rides in the third state).
inline double two_compartment_expm(double t, const tresim::PkParams& p,
                                   const tresim::DosingRegimen& reg) {
  std::vector<double> cuts = {0.0, t};
  for (const auto& e : reg.events()) {
    if (e.start < t) cuts.push_back(e.start);
    if (e.end() < t) cuts.push_back(e.end());
  }
  std::sort(cuts.begin(), cuts.end());
  const double k10 = p.cl / p.v1, k12 = p.q / p.v1, k21 = p.q / p.v2;
  Eigen::Vector2d amt = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    double rate = 0.0;
    for (const auto& e : reg.events())
      if (mid > e.start && mid < e.end()) rate += e.amount * 1000.0 / e.duration;
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = -(k10 + k12);
    m(0, 1) = k21;
    m(1, 0) = k12;
    m(1, 1) = -k21;
    m(0, 2) = 1.0;
    const Eigen::Matrix3d e = (m * (hi - lo)).exp();
    const Eigen::Vector3d x(amt[0], amt[1], rate);
    const Eigen::Vector3d y = e * x;
    amt = y.head<2>();
  }
  return amt[0] / p.v1;
}

/// Log-posterior written out term by term with dense linear algebra.
inline double log_posterior(const Eigen::Matrix<double, 5, 1>& x, const tresim::SampleSet& data,
                            const tresim::DosingRegimen& reg, const tresim::PriorHyperparams& prior) {
  const double pi = std::numbers::pi;
  const Eigen::Vector4d d = x.head<4>() - prior.mu0;
  double lp = -2.0 * std::log(2.0 * pi) - 0.5 * std::log(prior.sigma0.determinant()) -
              0.5 * d.dot(prior.sigma0.inverse() * d);
  lp += -0.5 * std::log(2.0 * pi * prior.s0 * prior.s0) -
        (x[4] - prior.m0) * (x[4] - prior.m0) / (2.0 * prior.s0 * prior.s0);
  const double sigma = std::exp(x[4]);
  const tresim::PkParams p{std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), sigma};
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double r = data.concentrations[j] - two_compartment_expm(data.times[j], p, reg);
    lp += -0.5 * std::log(2.0 * pi * sigma * sigma) - r * r / (2.0 * sigma * sigma);
  }
  return lp;
}

/// ft by brute force on a fine left-endpoint grid over the evaluation window.
inline double ft_fine(const tresim::PkParams& p, const tresim::DosingRegimen& reg,
                      const tresim::PdConfig& cfg, double step) {
  const double lo = cfg.eval_start, hi = cfg.window_end(reg);
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  std::size_t above = 0;
  for (std::size_t k = 0; k < n; ++k)
    above += tresim::concentration(lo + (static_cast<double>(k) + 0.5) * step, p, reg) > cfg.threshold();
  return static_cast<double>(above) / static_cast<double>(n);
}

}  // namespace oracle
