#pragma once

// Pharmacodynamic endpoint ft > k x MIC: the fraction of the evaluation
// window during which the central concentration exceeds k * MIC.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tresim/bayes.hpp"
#include "tresim/pk_model.hpp"
#include "tresim/stats.hpp"

namespace tresim {

struct PdConfig {
  double mic = 16.0;  // ug/mL
  double k = 4.0;
  double eval_start = 0.0;
  std::optional<double> eval_end;  // unset: regimen horizon
  double grid_step = 0.01;         // h

  double threshold() const { return k * mic; }

  double window_end(const DosingRegimen& regimen) const {
    return eval_end.value_or(regimen.horizon());
  }

  void validate() const {
    if (!(mic > 0.0) || !(k > 0.0)) throw std::invalid_argument("PdConfig: mic and k must be > 0");
    if (!(grid_step > 0.0)) throw std::invalid_argument("PdConfig: grid_step must be > 0");
    if (eval_end && !(*eval_end > eval_start))
      throw std::invalid_argument("PdConfig: eval_start must precede eval_end");
  }
};

/// Fraction of grid cells over [eval_start, eval_end] whose midpoint
/// concentration is strictly above the threshold. The cell count is the
/// window length over grid_step, rounded.
inline double ft_above_threshold(const PkParams& p, const DosingRegimen& regimen,
                                 const PdConfig& cfg) {
  const double lo = cfg.eval_start;
  const double hi = cfg.window_end(regimen);
  if (!(hi > lo)) throw std::invalid_argument("ft_above_threshold: empty evaluation window");
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round((hi - lo) / cfg.grid_step)));
  const double step = (hi - lo) / static_cast<double>(n);
  const double thr = cfg.threshold();
  std::size_t above = 0;
  for_each_grid_concentration(p, regimen, lo + 0.5 * step, step, n,
                              [&](std::size_t, double c) { above += c > thr; });
  return static_cast<double>(above) / static_cast<double>(n);
}

/// Plug-in estimate at the posterior mode.
inline double ft_from_posterior(const LaplacePosterior& post, const DosingRegimen& regimen,
                                const PdConfig& cfg) {
  if (!post.converged) throw std::invalid_argument("ft_from_posterior: posterior did not converge");
  return ft_above_threshold(post.params(), regimen, cfg);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// Percentile interval of ft over posterior draws.
inline Interval credible_interval_ft(const LaplacePosterior& post, const DosingRegimen& regimen,
                                     const PdConfig& cfg, double level, std::size_t n_draws,
                                     Rng& rng) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_interval_ft: level must lie in (0, 1)");
  if (n_draws < 100) throw std::invalid_argument("credible_interval_ft: need at least 100 draws");
  const auto draws = sample_posterior(post, n_draws, rng);
  std::vector<double> ft;
  ft.reserve(n_draws);
  for (const auto& x : draws) ft.push_back(ft_above_threshold(PkParams::from_log({x.data(), 5}), regimen, cfg));
  std::sort(ft.begin(), ft.end());
  return {stats::quantile_sorted(ft, 0.5 * (1.0 - level)),
          stats::quantile_sorted(ft, 0.5 * (1.0 + level))};
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature for expectations under N(0, sigma^2)

struct QuadratureRule {
  std::vector<double> nodes;    // physicists' Hermite abscissae x_q
  std::vector<double> weights;  // w_q / sqrt(pi), summing to one
  std::size_t order = 0;

  /// Evaluation points sqrt(2) * sigma * x_q.
  std::vector<double> points(double sigma) const {
    std::vector<double> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = std::numbers::sqrt2 * sigma * nodes[i];
    return out;
  }
};

/// Golub-Welsch: nodes are the eigenvalues of the Hermite Jacobi matrix,
/// normalized weights the squared first eigenvector components. Node pairs
/// are symmetrized so odd moments vanish.
inline QuadratureRule gh_rule(std::size_t order) {
  if (order < 1) throw std::invalid_argument("gh_rule: order must be >= 1");
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i) / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  for (std::size_t i = 0; i < order / 2; ++i) {
    const std::size_t j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

struct QuadratureVariance {
  double variance = 0.0;
  double mean = 0.0;
  std::size_t n_failed = 0;  // nodes dropped, weights renormalized
};

/// Weighted variance of an endpoint over the rule's points at scale sigma.
/// Moments are taken about the first usable value, so a constant endpoint
/// gives exactly 0. `endpoint(delta)` returns nullopt when it cannot be
/// evaluated; such nodes are dropped. More than half failing throws.
template <class Endpoint>
QuadratureVariance quadrature_variance(const QuadratureRule& rule, double sigma,
                                       Endpoint&& endpoint) {
  const auto pts = rule.points(sigma);
  double wsum = 0.0, m1 = 0.0, m2 = 0.0;
  std::optional<double> shift;
  QuadratureVariance out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::optional<double> f = endpoint(pts[i]);
    if (!f) {
      ++out.n_failed;
      continue;
    }
    if (!shift) shift = *f;
    const double d = *f - *shift;
    wsum += rule.weights[i];
    m1 += rule.weights[i] * d;
    m2 += rule.weights[i] * d * d;
  }
  if (2 * out.n_failed > pts.size())
    throw std::runtime_error("quadrature_variance: more than half of the nodes failed");
  m1 /= wsum;
  m2 /= wsum;
  out.mean = *shift + m1;
  out.variance = std::max(0.0, m2 - m1 * m1);
  return out;
}

/// Sensitivity of the plug-in endpoint to a common recording error on all
/// of a patient's draw times: refit with times shifted by each node (clamped
/// at zero) and take the quadrature-weighted variance of ft.
inline QuadratureVariance quadrature_tre_variance(const SampleSet& data,
                                                  const DosingRegimen& regimen,
                                                  const PriorHyperparams& prior,
                                                  const PdConfig& cfg, double sigma_re,
                                                  const QuadratureRule& rule) {
  if (data.empty()) throw std::invalid_argument("quadrature_tre_variance: no samples");
  if (!(sigma_re >= 0.0)) throw std::invalid_argument("quadrature_tre_variance: sigma_re must be >= 0");
  return quadrature_variance(rule, sigma_re, [&](double delta) -> std::optional<double> {
    const auto post = find_mode(data.shifted(delta), regimen, prior);
    if (!post.converged) return std::nullopt;
    return ft_above_threshold(post.params(), regimen, cfg);
  });
}

}  // namespace tresim
