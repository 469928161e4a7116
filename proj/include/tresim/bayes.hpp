#pragma once

// Individual-level approximate Bayesian inference for the two-compartment
// model: log-posterior, posterior mode, Laplace covariance, posterior draws.
//
// The free parameter is x = [log cl, log v1, log q, log v2, log sigma].
// Prior: x[0..3] ~ N4(mu0, sigma0), x[4] ~ N(m0, s0^2). Likelihood: each
// observed concentration is Normal(eta(t), sigma).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include "tresim/optimizer.hpp"
#include "tresim/pk_model.hpp"
#include "tresim/random.hpp"

namespace tresim {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

struct PriorHyperparams {
  Eigen::Vector4d mu0 = Eigen::Vector4d::Zero();
  Eigen::Matrix4d sigma0 = Eigen::Matrix4d::Identity();
  double m0 = 0.0;
  double s0 = 1.0;

  void validate() const {
    if (!mu0.allFinite() || !sigma0.allFinite() || !std::isfinite(m0))
      throw std::invalid_argument("prior: non-finite hyperparameter");
    if ((sigma0 - sigma0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("prior: sigma0 is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(sigma0, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw std::invalid_argument("prior: sigma0 is not positive definite");
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw std::invalid_argument("prior: s0 must be > 0");
  }

  Vec5 mean() const {
    Vec5 m;
    m << mu0, m0;
    return m;
  }

  Mat5 covariance() const {
    Mat5 c = Mat5::Zero();
    c.topLeftCorner<4, 4>() = sigma0;
    c(4, 4) = s0 * s0;
    return c;
  }

  /// Synthetic placeholder values of plausible magnitude for piperacillin
  /// in critically ill adults (reduced, highly variable clearance). They are
  /// NOT fitted to any data set; real studies should load their own
  /// hyperparameters from configuration.
  static PriorHyperparams placeholder() {
    PriorHyperparams p;
    // cl 8 L/h, v1 12 L, q 14 L/h, v2 16 L, sigma 5 ug/mL
    p.mu0 << std::log(8.0), std::log(12.0), std::log(14.0), std::log(16.0);
    const Eigen::Vector4d sd(0.5, 0.4, 0.5, 0.5);
    Eigen::Matrix4d corr = Eigen::Matrix4d::Identity();
    corr(0, 1) = corr(1, 0) = 0.2;
    corr(2, 3) = corr(3, 2) = 0.2;
    p.sigma0 = sd.asDiagonal() * corr * sd.asDiagonal();
    p.m0 = std::log(5.0);
    p.s0 = 0.3;
    return p;
  }
};

/// Blood draws for one patient. Times may be unsorted or repeated.
struct SampleSet {
  std::vector<double> times;
  std::vector<double> concentrations;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void add(double t, double c) {
    times.push_back(t);
    concentrations.push_back(c);
  }

  void validate() const {
    if (times.size() != concentrations.size())
      throw std::invalid_argument("SampleSet: times and concentrations differ in length");
    for (double t : times)
      if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("SampleSet: bad time");
    for (double c : concentrations)
      if (!std::isfinite(c)) throw std::invalid_argument("SampleSet: bad concentration");
  }

  /// Same pairs ordered by (time, concentration).
  SampleSet canonical() const {
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return times[a] != times[b] ? times[a] < times[b] : concentrations[a] < concentrations[b];
    });
    SampleSet out;
    out.times.reserve(size());
    out.concentrations.reserve(size());
    for (auto i : idx) out.add(times[i], concentrations[i]);
    return out;
  }

  /// Copy with every time moved by delta and clamped at zero.
  SampleSet shifted(double delta) const {
    SampleSet out = *this;
    for (double& t : out.times) t = std::max(0.0, t + delta);
    return out;
  }
};

struct LaplacePosterior {
  Vec5 mode = Vec5::Zero();
  Mat5 covariance = Mat5::Identity();
  bool converged = false;
  int n_restarts_used = 0;
  double ridge = 0.0;  // diagonal loading added to the negative Hessian

  PkParams params() const { return PkParams::from_log({mode.data(), 5}); }
};

/// Log-posterior density of the log-scale parameters with cached prior
/// factorization. Holds references: `data` and `regimen` must outlive it.
class LogPosterior {
 public:
  LogPosterior(const SampleSet& data, const DosingRegimen& regimen, const PriorHyperparams& prior)
      : data_(data), regimen_(regimen), prior_(prior) {
    const Eigen::LLT<Eigen::Matrix4d> llt(prior.sigma0);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("prior: sigma0 is not positive definite");
    precision_ = llt.solve(Eigen::Matrix4d::Identity());
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    constexpr double log_2pi = 1.8378770664093454836;
    log_norm_ = -0.5 * (4.0 * log_2pi + log_det) - 0.5 * log_2pi - std::log(prior.s0);
  }

  double operator()(const Vec5& x) const { return evaluate(x, nullptr); }

  /// Value and gradient (with respect to x) in one pass.
  double operator()(const Vec5& x, Vec5& grad) const { return evaluate(x, &grad); }

 private:
  using Deriv = Eigen::Vector4d;
  using AD = Eigen::AutoDiffScalar<Deriv>;

  double evaluate(const Vec5& x, Vec5* grad) const {
    constexpr double log_2pi = 1.8378770664093454836;
    if (!x.allFinite()) return -std::numeric_limits<double>::infinity();

    const Eigen::Vector4d dev = x.head<4>() - prior_.mu0;
    const Eigen::Vector4d pdev = precision_ * dev;
    const double zs = (x[4] - prior_.m0) / prior_.s0;
    double lp = log_norm_ - 0.5 * dev.dot(pdev) - 0.5 * zs * zs;

    const double inv_var = std::exp(-2.0 * x[4]);
    const auto m = static_cast<double>(data_.size());
    double ss = 0.0;
    Eigen::Vector4d dss = Eigen::Vector4d::Zero();  // d(sum r^2)/d theta, up to factor -2

    if (grad) {
      const AD cl(std::exp(x[0]), Deriv::Unit(0) * std::exp(x[0]));
      const AD v1(std::exp(x[1]), Deriv::Unit(1) * std::exp(x[1]));
      const AD q(std::exp(x[2]), Deriv::Unit(2) * std::exp(x[2]));
      const AD v2(std::exp(x[3]), Deriv::Unit(3) * std::exp(x[3]));
      const auto disp = disposition(cl, v1, q, v2);
      for (std::size_t j = 0; j < data_.size(); ++j) {
        const AD eta = concentration(data_.times[j], disp, regimen_);
        if (!std::isfinite(eta.value()) || !eta.derivatives().allFinite())
          return -std::numeric_limits<double>::infinity();
        const double r = data_.concentrations[j] - eta.value();
        ss += r * r;
        dss += r * eta.derivatives();
      }
    } else {
      const auto p = PkParams::from_log({x.data(), 5});
      const auto disp = disposition(p.cl, p.v1, p.q, p.v2);
      for (std::size_t j = 0; j < data_.size(); ++j) {
        const double eta = concentration(data_.times[j], disp, regimen_);
        if (!std::isfinite(eta)) return -std::numeric_limits<double>::infinity();
        const double r = data_.concentrations[j] - eta;
        ss += r * r;
      }
    }

    lp += -0.5 * ss * inv_var - m * x[4] - 0.5 * m * log_2pi;
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();

    if (grad) {
      grad->head<4>() = -pdev + inv_var * dss;
      (*grad)[4] = -zs / prior_.s0 + ss * inv_var - m;
    }
    return lp;
  }

  const SampleSet& data_;
  const DosingRegimen& regimen_;
  const PriorHyperparams& prior_;
  Eigen::Matrix4d precision_;
  double log_norm_ = 0.0;
};

inline double log_posterior(const Vec5& x, const SampleSet& data, const DosingRegimen& regimen,
                            const PriorHyperparams& prior) {
  return LogPosterior(data, regimen, prior)(x);
}

struct FitOptions {
  BfgsOptions bfgs{};
  int max_restarts = 5;
  bool laplace = true;  // false: mode only, covariance left at identity
};

namespace detail {

inline std::uint64_t restart_seed(int attempt) {
  return derive_seed(name_key("tresim.fit.restart"), {static_cast<std::uint64_t>(attempt)});
}

/// Negative Hessian of the log-posterior by central differences of the
/// analytic gradient, step 1e-4 * max(1, |x_i|), symmetrized.
inline Mat5 negative_hessian(const LogPosterior& lp, const Vec5& x) {
  Mat5 h;
  Vec5 gp, gm;
  for (int i = 0; i < 5; ++i) {
    const double step = 1e-4 * std::max(1.0, std::abs(x[i]));
    Vec5 xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    lp(xp, gp);
    lp(xm, gm);
    h.col(i) = -(gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace detail

/// Laplace covariance at x: inverse of the negative Hessian, with the
/// smallest ridge 1e-10 * 10^k that makes it positive definite.
inline void laplace_covariance(const LogPosterior& lp, LaplacePosterior& post) {
  const Mat5 neg_h = detail::negative_hessian(lp, post.mode);
  double ridge = 0.0;
  for (int k = 0; k < 40; ++k) {
    Eigen::LLT<Mat5> llt(neg_h + ridge * Mat5::Identity());
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      const Mat5 cov = llt.solve(Mat5::Identity());
      post.covariance = 0.5 * (cov + cov.transpose());
      post.ridge = ridge;
      return;
    }
    ridge = ridge == 0.0 ? 1e-10 : ridge * 10.0;
  }
  post.converged = false;
}

/// Posterior mode by BFGS from the prior mean, restarting from prior draws
/// when a run fails to converge; optionally followed by the Laplace
/// covariance. On total failure the best point found is returned with
/// converged = false.
inline LaplacePosterior fit(const SampleSet& data, const DosingRegimen& regimen,
                            const PriorHyperparams& prior, const FitOptions& opt = {}) {
  const SampleSet sorted = data.canonical();
  const LogPosterior lp(sorted, regimen, prior);
  const Mat5 prior_cov = prior.covariance();
  const Eigen::MatrixXd h0 = prior_cov;

  auto objective = [&lp](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Vec5 xv = x, gv;
    const double v = lp(xv, gv);
    g = -gv;
    return -v;
  };

  LaplacePosterior post;
  BfgsResult best;
  Eigen::LLT<Mat5> prior_chol(prior_cov);
  for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
    Vec5 start = prior.mean();
    if (attempt > 0) {
      Rng rng(detail::restart_seed(attempt));
      Vec5 z;
      for (int i = 0; i < 5; ++i) z[i] = standard_normal(rng);
      start += prior_chol.matrixL() * z;
    }
    BfgsResult r = bfgs_minimize(objective, Eigen::VectorXd(start), h0, opt.bfgs);
    if (attempt == 0 || r.value < best.value) best = r;
    post.n_restarts_used = attempt;
    if (r.converged) {
      best = r;
      break;
    }
  }

  post.mode = best.x;
  post.converged = best.converged;
  if (opt.laplace && post.mode.allFinite()) laplace_covariance(lp, post);
  return post;
}

/// Mode-only fit; the covariance is not computed.
inline LaplacePosterior find_mode(const SampleSet& data, const DosingRegimen& regimen,
                                  const PriorHyperparams& prior) {
  FitOptions opt;
  opt.laplace = false;
  return fit(data, regimen, prior, opt);
}

/// n draws from N(mode, covariance) on the log scale.
inline std::vector<Vec5> sample_posterior(const LaplacePosterior& post, std::size_t n, Rng& rng) {
  if (!post.converged) throw std::invalid_argument("sample_posterior: posterior did not converge");
  if (n < 1) throw std::invalid_argument("sample_posterior: n must be >= 1");
  // LDLT tolerates a singular (collapsed) covariance.
  const Eigen::LDLT<Mat5> ldlt(post.covariance);
  const Vec5 d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Mat5 factor = ldlt.transpositionsP().transpose() * Mat5(ldlt.matrixL()) * d.asDiagonal();
  std::vector<Vec5> out(n);
  for (auto& draw : out) {
    Vec5 z;
    for (int i = 0; i < 5; ++i) z[i] = standard_normal(rng);
    draw = post.mode + factor * z;
  }
  return out;
}

}  // namespace tresim
