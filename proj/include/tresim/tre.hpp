#pragma once

// Time recording errors (TREs) and the two sensitivity studies built on
// them: stochastic Gaussian draw-time errors with cumulative draws, and
// fixed-magnitude errors in draw or infusion times at anchored draw times.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tresim/bayes.hpp"
#include "tresim/parallel.hpp"
#include "tresim/pd_metrics.hpp"
#include "tresim/pk_model.hpp"
#include "tresim/random.hpp"
#include "tresim/records.hpp"

namespace tresim {

enum class TreKind { random_gaussian, fixed };
enum class TreTarget { draw_time, infusion_time };

struct TreSpec {
  TreKind kind = TreKind::random_gaussian;
  double sigma_re = 0.0;  // h, random kind
  double delta_f = 0.0;   // h, signed, fixed kind
  TreTarget target = TreTarget::draw_time;

  static TreSpec random(double sigma_re) {
    if (!(sigma_re >= 0.0) || !std::isfinite(sigma_re))
      throw std::invalid_argument("TreSpec: sigma_re must be >= 0");
    return {TreKind::random_gaussian, sigma_re, 0.0, TreTarget::draw_time};
  }

  static TreSpec fixed(double delta_hours, TreTarget target = TreTarget::draw_time) {
    if (!std::isfinite(delta_hours)) throw std::invalid_argument("TreSpec: delta_f must be finite");
    return {TreKind::fixed, 0.0, delta_hours, target};
  }

  double scale() const { return kind == TreKind::random_gaussian ? sigma_re : delta_f; }
};

/// Recorded times t* = t + delta, clamped at zero. Random specs draw an
/// independent delta ~ N(0, sigma_re) per time; fixed specs add delta_f to
/// every time.
inline std::vector<double> apply_draw_time_error(std::span<const double> times, const TreSpec& spec,
                                                 Rng& rng) {
  if (spec.target != TreTarget::draw_time)
    throw std::invalid_argument("apply_draw_time_error: spec targets infusion times");
  std::vector<double> out(times.begin(), times.end());
  for (double& t : out) {
    const double delta = spec.kind == TreKind::fixed ? spec.delta_f : spec.sigma_re * standard_normal(rng);
    t = std::max(0.0, t + delta);
  }
  return out;
}

/// Within-patient bias: mean of (error-prone estimate - error-free estimate).
inline double bias(std::span<const double> error_prone, double truth) {
  if (error_prone.empty()) throw std::invalid_argument("bias: no error-prone estimates");
  double s = 0.0;
  for (double h : error_prone) s += h - truth;
  return s / static_cast<double>(error_prone.size());
}

// ---------------------------------------------------------------------------

/// An infusion schedule together with the draw times examined in isolation
/// by the fixed-error study.
struct Schedule {
  std::string name;
  DosingRegimen regimen;
  std::vector<double> anchors;
};

/// 3 g every 8 h, five doses, 30-minute infusions.
inline Schedule short_schedule() {
  return {"short", standard_regimen(0.5, 5, 8.0, 3.0), {24.0, 24.25, 24.5, 25.0, 25.5, 26.5, 31.75}};
}

/// 3 g every 8 h, five doses, 4-hour infusions.
inline Schedule long_schedule() {
  return {"long", standard_regimen(4.0, 5, 8.0, 3.0), {24.0, 26.0, 28.0, 28.5, 29.0, 30.0, 31.75}};
}

struct StudyContext {
  PriorHyperparams prior = PriorHyperparams::placeholder();
  PdConfig pd{};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct ExperimentResult {
  std::vector<BiasRecord> records;
  std::size_t n_excluded_fits = 0;     // replicate fits dropped for non-convergence
  std::size_t n_excluded_records = 0;  // records dropped because the error-free fit failed
  std::vector<std::string> warnings;

  void append(ExperimentResult&& other) {
    records.insert(records.end(), std::make_move_iterator(other.records.begin()),
                   std::make_move_iterator(other.records.end()));
    n_excluded_fits += other.n_excluded_fits;
    n_excluded_records += other.n_excluded_records;
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  }
};

/// A simulated patient's true parameters, drawn from the prior.
inline PkParams draw_patient(const PriorHyperparams& prior, Rng& rng) {
  const Eigen::LLT<Eigen::Matrix4d> llt(prior.sigma0);
  Eigen::Vector4d z;
  for (int i = 0; i < 4; ++i) z[i] = standard_normal(rng);
  const Eigen::Vector4d x = prior.mu0 + llt.matrixL() * z;
  const double log_sigma = prior.m0 + prior.s0 * standard_normal(rng);
  return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), std::exp(log_sigma)};
}

/// Plug-in ft at the posterior mode of (data, fit_regimen), evaluated over
/// `eval_regimen` (defaults to fit_regimen). Nullopt when the fit fails.
inline std::optional<double> estimate_ft(const SampleSet& data, const DosingRegimen& fit_regimen,
                                         const StudyContext& ctx,
                                         const DosingRegimen* eval_regimen = nullptr) {
  const auto post = find_mode(data, fit_regimen, ctx.prior);
  if (!post.converged) return std::nullopt;
  return ft_above_threshold(post.params(), eval_regimen ? *eval_regimen : fit_regimen, ctx.pd);
}

struct ReplicateDeviations {
  std::vector<double> deviations;  // h* - h per converged replicate
  std::size_t n_excluded = 0;
};

/// B error-prone refits of `data` with draw times perturbed per `spec`,
/// against the error-free estimate `truth`. Consumes `rng` sequentially.
inline ReplicateDeviations draw_time_replicates(const SampleSet& data, const DosingRegimen& regimen,
                                                const StudyContext& ctx, double truth,
                                                const TreSpec& spec, std::size_t replicates,
                                                Rng& rng) {
  ReplicateDeviations out;
  out.deviations.reserve(replicates);
  SampleSet recorded = data;
  for (std::size_t b = 0; b < replicates; ++b) {
    recorded.times = apply_draw_time_error(data.times, spec, rng);
    const auto h = estimate_ft(recorded, regimen, ctx);
    if (h) out.deviations.push_back(*h - truth);
    else ++out.n_excluded;
  }
  return out;
}

/// Error-free estimate plus B draw-time-error replicates folded into one
/// record; nullopt (and a counted exclusion) if the error-free fit fails.
inline std::optional<BiasRecord> tre_bias_record(BiasRecord keys, const SampleSet& data,
                                                 const DosingRegimen& regimen,
                                                 const StudyContext& ctx, const TreSpec& spec,
                                                 std::size_t replicates, Rng& rng,
                                                 ExperimentResult& tally) {
  const auto truth = estimate_ft(data, regimen, ctx);
  if (!truth) {
    ++tally.n_excluded_records;
    return std::nullopt;
  }
  auto reps = draw_time_replicates(data, regimen, ctx, *truth, spec, replicates, rng);
  tally.n_excluded_fits += reps.n_excluded;
  keys.n_excluded = reps.n_excluded;
  keys.sigma_or_delta = spec.scale();
  keys.n_draws_used = data.size();
  fill_bias(keys, *truth, reps.deviations);
  if (reps.deviations.empty()) {
    ++tally.n_excluded_records;
    return std::nullopt;
  }
  return keys;
}

namespace detail {

/// Gathers per-slot results in slot order.
inline ExperimentResult merge_slots(std::vector<ExperimentResult>& slots) {
  ExperimentResult out;
  for (auto& s : slots) out.append(std::move(s));
  return out;
}

inline constexpr std::uint64_t kPatientStream = 0x70617469656e74ULL;

}  // namespace detail

// ---------------------------------------------------------------------------
// Stochastic draw-time errors

struct StochasticOptions {
  std::size_t n_patients = 200;
  std::size_t replicates = 100;  // B
  std::vector<double> sigma_re = {0.25, 0.5, 1.0, 1.5};
};

/// One uniform draw per dose window; for every cumulative draw count j and
/// every sigma_RE, the error-free estimate from the first j draws against B
/// replicates with Gaussian recording errors on those draws.
///
/// Patients, draw times and measurement noise are shared by all schedules,
/// and the recording-error stream of a (patient, j) cell is shared by all
/// sigma_RE values (deltas are sigma_RE times common standard normals).
inline ExperimentResult run_objective1_stochastic(const std::vector<Schedule>& schedules,
                                                  const StudyContext& ctx,
                                                  const StochasticOptions& opt,
                                                  std::string_view experiment = "objective1-stochastic") {
  if (opt.n_patients < 1 || opt.replicates < 1)
    throw std::invalid_argument("objective1-stochastic: need at least one patient and one replicate");
  const std::uint64_t exp_key = name_key(experiment);
  ExperimentResult all;
  for (const auto& sched : schedules) {
    const auto windows = sched.regimen.windows();
    std::vector<ExperimentResult> slots(opt.n_patients);
    parallel_for(opt.n_patients, ctx.threads, [&](std::size_t i) {
      auto& out = slots[i];
      Rng prng = make_stream(ctx.seed, {exp_key, detail::kPatientStream, i});
      const PkParams truth = draw_patient(ctx.prior, prng);
      SampleSet full;
      for (const auto& w : windows) {
        const double t = uniform(prng, w.start, w.end);
        full.add(t, concentration(t, truth, sched.regimen) + truth.sigma * standard_normal(prng));
      }
      for (std::size_t j = 1; j <= full.size(); ++j) {
        SampleSet data;
        data.times.assign(full.times.begin(), full.times.begin() + static_cast<std::ptrdiff_t>(j));
        data.concentrations.assign(full.concentrations.begin(),
                                   full.concentrations.begin() + static_cast<std::ptrdiff_t>(j));
        for (double sigma : opt.sigma_re) {
          Rng trng = make_stream(ctx.seed, {exp_key, i, j});
          BiasRecord keys;
          keys.experiment = std::string(experiment);
          keys.schedule = sched.name;
          keys.arm = "draw-time";
          keys.patient_id = i + 1;
          keys.during_infusion = sched.regimen.infusing(data.times.back());
          auto rec = tre_bias_record(std::move(keys), data, sched.regimen, ctx,
                                     TreSpec::random(sigma), opt.replicates, trng, out);
          if (rec) out.records.push_back(std::move(*rec));
        }
      }
    });
    all.append(detail::merge_slots(slots));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Fixed-magnitude errors at anchored times

struct FixedOptions {
  std::size_t n_patients = 200;
  std::vector<double> delta_f = {-1.5, -1.0, -0.5, -0.25, -1.0 / 12.0,
                                 1.0 / 12.0, 0.25, 0.5, 1.0, 1.5};  // h
  std::size_t shifted_event = 3;  // 0-based: the fourth infusion
};

/// Each anchored time alone, with a noise-free concentration. For each
/// delta_f: (a) draw-time error refits {c, t + delta} under the true
/// regimen; (b) infusion-time error refits {c, t} under the regimen whose
/// fourth infusion is moved by delta and evaluates ft over that regimen.
inline ExperimentResult run_objective1_fixed(const std::vector<Schedule>& schedules,
                                             const StudyContext& ctx, const FixedOptions& opt,
                                             std::string_view experiment = "objective1-fixed") {
  if (opt.n_patients < 1) throw std::invalid_argument("objective1-fixed: need at least one patient");
  const std::uint64_t exp_key = name_key(experiment);
  ExperimentResult all;
  for (const auto& sched : schedules) {
    std::vector<DosingRegimen> shifted;
    for (double d : opt.delta_f) shifted.push_back(shift_infusion(sched.regimen, opt.shifted_event, d));

    std::vector<ExperimentResult> slots(opt.n_patients);
    parallel_for(opt.n_patients, ctx.threads, [&](std::size_t i) {
      auto& out = slots[i];
      Rng prng = make_stream(ctx.seed, {exp_key, detail::kPatientStream, i});
      const PkParams truth = draw_patient(ctx.prior, prng);
      for (double anchor : sched.anchors) {
        SampleSet data;
        data.add(anchor, concentration(anchor, truth, sched.regimen));
        const auto h0 = estimate_ft(data, sched.regimen, ctx);
        if (!h0) {
          out.n_excluded_records += 2 * opt.delta_f.size();
          continue;
        }
        BiasRecord keys;
        keys.experiment = std::string(experiment);
        keys.schedule = sched.name;
        keys.patient_id = i + 1;
        keys.n_draws_used = 1;
        keys.anchor_time = anchor;
        keys.during_infusion = sched.regimen.infusing(anchor);

        Rng unused(0);  // fixed specs draw nothing
        for (std::size_t k = 0; k < opt.delta_f.size(); ++k) {
          const double delta = opt.delta_f[k];
          const auto spec = TreSpec::fixed(delta);

          SampleSet recorded = data;
          recorded.times = apply_draw_time_error(data.times, spec, unused);
          const auto h_draw = estimate_ft(recorded, sched.regimen, ctx);
          const auto h_inf = estimate_ft(data, shifted[k], ctx);

          for (auto [arm, h] : {std::pair{"draw-time", h_draw}, std::pair{"infusion-time", h_inf}}) {
            BiasRecord r = keys;
            r.arm = arm;
            r.sigma_or_delta = delta;
            if (!h) {
              ++out.n_excluded_fits;
              ++out.n_excluded_records;
              continue;
            }
            fill_bias(r, *h0, {*h - *h0});
            out.records.push_back(std::move(r));
          }
        }
      }
    });
    all.append(detail::merge_slots(slots));
  }
  return all;
}

}  // namespace tresim
