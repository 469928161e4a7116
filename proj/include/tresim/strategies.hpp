#pragma once

// Sampling-design policies that try to reduce the effect of draw-time
// recording errors: delaying in-infusion draws past the infusion end,
// searching for the most error-robust next draw time, and allocating a
// limited number of second draws within a cohort.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tresim/bayes.hpp"
#include "tresim/parallel.hpp"
#include "tresim/pd_metrics.hpp"
#include "tresim/records.hpp"
#include "tresim/tre.hpp"

namespace tresim {

inline std::string delay_arm_name(double delay_hours) {
  return "delay+" + std::to_string(static_cast<long>(std::lround(delay_hours * 60.0))) + "min";
}

// ---------------------------------------------------------------------------
// Delay to the end of infusion

struct DelayOptions {
  std::size_t n_patients = 200;
  std::size_t replicates = 100;
  std::vector<double> sigma_re = {0.25, 0.5, 1.0, 1.5};
  std::vector<double> delays = {0.0, 0.25, 0.5, 1.0};  // h after infusion end
};

/// One in-infusion draw and its delayed alternatives for a single window.
struct DelayDraw {
  std::size_t window = 0;  // 1-based
  double time = 0.0;
  double concentration = 0.0;
  std::vector<double> delayed_times;           // parallel to DelayOptions::delays
  std::vector<double> delayed_concentrations;  // measured at the delayed times
};

/// Records for one patient and one window: the original draw and every
/// delayed draw, each evaluated alone, for every sigma_RE. All arms and all
/// sigma_RE values reuse the standard normals of `tre_key`'s stream.
inline void delay_window_records(const Schedule& sched, const StudyContext& ctx,
                                 const DelayOptions& opt, std::string_view experiment,
                                 std::size_t patient_id, const DelayDraw& draw,
                                 std::uint64_t tre_key, ExperimentResult& out) {
  for (double sigma : opt.sigma_re) {
    for (std::size_t a = 0; a <= opt.delays.size(); ++a) {
      SampleSet data;
      BiasRecord keys;
      keys.experiment = std::string(experiment);
      keys.schedule = sched.name;
      keys.patient_id = patient_id;
      keys.draw_index = draw.window;
      if (a == 0) {
        keys.arm = "original";
        data.add(draw.time, draw.concentration);
      } else {
        keys.arm = delay_arm_name(opt.delays[a - 1]);
        data.add(draw.delayed_times[a - 1], draw.delayed_concentrations[a - 1]);
      }
      keys.during_infusion = sched.regimen.infusing(data.times[0]);
      Rng trng = make_stream(ctx.seed, {tre_key});
      auto rec = tre_bias_record(std::move(keys), data, sched.regimen, ctx, TreSpec::random(sigma),
                                 opt.replicates, trng, out);
      if (rec) out.records.push_back(std::move(*rec));
    }
  }
}

/// Draws sampled uniformly within the active infusion of each window,
/// compared with the same draw moved to infusion end + d. A delayed draw
/// gets a fresh measurement unless it coincides with the original time.
inline ExperimentResult strategy_delay(const std::vector<Schedule>& schedules,
                                       const StudyContext& ctx, const DelayOptions& opt,
                                       std::string_view experiment = "delay") {
  if (opt.n_patients < 1 || opt.replicates < 1)
    throw std::invalid_argument("delay: need at least one patient and one replicate");
  for (double d : opt.delays)
    if (!(d >= 0.0)) throw std::invalid_argument("delay: delays must be >= 0");
  const std::uint64_t exp_key = name_key(experiment);
  ExperimentResult all;
  for (const auto& sched : schedules) {
    const auto windows = sched.regimen.windows();
    std::vector<ExperimentResult> slots(opt.n_patients);
    parallel_for(opt.n_patients, ctx.threads, [&](std::size_t i) {
      Rng prng = make_stream(ctx.seed, {exp_key, detail::kPatientStream, i});
      const PkParams truth = draw_patient(ctx.prior, prng);
      for (const auto& w : windows) {
        const double u = uniform(prng, 0.0, 1.0);
        const double z = standard_normal(prng);
        DelayDraw draw;
        draw.window = w.index;
        draw.time = w.start + u * (w.infusion_end - w.start);
        draw.concentration = concentration(draw.time, truth, sched.regimen) + truth.sigma * z;
        for (double d : opt.delays) {
          const double zd = standard_normal(prng);
          const double t = w.infusion_end + d;
          draw.delayed_times.push_back(t);
          draw.delayed_concentrations.push_back(
              t == draw.time ? draw.concentration
                             : concentration(t, truth, sched.regimen) + truth.sigma * zd);
        }
        delay_window_records(sched, ctx, opt, experiment, i + 1, draw,
                             derive_seed(exp_key, {i, w.index}), slots[i]);
      }
    });
    all.append(detail::merge_slots(slots));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Best sample time

struct CandidateGrid {
  std::vector<double> times;

  /// lo, lo + step, ..., hi (inclusive).
  static CandidateGrid span(double lo, double hi, double step = 0.5) {
    if (!(hi >= lo) || !(step > 0.0)) throw std::invalid_argument("CandidateGrid: bad span");
    CandidateGrid g;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    for (std::size_t k = 0; k <= n; ++k) g.times.push_back(lo + static_cast<double>(k) * step);
    return g;
  }
};

/// Result of refitting with one (possibly error-shifted) candidate draw.
struct CandidateEvaluation {
  double ft = 0.0;
  double predicted = 0.0;  // model concentration at the candidate time
};

struct CandidateScore {
  double time = 0.0;
  double score_abs = 0.0;     // mean |h* - h|
  double score_signed = 0.0;  // mean (h* - h)
  double conc_score = 0.0;    // mean |pred* - pred|
  std::size_t n_used = 0;
};

enum class SelectionPath { unique, concentration_tiebreak, random_tiebreak, fallback_random };

inline const char* to_string(SelectionPath p) {
  switch (p) {
    case SelectionPath::unique: return "unique";
    case SelectionPath::concentration_tiebreak: return "concentration";
    case SelectionPath::random_tiebreak: return "random";
    case SelectionPath::fallback_random: return "fallback";
  }
  return "?";
}

struct CandidateSelection {
  double time = 0.0;
  SelectionPath path = SelectionPath::unique;
  std::vector<CandidateScore> scores;  // candidates that could be scored, grid order
};

/// Scores each candidate by refitting at candidate + delta for each delta in
/// `deltas` (reference: delta = 0) and picks the lowest mean absolute ft
/// deviation; ties go to the lowest mean absolute deviation in predicted
/// concentration, then to a random pick among the tied. `evaluate(time,
/// delta)` returns nullopt when the fit fails. If no candidate can be
/// scored the pick is uniform over the grid.
template <class Evaluate>
CandidateSelection select_best_time(const CandidateGrid& grid, std::span<const double> deltas,
                                    Evaluate&& evaluate, Rng& rng) {
  if (grid.times.empty()) throw std::invalid_argument("select_best_time: empty candidate grid");
  CandidateSelection sel;
  for (double t : grid.times) {
    const std::optional<CandidateEvaluation> ref = evaluate(t, 0.0);
    if (!ref) continue;
    CandidateScore s;
    s.time = t;
    for (double d : deltas) {
      const std::optional<CandidateEvaluation> e = evaluate(t, d);
      if (!e) continue;
      s.score_abs += std::abs(e->ft - ref->ft);
      s.score_signed += e->ft - ref->ft;
      s.conc_score += std::abs(e->predicted - ref->predicted);
      ++s.n_used;
    }
    if (s.n_used == 0) continue;
    const auto n = static_cast<double>(s.n_used);
    s.score_abs /= n;
    s.score_signed /= n;
    s.conc_score /= n;
    sel.scores.push_back(s);
  }

  if (sel.scores.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, grid.times.size() - 1);
    sel.time = grid.times[pick(rng)];
    sel.path = SelectionPath::fallback_random;
    return sel;
  }

  constexpr double tie_tol = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : sel.scores) best = std::min(best, s.score_abs);
  std::vector<const CandidateScore*> tied;
  for (const auto& s : sel.scores)
    if (s.score_abs <= best + tie_tol) tied.push_back(&s);
  if (tied.size() == 1) {
    sel.time = tied.front()->time;
    sel.path = SelectionPath::unique;
    return sel;
  }

  double best_conc = std::numeric_limits<double>::infinity();
  for (const auto* s : tied) best_conc = std::min(best_conc, s->conc_score);
  std::vector<const CandidateScore*> tied2;
  for (const auto* s : tied)
    if (s->conc_score <= best_conc + tie_tol * std::max(1.0, best_conc)) tied2.push_back(s);
  if (tied2.size() == 1) {
    sel.time = tied2.front()->time;
    sel.path = SelectionPath::concentration_tiebreak;
    return sel;
  }
  std::uniform_int_distribution<std::size_t> pick(0, tied2.size() - 1);
  sel.time = tied2[pick(rng)]->time;
  sel.path = SelectionPath::random_tiebreak;
  return sel;
}

struct BestTimeOptions {
  std::size_t n_patients = 100;
  std::vector<double> sigma_re = {0.25, 0.5, 1.0, 1.5};
  std::size_t search_replicates = 5;   // B during the search
  std::size_t final_replicates = 100;  // B for the final bias
  double first_lo = 8.0, first_hi = 24.0;
  std::vector<CandidateGrid> grids = {CandidateGrid::span(24.0, 32.0),
                                      CandidateGrid::span(32.5, 40.0)};
};

struct SelectionLogEntry {
  std::string schedule;
  std::size_t patient_id = 0;
  double sigma_re = 0.0;
  std::size_t draw_number = 0;  // 2, 3, ...
  CandidateScore score;
  bool selected = false;
  SelectionPath path = SelectionPath::unique;
};

struct BestTimeResult {
  ExperimentResult result;
  std::vector<SelectionLogEntry> selections;
};

inline void write_selection_log_csv(std::ostream& os, const std::vector<SelectionLogEntry>& log) {
  using detail::format_double;
  os << "schedule,patient,sigma_re_h,draw_number,candidate_h,score_abs,score_signed,conc_score,"
        "n_used,selected,path\n";
  for (const auto& e : log) {
    os << e.schedule << ',' << e.patient_id << ',' << format_double(e.sigma_re) << ','
       << e.draw_number << ',' << format_double(e.score.time) << ','
       << format_double(e.score.score_abs) << ',' << format_double(e.score.score_signed) << ','
       << format_double(e.score.conc_score) << ',' << e.score.n_used << ','
       << (e.selected ? 1 : 0) << ',' << to_string(e.path) << '\n';
  }
}

/// Three error-prone draws per patient. The first is uniform in
/// [first_lo, first_hi]; later draws are either chosen by select_best_time
/// on each grid (search concentrations are noise-free predictions from the
/// current posterior mode, search refits use the recorded earlier times)
/// or drawn uniformly over the same grid span. Both arms are then scored by
/// the draw-time-error bias of a fit on all draws.
inline BestTimeResult strategy_best_time(const std::vector<Schedule>& schedules,
                                         const StudyContext& ctx, const BestTimeOptions& opt,
                                         std::string_view experiment = "best-time") {
  if (opt.n_patients < 1 || opt.search_replicates < 1 || opt.final_replicates < 1)
    throw std::invalid_argument("best-time: need patients and replicates");
  if (opt.grids.empty()) throw std::invalid_argument("best-time: no candidate grids");
  const std::uint64_t exp_key = name_key(experiment);
  BestTimeResult all;
  for (const auto& sched : schedules) {
    std::vector<ExperimentResult> slots(opt.n_patients);
    std::vector<std::vector<SelectionLogEntry>> logs(opt.n_patients);
    parallel_for(opt.n_patients, ctx.threads, [&](std::size_t i) {
      auto& out = slots[i];
      Rng prng = make_stream(ctx.seed, {exp_key, detail::kPatientStream, i});
      const PkParams truth = draw_patient(ctx.prior, prng);
      const std::size_t n_draws = opt.grids.size() + 1;
      const double t1 = uniform(prng, opt.first_lo, opt.first_hi);
      std::vector<double> noise(n_draws), tre(n_draws), baseline_times;
      for (auto& z : noise) z = standard_normal(prng);
      for (auto& w : tre) w = standard_normal(prng);
      for (const auto& g : opt.grids) baseline_times.push_back(uniform(prng, g.times.front(), g.times.back()));
      std::vector<std::vector<double>> search_z(opt.grids.size(), std::vector<double>(opt.search_replicates));
      for (auto& row : search_z)
        for (auto& z : row) z = standard_normal(prng);

      auto measure = [&](double t, std::size_t k) {
        return concentration(t, truth, sched.regimen) + truth.sigma * noise[k];
      };

      for (std::size_t si = 0; si < opt.sigma_re.size(); ++si) {
        const double sigma = opt.sigma_re[si];
        Rng tie_rng = make_stream(ctx.seed, {exp_key, i, si, name_key("tie")});

        // analyst's view: measured concentrations at recorded times
        SampleSet recorded;
        recorded.add(std::max(0.0, t1 + sigma * tre[0]), measure(t1, 0));
        std::vector<double> chosen = {t1};

        for (std::size_t g = 0; g < opt.grids.size(); ++g) {
          const auto current = find_mode(recorded, sched.regimen, ctx.prior);
          const PkParams est = current.params();
          std::vector<double> deltas(opt.search_replicates);
          for (std::size_t b = 0; b < deltas.size(); ++b) deltas[b] = sigma * search_z[g][b];

          auto evaluate = [&](double cand, double delta) -> std::optional<CandidateEvaluation> {
            SampleSet trial = recorded;
            trial.add(std::max(0.0, cand + delta), concentration(cand, est, sched.regimen));
            const auto post = find_mode(trial, sched.regimen, ctx.prior);
            if (!post.converged) return std::nullopt;
            const PkParams p = post.params();
            return CandidateEvaluation{ft_above_threshold(p, sched.regimen, ctx.pd),
                                       concentration(cand, p, sched.regimen)};
          };
          const auto sel = select_best_time(opt.grids[g], deltas, evaluate, tie_rng);
          if (sel.path == SelectionPath::fallback_random)
            out.warnings.push_back(sched.name + " patient " + std::to_string(i + 1) +
                                   ": no candidate could be scored; random fallback");
          for (const auto& s : sel.scores)
            logs[i].push_back({sched.name, i + 1, sigma, g + 2, s, s.time == sel.time, sel.path});

          chosen.push_back(sel.time);
          recorded.add(std::max(0.0, sel.time + sigma * tre[g + 1]), measure(sel.time, g + 1));
        }

        std::vector<double> random_times = {t1};
        random_times.insert(random_times.end(), baseline_times.begin(), baseline_times.end());

        for (auto [arm, times] : {std::pair{"best-time", &chosen}, std::pair{"random", &random_times}}) {
          SampleSet data;
          for (std::size_t k = 0; k < times->size(); ++k) data.add((*times)[k], measure((*times)[k], k));
          BiasRecord keys;
          keys.experiment = std::string(experiment);
          keys.schedule = sched.name;
          keys.arm = arm;
          keys.patient_id = i + 1;
          keys.during_infusion = sched.regimen.infusing(data.times.back());
          Rng frng = make_stream(ctx.seed, {exp_key, i, name_key("final")});
          auto rec = tre_bias_record(std::move(keys), data, sched.regimen, ctx,
                                     TreSpec::random(sigma), opt.final_replicates, frng, out);
          if (rec) out.records.push_back(std::move(*rec));
        }
      }
    });
    all.result.append(detail::merge_slots(slots));
    for (auto& l : logs) all.selections.insert(all.selections.end(), l.begin(), l.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// Informed allocation

enum class AllocationCriterion { random, ci_width, quadrature_variance };

inline const char* to_string(AllocationCriterion c) {
  switch (c) {
    case AllocationCriterion::random: return "random";
    case AllocationCriterion::ci_width: return "ci-width";
    case AllocationCriterion::quadrature_variance: return "quadrature-variance";
  }
  return "?";
}

/// Indices (ascending) of the `n` highest scores. When the cut falls inside
/// a group of equal scores, the needed members of that group are drawn at
/// random.
inline std::vector<std::size_t> allocate_top(std::span<const double> scores, std::size_t n, Rng& rng) {
  if (n > scores.size()) throw std::invalid_argument("allocate_top: more draws than patients");
  std::vector<std::size_t> out;
  if (n == 0) return out;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cut = sorted[n - 1];
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > cut) out.push_back(i);
    else if (scores[i] == cut) eligible.push_back(i);
  }
  // partial Fisher-Yates over the tie group
  const std::size_t need = n - out.size();
  for (std::size_t k = 0; k < need; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, eligible.size() - 1);
    std::swap(eligible[k], eligible[pick(rng)]);
    out.push_back(eligible[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct AllocationOptions {
  std::size_t n_cohorts = 20;
  std::size_t cohort_size = 50;
  std::size_t n_second_draws = 25;
  std::vector<AllocationCriterion> criteria = {AllocationCriterion::random,
                                               AllocationCriterion::ci_width,
                                               AllocationCriterion::quadrature_variance};
  std::vector<double> sigma_re = {0.25, 0.5};
  std::size_t final_replicates = 100;
  double ci_level = 0.95;
  std::size_t ci_draws = 500;
  std::size_t quadrature_order = 12;
  double first_lo = 8.0, first_hi = 24.0;
  double second_lo = 24.0, second_hi = 40.0;
  double max_excluded_fraction = 0.2;
};

struct CohortRecord {
  std::string schedule;
  std::string criterion;
  std::size_t cohort = 0;
  double sigma_re = 0.0;
  double mean_abs_bias = 0.0;
  std::size_t n_patients = 0;   // entering the mean
  std::size_t n_excluded = 0;
  std::size_t n_two_draws = 0;
  bool flagged = false;         // excluded fraction above the limit
};

struct AllocationResult {
  ExperimentResult result;  // per-patient records; arm = criterion
  std::vector<CohortRecord> cohorts;
};

inline void write_cohorts_csv(std::ostream& os, const std::vector<CohortRecord>& cohorts) {
  using detail::format_double;
  os << "schedule,criterion,cohort,sigma_re_h,mean_abs_bias,n_patients,n_excluded,n_two_draws,flagged\n";
  for (const auto& c : cohorts) {
    os << c.schedule << ',' << c.criterion << ',' << c.cohort << ',' << format_double(c.sigma_re)
       << ',' << format_double(c.mean_abs_bias) << ',' << c.n_patients << ',' << c.n_excluded
       << ',' << c.n_two_draws << ',' << (c.flagged ? 1 : 0) << '\n';
  }
}

/// Every patient has one draw uniform in [first_lo, first_hi] whose
/// measurement follows the true time while the initial fit sees the
/// recorded time. Each criterion ranks patients from that fit and hands
/// out `n_second_draws` second draws uniform in [second_lo, second_hi].
/// Final per-patient bias compares a fit on all of a patient's draws with
/// true times against B replicates with recording errors on every time.
///
/// A patient's draws, measurements and error replicates are shared by all
/// criteria and all sigma_RE values, so criteria differ only in who gets
/// the second draw.
inline AllocationResult strategy_informed_allocation(const std::vector<Schedule>& schedules,
                                                     const StudyContext& ctx,
                                                     const AllocationOptions& opt,
                                                     std::string_view experiment = "informed-allocation") {
  if (opt.cohort_size < 1 || opt.n_cohorts < 1 || opt.final_replicates < 1)
    throw std::invalid_argument("informed-allocation: need cohorts, patients and replicates");
  if (opt.n_second_draws > opt.cohort_size)
    throw std::invalid_argument("informed-allocation: more second draws than patients");
  const std::uint64_t exp_key = name_key(experiment);
  const QuadratureRule rule = gh_rule(opt.quadrature_order);
  AllocationResult all;

  struct PatientOutcome {
    bool initial_ok = false;
    double score_ci = 0.0;
    double score_quad = 0.0;
    std::optional<BiasRecord> one_draw, two_draws;
  };

  for (const auto& sched : schedules) {
    for (std::size_t c = 0; c < opt.n_cohorts; ++c) {
      for (std::size_t si = 0; si < opt.sigma_re.size(); ++si) {
        const double sigma = opt.sigma_re[si];
        std::vector<PatientOutcome> pts(opt.cohort_size);
        std::vector<ExperimentResult> tallies(opt.cohort_size);

        parallel_for(opt.cohort_size, ctx.threads, [&](std::size_t i) {
          auto& po = pts[i];
          Rng prng = make_stream(ctx.seed, {exp_key, detail::kPatientStream, c, i});
          const PkParams truth = draw_patient(ctx.prior, prng);
          const double t1 = uniform(prng, opt.first_lo, opt.first_hi);
          const double c1 = concentration(t1, truth, sched.regimen) + truth.sigma * standard_normal(prng);
          const double w1 = standard_normal(prng);
          const double t2 = uniform(prng, opt.second_lo, opt.second_hi);
          const double c2 = concentration(t2, truth, sched.regimen) + truth.sigma * standard_normal(prng);

          SampleSet initial;
          initial.add(std::max(0.0, t1 + sigma * w1), c1);
          const auto post = fit(initial, sched.regimen, ctx.prior);
          po.initial_ok = post.converged;
          if (po.initial_ok) {
            Rng crng = make_stream(ctx.seed, {exp_key, c, i, si, name_key("ci")});
            po.score_ci = credible_interval_ft(post, sched.regimen, ctx.pd, opt.ci_level, opt.ci_draws, crng).width();
            try {
              po.score_quad = quadrature_tre_variance(initial, sched.regimen, ctx.prior, ctx.pd, sigma, rule).variance;
            } catch (const std::runtime_error&) {
              po.initial_ok = false;
            }
          }

          SampleSet one, two;
          one.add(t1, c1);
          two.add(t1, c1);
          two.add(t2, c2);
          BiasRecord keys;
          keys.experiment = std::string(experiment);
          keys.schedule = sched.name;
          keys.cohort = c + 1;
          keys.patient_id = i + 1;
          for (auto [data, slot] : {std::pair{&one, &po.one_draw}, std::pair{&two, &po.two_draws}}) {
            keys.during_infusion = sched.regimen.infusing(data->times.back());
            Rng frng = make_stream(ctx.seed, {exp_key, c, i, name_key("final")});
            *slot = tre_bias_record(keys, *data, sched.regimen, ctx, TreSpec::random(sigma),
                                    opt.final_replicates, frng, tallies[i]);
          }
        });

        for (auto& t : tallies) {
          all.result.n_excluded_fits += t.n_excluded_fits;
          all.result.n_excluded_records += t.n_excluded_records;
        }

        for (std::size_t ci = 0; ci < opt.criteria.size(); ++ci) {
          const auto crit = opt.criteria[ci];
          std::vector<double> scores(opt.cohort_size, 0.0);
          for (std::size_t i = 0; i < opt.cohort_size; ++i) {
            if (!pts[i].initial_ok) scores[i] = -std::numeric_limits<double>::infinity();
            else if (crit == AllocationCriterion::ci_width) scores[i] = pts[i].score_ci;
            else if (crit == AllocationCriterion::quadrature_variance) scores[i] = pts[i].score_quad;
          }
          Rng arng = make_stream(ctx.seed, {exp_key, c, si, static_cast<std::uint64_t>(crit), name_key("alloc")});
          const auto chosen = allocate_top(scores, opt.n_second_draws, arng);
          std::vector<bool> second(opt.cohort_size, false);
          for (auto k : chosen) second[k] = true;

          CohortRecord cr{sched.name, to_string(crit), c + 1, sigma, 0.0, 0, 0, chosen.size(), false};
          double total = 0.0;
          for (std::size_t i = 0; i < opt.cohort_size; ++i) {
            const auto& rec = second[i] ? pts[i].two_draws : pts[i].one_draw;
            if (!pts[i].initial_ok || !rec) {
              ++cr.n_excluded;
              continue;
            }
            BiasRecord r = *rec;
            r.arm = to_string(crit);
            total += r.abs_bias;
            ++cr.n_patients;
            all.result.records.push_back(std::move(r));
          }
          cr.mean_abs_bias = cr.n_patients ? total / static_cast<double>(cr.n_patients) : std::nan("");
          cr.flagged = static_cast<double>(cr.n_excluded) >
                       opt.max_excluded_fraction * static_cast<double>(opt.cohort_size);
          if (cr.flagged)
            all.result.warnings.push_back(sched.name + " cohort " + std::to_string(c + 1) + " (" +
                                          cr.criterion + "): more than " +
                                          std::to_string(opt.max_excluded_fraction * 100) +
                                          "% of patients excluded");
          all.cohorts.push_back(cr);
        }
      }
    }
  }
  return all;
}

}  // namespace tresim
