#pragma once

// Linear two-compartment model with zero-order (constant rate) intravenous
// infusions. Concentrations are in ug/mL (== mg/L), doses in grams, volumes
// in litres, times in hours since the start of the first infusion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "tresim/random.hpp"

namespace tresim {

/// Number of free parameters on the log scale: (cl, v1, q, v2, sigma).
inline constexpr std::size_t kNumParams = 5;
using LogParams = std::array<double, kNumParams>;

struct PkParams {
  double cl = 0.0;     // L/h
  double v1 = 0.0;     // L
  double q = 0.0;      // L/h, zero collapses to one compartment
  double v2 = 0.0;     // L
  double sigma = 0.0;  // residual SD, ug/mL

  bool valid() const {
    auto pos = [](double x) { return std::isfinite(x) && x > 0.0; };
    return pos(cl) && pos(v1) && pos(v2) && pos(sigma) && std::isfinite(q) &&
           q >= 0.0;
  }

  static PkParams from_log(std::span<const double> x) {
    if (x.size() < 4) throw std::invalid_argument("PkParams::from_log: need 4 or 5 values");
    PkParams p{std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), 1.0};
    if (x.size() >= 5) p.sigma = std::exp(x[4]);
    return p;
  }

  LogParams to_log() const {
    return {std::log(cl), std::log(v1), std::log(q), std::log(v2), std::log(sigma)};
  }
};

struct InfusionEvent {
  double start = 0.0;     // h
  double duration = 0.0;  // h
  double amount = 0.0;    // g

  double end() const { return start + duration; }
  /// Infusion rate in mg/h.
  double rate() const { return amount * 1000.0 / duration; }
};

/// One dose window: from an infusion start up to the next infusion start.
struct DoseWindow {
  std::size_t index = 0;       // 1-based
  double start = 0.0;          // s_j
  double end = 0.0;            // e_j
  double infusion_end = 0.0;   // e*_j

  bool infusing(double t) const { return t >= start && t <= infusion_end; }
};

class DosingRegimen {
 public:
  DosingRegimen() = default;

  DosingRegimen(std::vector<InfusionEvent> events, double horizon)
      : events_(std::move(events)), horizon_(horizon) {
    for (const auto& e : events_) {
      if (!(e.start >= 0.0) || !std::isfinite(e.start))
        throw std::invalid_argument("infusion start must be a finite time >= 0");
      if (!(e.duration > 0.0) || !std::isfinite(e.duration))
        throw std::invalid_argument("infusion duration must be > 0");
      if (!(e.amount > 0.0) || !std::isfinite(e.amount))
        throw std::invalid_argument("infusion amount must be > 0");
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    for (const auto& e : events_) {
      if (e.end() > horizon_ + 1e-12)
        throw std::invalid_argument("regimen horizon ends before an infusion does");
    }
  }

  const std::vector<InfusionEvent>& events() const { return events_; }
  double horizon() const { return horizon_; }

  /// Scale every dose amount by `factor` (> 0).
  DosingRegimen scaled(double factor) const {
    auto ev = events_;
    for (auto& e : ev) e.amount *= factor;
    return DosingRegimen(std::move(ev), horizon_);
  }

  std::vector<DoseWindow> windows() const {
    std::vector<DoseWindow> out;
    out.reserve(events_.size());
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const double e = i + 1 < events_.size() ? events_[i + 1].start : horizon_;
      out.push_back({i + 1, events_[i].start, e, events_[i].end()});
    }
    return out;
  }

  /// True when some infusion is running at t (end points included).
  bool infusing(double t) const {
    return std::any_of(events_.begin(), events_.end(),
                       [t](const auto& e) { return t >= e.start && t <= e.end(); });
  }

 private:
  std::vector<InfusionEvent> events_;
  double horizon_ = 0.0;
};

/// `n_doses` identical infusions every `interval` hours, the first at t = 0.
inline DosingRegimen standard_regimen(double infusion_duration, int n_doses,
                                      double interval, double amount) {
  if (n_doses < 1) throw std::invalid_argument("standard_regimen: n_doses must be >= 1");
  if (!(infusion_duration > 0.0) || infusion_duration > interval)
    throw std::invalid_argument("standard_regimen: infusion duration must lie in (0, interval]");
  std::vector<InfusionEvent> ev;
  for (int i = 0; i < n_doses; ++i) ev.push_back({i * interval, infusion_duration, amount});
  return DosingRegimen(std::move(ev), n_doses * interval);
}

/// Copy of `regimen` with event `event_index` (0-based) moved by `delta`
/// hours; its duration and amount are kept, as is the horizon.
inline DosingRegimen shift_infusion(const DosingRegimen& regimen, std::size_t event_index,
                                    double delta) {
  auto ev = regimen.events();
  if (event_index >= ev.size()) throw std::out_of_range("shift_infusion: no such event");
  ev[event_index].start += delta;
  if (ev[event_index].start < 0.0)
    throw std::invalid_argument("shift_infusion: shifted infusion would start before t = 0");
  return DosingRegimen(std::move(ev), regimen.horizon());
}

// ---------------------------------------------------------------------------
// Closed form

/// Hybrid rate constants and unit-impulse coefficients (per litre) of the
/// central compartment: C_bolus(t) = dose * (a * exp(-alpha t) + b * exp(-beta t)).
template <class T>
struct Disposition {
  T alpha, beta, a, b;
};

template <class T>
Disposition<T> disposition(const T& cl, const T& v1, const T& q, const T& v2) {
  using std::sqrt;
  const T k10 = cl / v1;
  const T k12 = q / v1;
  const T k21 = q / v2;
  const T d = k10 + k12 - k21;
  const T disc = sqrt(d * d + 4.0 * k12 * k21);
  const T alpha = (k10 + k12 + k21 + disc) / 2.0;
  T beta = k10 * k21 / alpha;
  auto val = [](const T& x) -> double {
    if constexpr (std::is_floating_point_v<T>) return x; else return x.value();
  };
  if (val(alpha) - val(beta) < 1e-10 * val(alpha)) beta = beta - 1e-8 * alpha;
  const T a = (alpha - k21) / (alpha - beta) / v1;
  const T b = (k21 - beta) / (alpha - beta) / v1;
  return {alpha, beta, a, b};
}

namespace detail {

// (1 - exp(-k tau)) / k, with the k -> 0 limit.
template <class T>
T decay_integral(const T& k, double tau) {
  using std::exp;
  if constexpr (std::is_floating_point_v<T>) {
    return k == 0.0 ? T(tau) : -std::expm1(-k * tau) / k;
  } else {
    if (k.value() == 0.0) return T(tau);
    return (1.0 - exp(-k * tau)) / k;
  }
}

}  // namespace detail

/// Central concentration at time t for a given disposition: exact
/// superposition over every infusion that has started by t.
template <class T>
T concentration(double t, const Disposition<T>& d, const DosingRegimen& regimen) {
  using std::exp;
  T c = T(0.0);
  for (const auto& e : regimen.events()) {
    const double tau = t - e.start;
    if (tau <= 0.0) continue;
    const double rate = e.rate();
    if (tau <= e.duration) {
      c += rate * (d.a * detail::decay_integral(d.alpha, tau) +
                   d.b * detail::decay_integral(d.beta, tau));
    } else {
      const double after = tau - e.duration;
      c += rate * (d.a * detail::decay_integral(d.alpha, e.duration) * exp(-d.alpha * after) +
                   d.b * detail::decay_integral(d.beta, e.duration) * exp(-d.beta * after));
    }
  }
  return c;
}

inline double concentration(double t, const PkParams& p, const DosingRegimen& regimen) {
  return concentration(t, disposition(p.cl, p.v1, p.q, p.v2), regimen);
}

/// Observed concentration: model value plus N(0, sigma) error. Negative
/// values are returned as they are.
inline double simulate_observation(double t, const PkParams& p, const DosingRegimen& regimen,
                                   Rng& rng) {
  return concentration(t, p, regimen) + p.sigma * standard_normal(rng);
}

/// Streams the concentration at t_k = first + k * step, k < n, into
/// `sink(k, c)` in increasing k.
///
/// Walks the grid once, carrying the two modal amplitudes and the steady
/// infusion term between points, so each point costs two multiplications
/// instead of a sum over all infusions. Exact up to rounding; agrees with
/// the closed form above.
template <class Sink>
void for_each_grid_concentration(const PkParams& p, const DosingRegimen& regimen, double first,
                                 double step, std::size_t n, Sink&& sink) {
  const auto d = disposition(p.cl, p.v1, p.q, p.v2);
  const double a_term = d.a / d.alpha;
  const double b_term = d.b == 0.0 ? 0.0 : d.b / d.beta;

  struct Boundary {
    double time;
    double rate;  // +rate at infusion start, -rate at end
  };
  std::vector<Boundary> bounds;
  bounds.reserve(2 * regimen.events().size());
  for (const auto& e : regimen.events()) {
    bounds.push_back({e.start, e.rate()});
    bounds.push_back({e.end(), -e.rate()});
  }
  std::stable_sort(bounds.begin(), bounds.end(),
                   [](const auto& x, const auto& y) { return x.time < y.time; });

  double steady = 0.0, mode_a = 0.0, mode_b = 0.0;
  double now = bounds.empty() ? first : std::min(first, bounds.front().time);
  const double step_decay_a = std::exp(-d.alpha * step);
  const double step_decay_b = std::exp(-d.beta * step);
  std::size_t next = 0;
  bool regular = false;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = first + static_cast<double>(k) * step;
    while (next < bounds.size() && bounds[next].time <= t) {
      const double dt = bounds[next].time - now;
      mode_a *= std::exp(-d.alpha * dt);
      mode_b *= std::exp(-d.beta * dt);
      now = bounds[next].time;
      const double r = bounds[next].rate;
      steady += r * (a_term + b_term);
      mode_a -= r * a_term;
      mode_b -= r * b_term;
      regular = false;
      ++next;
    }
    if (regular) {
      mode_a *= step_decay_a;
      mode_b *= step_decay_b;
    } else {
      const double dt = t - now;
      mode_a *= std::exp(-d.alpha * dt);
      mode_b *= std::exp(-d.beta * dt);
    }
    now = t;
    regular = true;
    sink(k, steady + mode_a + mode_b);
  }
}

inline void concentration_grid(const PkParams& p, const DosingRegimen& regimen, double first,
                               double step, std::span<double> out) {
  for_each_grid_concentration(p, regimen, first, step, out.size(),
                              [&out](std::size_t k, double c) { out[k] = c; });
}

}  // namespace tresim
