#pragma once

// Classical single-machine infinite-bus swing equation
//   delta' = omega_s omega,  omega' = (P_m - P_max sin delta - D omega) / (2H),
// with its DT recursion and a matching RK4 reference.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"
#include "dtmsas/series.hpp"
#include "dtmsas/trajectory.hpp"

namespace dtmsas {

struct SmibParams {
  double H = 3.0;
  double D = 3.0;
  double P_m = 0.44;
  double P_max = 1.7;
  double delta0 = 0.26;
  double omega0 = 0.002;
  double omega_s = kDefaultOmegaS;

  void validate() const {
    if (!(H > 0.0)) throw ValidationError("smib: H must be > 0");
    if (!(D >= 0.0)) throw ValidationError("smib: D must be >= 0");
    if (!(omega_s > 0.0)) throw ValidationError("smib: omega_s must be > 0");
    if (!std::isfinite(P_m) || !std::isfinite(P_max) || !std::isfinite(delta0) || !std::isfinite(omega0))
      throw ValidationError("smib: parameters must be finite");
  }
};

struct SmibState {
  double delta = 0.0;
  double omega = 0.0;
};

struct SmibWindow {
  Series delta;
  Series omega;
  TrigPair trig;
  Series p_e;

  std::size_t order() const noexcept { return delta.order(); }
  SmibState eval(double t) const { return {idt_eval(delta, t), idt_eval(omega, t)}; }
};

/// Delta(k+1) = omega_s W(k)/(k+1);
/// W(k+1) = (P_m [k=0] - P_max S(k) - D W(k)) / (2H (k+1)).
inline SmibWindow smib_build_window(const SmibParams& p, SmibState init, std::size_t order) {
  if (order < 1) throw ValidationError("smib: order must be >= 1");
  SmibWindow w{Series(order), Series(order), trig_seed(init.delta, order), Series(order)};
  w.delta[0] = init.delta;
  w.omega[0] = init.omega;
  w.p_e[0] = p.P_max * w.trig.sin_series[0];
  for (std::size_t k = 0; k < order; ++k) {
    const double kp1 = static_cast<double>(k + 1);
    w.delta[k + 1] = p.omega_s * w.omega[k] / kp1;
    const double pm = k == 0 ? p.P_m : 0.0;
    w.omega[k + 1] = (pm - p.P_max * w.trig.sin_series[k] - p.D * w.omega[k]) / (2.0 * p.H * kp1);
    const auto [s, c] = trig_extend(w.delta, w.trig, k + 1);
    w.trig.sin_series[k + 1] = s;
    w.trig.cos_series[k + 1] = c;
    w.p_e[k + 1] = p.P_max * s;
  }
  return w;
}

inline SmibState smib_rates(const SmibParams& p, SmibState s) {
  return {p.omega_s * s.omega, (p.P_m - p.P_max * std::sin(s.delta) - p.D * s.omega) / (2.0 * p.H)};
}

inline SmibState smib_rk4_step(const SmibParams& p, SmibState s, double h) {
  auto add = [](SmibState a, SmibState b, double c) { return SmibState{a.delta + c * b.delta, a.omega + c * b.omega}; };
  const auto k1 = smib_rates(p, s);
  const auto k2 = smib_rates(p, add(s, k1, h / 2));
  const auto k3 = smib_rates(p, add(s, k2, h / 2));
  const auto k4 = smib_rates(p, add(s, k3, h));
  return {s.delta + h / 6 * (k1.delta + 2 * k2.delta + 2 * k3.delta + k4.delta),
          s.omega + h / 6 * (k1.omega + 2 * k2.omega + 2 * k3.omega + k4.omega)};
}

/// RK4 states on the grid j*h, j = 0..steps (each grid step taken in `substeps` RK4 steps).
inline std::vector<SmibState> smib_reference(const SmibParams& p, SmibState init, double h, std::size_t steps,
                                             std::size_t substeps = 1) {
  std::vector<SmibState> out;
  out.reserve(steps + 1);
  out.push_back(init);
  const double hs = h / static_cast<double>(substeps);
  for (std::size_t j = 0; j < steps; ++j) {
    for (std::size_t s = 0; s < substeps; ++s) init = smib_rk4_step(p, init, hs);
    out.push_back(init);
  }
  return out;
}

/// Longest prefix j*h of a single window (anchored at `init`) over which the
/// rotor-angle error against `reference` stays within `tol`. Returns 0 if the
/// first grid point already fails.
inline double smib_max_window(const SmibParams& p, std::size_t order, double tol,
                              const std::vector<SmibState>& reference, double h) {
  const auto w = smib_build_window(p, reference.front(), order);
  std::size_t last = 0;
  for (std::size_t j = 1; j < reference.size(); ++j) {
    const double err = std::abs(idt_eval(w.delta, static_cast<double>(j) * h) - reference[j].delta);
    if (!(err <= tol)) break;
    last = j;
  }
  return static_cast<double>(last) * h;
}

inline Trajectory smib_trajectory_header() {
  Trajectory tr;
  tr.machines = 1;
  return tr;
}

/// Multi-window SAS run of the SMIB case: re-anchor every `window` seconds.
inline Trajectory smib_simulate(const SmibParams& p, std::size_t order, double window, double duration,
                                double sample_step) {
  if (!(window > 0.0) || !(duration > 0.0) || !(sample_step > 0.0) || sample_step > window * (1 + 1e-12))
    throw ValidationError("smib_simulate: need 0 < sample_step <= window, duration > 0");
  auto tr = smib_trajectory_header();
  const auto t0 = std::chrono::steady_clock::now();
  const auto n_samples = static_cast<std::size_t>(std::floor(duration / sample_step + 1e-9)) + 1;
  SmibState state{p.delta0, p.omega0};
  double anchor = 0.0;
  std::size_t j = 0;
  auto emit = [&](double t, SmibState s) {
    MachineState m{s.delta, s.omega, 0.0, 0.0};
    tr.push(t, {m}, {p.P_max * std::sin(s.delta)});
  };
  while (anchor < duration - 1e-9) {
    const double end = std::min(anchor + window, duration);
    const auto w0 = std::chrono::steady_clock::now();
    const auto w = smib_build_window(p, state, order);
    for (; j < n_samples; ++j) {
      const double t = static_cast<double>(j) * sample_step;
      if (t >= end - 1e-9 && end < duration - 1e-9) break;
      emit(t, w.eval(t - anchor));
    }
    state = w.eval(end - anchor);
    if (!std::isfinite(state.delta) || !std::isfinite(state.omega))
      throw DivergenceError("smib: series diverged", anchor, tr.window_starts.size());
    tr.window_starts.push_back(anchor);
    tr.window_wall_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - w0).count());
    anchor = end;
  }
  tr.steps = tr.window_starts.size();
  tr.total_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

inline Trajectory smib_rk4_simulate(const SmibParams& p, double h, double duration, std::size_t record_every = 1) {
  if (!(h > 0.0) || !(duration > 0.0) || record_every == 0) throw ValidationError("smib_rk4_simulate: bad config");
  auto tr = smib_trajectory_header();
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(std::llround(duration / h));
  SmibState s{p.delta0, p.omega0};
  auto emit = [&](std::size_t step) {
    tr.push(static_cast<double>(step) * h, {MachineState{s.delta, s.omega, 0.0, 0.0}}, {p.P_max * std::sin(s.delta)});
  };
  emit(0);
  for (std::size_t step = 1; step <= n; ++step) {
    s = smib_rk4_step(p, s, h);
    if (!std::isfinite(s.delta) || !std::isfinite(s.omega))
      throw DivergenceError("smib rk4: state diverged", static_cast<double>(step - 1) * h, step);
    if (step % record_every == 0 || step == n) emit(step);
  }
  tr.steps = n;
  tr.total_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

}  // namespace dtmsas
