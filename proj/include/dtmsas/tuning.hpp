#pragma once

// Window-length tuning: how long a single SAS window stays within a tolerance
// of a fine RK4 solution, and which order minimizes t_one * T / t_w.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"
#include "dtmsas/rk4.hpp"
#include "dtmsas/sas.hpp"
#include "dtmsas/trajectory.hpp"

namespace dtmsas {

inline constexpr double kGridStep = 1.0 / 1200.0;

struct TuningOptions {
  double grid_step = kGridStep;     // candidate t_w are multiples of this
  std::size_t max_steps = 480;      // longest candidate, in grid steps
  std::size_t ref_substeps = 4;     // fine RK4 runs at grid_step / ref_substeps
  std::vector<double> probe_offsets{0.0, 0.2, 0.4, 0.6};  // after clearing
};

/// A probe: initial state of one candidate window plus the fine-RK4 solution
/// from it on the candidate grid (ref[j] at j * grid_step).
struct Probe {
  double time = 0.0;
  Stage stage = Stage::post_fault;
  std::vector<std::vector<MachineState>> ref;
};

/// States at clearing and a few instants of the first post-fault swing, each
/// with its fine reference run. Without an event the probes start from
/// `initial` at the given offsets.
inline std::vector<Probe> make_probes(const SystemModel& model, std::span<const MachineState> initial,
                                      const TuningOptions& opt = {}) {
  if (opt.max_steps == 0 || opt.ref_substeps == 0 || !(opt.grid_step > 0.0))
    throw ValidationError("tuning: bad options");
  const double h = opt.grid_step;
  const double t0 = model.network.event ? model.network.event->t_clear : 0.0;
  double t_last = t0;
  for (double o : opt.probe_offsets) t_last = std::max(t_last, t0 + o);

  // trajectory to the last probe at the grid step
  RK4Config cfg{h, std::max(t_last, h), 1};
  const auto tr = rk4_simulate(model, initial, cfg);
  std::vector<Probe> probes;
  RK4Stepper stepper(model);
  const double hs = h / static_cast<double>(opt.ref_substeps);
  for (double o : opt.probe_offsets) {
    const auto j = static_cast<std::size_t>(std::llround((t0 + o) / h));
    Probe p;
    p.time = tr.times.at(j);
    p.stage = model.network.stage_at(p.time);
    std::vector<MachineState> s = tr.states.at(j);
    p.ref.reserve(opt.max_steps + 1);
    p.ref.push_back(s);
    for (std::size_t k = 0; k < opt.max_steps; ++k) {
      for (std::size_t r = 0; r < opt.ref_substeps; ++r) stepper.step(s, hs, p.stage);
      p.ref.push_back(s);
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

/// Max |delta| and |omega| deviation over all machines.
inline double state_error(std::span<const MachineState> a, std::span<const MachineState> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::max(std::abs(a[i].delta - b[i].delta), std::abs(a[i].omega - b[i].omega));
    if (!(d <= e)) e = d;  // NaN propagates as the running max
  }
  return e;
}

/// prof[j] = max error of one order-K window over [0, j * grid_step]
/// against the probe's reference; +inf once the series blows up.
inline std::vector<double> window_error_profile(const SystemModel& model, const Probe& probe, std::size_t order,
                                                const TuningOptions& opt = {}) {
  const auto steps = probe.ref.size() - 1;
  std::vector<double> prof(steps + 1, std::numeric_limits<double>::infinity());
  WindowSAS w;
  try {
    w = build_window(probe.ref.front(), model, probe.stage, order);
  } catch (const DivergenceError&) {
    return prof;
  }
  std::vector<MachineState> s(model.size());
  double run = 0.0;
  prof[0] = 0.0;
  for (std::size_t j = 1; j <= steps; ++j) {
    evaluate_states(w, static_cast<double>(j) * opt.grid_step, s);
    const double e = state_error(s, probe.ref[j]);
    if (!std::isfinite(e)) break;
    run = std::max(run, e);
    prof[j] = run;
  }
  return prof;
}

/// Largest grid t_w whose one-window error is within `tol` for every probe;
/// nullopt when not even one grid step qualifies.
inline std::optional<double> max_window(const SystemModel& model, std::size_t order, double tol,
                                        std::span<const Probe> probes, const TuningOptions& opt = {}) {
  if (probes.empty()) throw ValidationError("max_window: no probes");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (const auto& p : probes) {
    const auto prof = window_error_profile(model, p, order, opt);
    std::size_t last = 0;
    for (std::size_t j = 1; j < prof.size() && prof[j] <= tol; ++j) last = j;
    best = std::min(best, last);
  }
  if (best == 0) return std::nullopt;
  return static_cast<double>(best) * opt.grid_step;
}

struct ErrorCell {
  std::size_t order = 0;
  double window = 0.0;
  double max_err = 0.0;  // +inf for a diverged window
};

/// One-window max error (worst over probes) for each (K, t_w) pair; t_w are
/// rounded to the candidate grid.
inline std::vector<ErrorCell> error_map(const SystemModel& model, std::span<const std::size_t> orders,
                                        std::span<const double> windows, std::span<const Probe> probes,
                                        const TuningOptions& opt = {}) {
  std::vector<ErrorCell> out;
  for (auto k : orders) {
    std::vector<std::vector<double>> profs;
    for (const auto& p : probes) profs.push_back(window_error_profile(model, p, k, opt));
    for (double tw : windows) {
      const auto j = static_cast<std::size_t>(std::llround(tw / opt.grid_step));
      if (j == 0 || j >= profs.front().size()) throw ValidationError("error_map: window outside candidate grid");
      double e = 0.0;
      for (const auto& pr : profs) e = std::max(e, pr[j]);
      out.push_back({k, static_cast<double>(j) * opt.grid_step, e});
    }
  }
  return out;
}

/// Median wall time (s) of building one window and evaluating it at its end,
/// after `warmup` discarded runs.
inline double measure_t_one(const SystemModel& model, const Probe& probe, std::size_t order, double window,
                            std::size_t reps = 21, std::size_t warmup = 3) {
  reps = std::max<std::size_t>(reps, 20);
  std::vector<MachineState> end(model.size());
  std::vector<double> samples;
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < reps + warmup; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto w = build_window(probe.ref.front(), model, probe.stage, order);
    evaluate_states(w, window, end);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + end[0].delta;
    if (r >= warmup) samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
  return samples[samples.size() / 2];
}

struct TuningRow {
  std::size_t order = 0;
  double tol = 0.0;
  std::optional<double> t_w_max;  // nullopt: tolerance unreachable at this K
  double max_err = 0.0;           // one-window error at t_w_max
  double t_one = 0.0;             // s
  double t_total = std::numeric_limits<double>::infinity();  // s, t_one * T / t_w
};

struct TuningGrid {
  std::string scenario;
  double duration = 0.0;
  std::vector<TuningRow> rows;
};

inline TuningGrid tuning_grid(const SystemModel& model, std::span<const Probe> probes,
                              std::span<const std::size_t> orders, std::span<const double> tols, double duration,
                              const TuningOptions& opt = {}, bool measure = true) {
  TuningGrid g;
  g.duration = duration;
  for (auto k : orders) {
    std::vector<std::vector<double>> profs;
    for (const auto& p : probes) profs.push_back(window_error_profile(model, p, k, opt));
    std::optional<double> t_one;
    for (double tol : tols) {
      TuningRow row;
      row.order = k;
      row.tol = tol;
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (const auto& pr : profs) {
        std::size_t last = 0;
        for (std::size_t j = 1; j < pr.size() && pr[j] <= tol; ++j) last = j;
        best = std::min(best, last);
      }
      if (best > 0) {
        row.t_w_max = static_cast<double>(best) * opt.grid_step;
        for (const auto& pr : profs) row.max_err = std::max(row.max_err, pr[best]);
        if (measure) {
          if (!t_one) t_one = measure_t_one(model, probes.front(), k, *row.t_w_max);
          row.t_one = *t_one;
          row.t_total = row.t_one * duration / *row.t_w_max;
        }
      } else {
        row.max_err = std::numeric_limits<double>::infinity();
      }
      g.rows.push_back(row);
    }
  }
  return g;
}

/// Row minimizing t_total at `tol`; ties go to the smaller K.
inline const TuningRow& select_optimal(const TuningGrid& g, double tol) {
  const TuningRow* best = nullptr;
  for (const auto& r : g.rows) {
    if (r.tol != tol || !r.t_w_max) continue;
    if (!best || r.t_total < best->t_total || (r.t_total == best->t_total && r.order < best->order)) best = &r;
  }
  if (!best) throw ValidationError("tolerance unreachable for every candidate order");
  return *best;
}

inline void write_tuning_csv(std::ostream& out, const TuningGrid& g) {
  out << "K,t_w,tol,max_err,t_one,t_total\n";
  for (const auto& r : g.rows) {
    out << r.order << ',' << (r.t_w_max ? format_double(*r.t_w_max) : std::string("nan")) << ','
        << format_double(r.tol) << ',' << format_double(r.max_err) << ',' << format_double(r.t_one) << ','
        << format_double(r.t_total) << '\n';
  }
}

inline void write_error_map_csv(std::ostream& out, std::span<const ErrorCell> cells) {
  out << "K,t_w,tol,max_err,t_one,t_total\n";
  for (const auto& c : cells)
    out << c.order << ',' << format_double(c.window) << ",nan," << format_double(c.max_err) << ",nan,nan\n";
}

}  // namespace dtmsas
