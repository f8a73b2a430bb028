#pragma once

// Semi-analytical solution (SAS) of the multi-machine model by the
// differential transformation: per window, the coefficients of every state
// and algebraic variable are generated order by order, then the truncated
// series are evaluated inside the window and re-anchored at its end.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"
#include "dtmsas/series.hpp"
#include "dtmsas/trajectory.hpp"
#include "dtmsas/worker_pool.hpp"

namespace dtmsas {

struct MachineSeries {
  Series delta, omega, ep_q, ep_d;
};

struct AlgebraicSeries {
  Series i_d, i_q, P_e, e_x, e_y, i_x, i_y, e_d, e_q;
};

struct WindowSAS {
  double anchor_time = 0.0;
  std::size_t order = 0;
  Stage stage = Stage::pre_fault;
  std::vector<MachineSeries> machines;
  std::vector<AlgebraicSeries> algebraic;
  std::vector<TrigPair> trig;
};

struct BuildOptions {
  /// Window length used by the blow-up guard |Phi(k)| * horizon^k <= limit;
  /// 0 disables the magnitude bound (non-finite values are always rejected).
  double blowup_horizon = 0.0;
  double blowup_limit = 1e6;
};

namespace detail {

// Coefficient generation as a fixed sequence of rows. Tasks inside a row are
// independent; rows run in order. The two- and four-addend partitions are
// fixed, so any executor (inline loop or worker pool) produces the same bits.
class WindowBuilder {
 public:
  WindowBuilder(const SystemModel& model, Stage stage, std::span<const MachineState> initial,
                std::size_t order, BuildOptions opts)
      : model_(model), opts_(opts), n_(model.size()), order_(order) {
    if (initial.size() != n_) throw ValidationError("build_window: initial state size mismatch");
    if (order < 1) throw ValidationError("build_window: order must be >= 1");
    for (const auto& s : initial)
      if (!std::isfinite(s.delta) || !std::isfinite(s.omega) || !std::isfinite(s.ep_q) || !std::isfinite(s.ep_d))
        throw ValidationError("build_window: initial state must be finite");
    const auto& y = model.network.matrix(stage);
    if (static_cast<std::size_t>(y.rows()) != n_ || static_cast<std::size_t>(y.cols()) != n_)
      throw ValidationError("build_window: stage matrix dimension mismatch");
    g_.resize(n_ * n_);
    b_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto v = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        g_[i * n_ + j] = v.real();
        b_[i * n_ + j] = v.imag();
      }
    half_ = (n_ + 1) / 2;
    w_.order = order;
    w_.stage = stage;
    w_.machines.assign(n_, MachineSeries{Series(order), Series(order), Series(order), Series(order)});
    w_.algebraic.assign(n_, AlgebraicSeries{Series(order), Series(order), Series(order), Series(order), Series(order),
                                            Series(order), Series(order), Series(order), Series(order)});
    w_.trig.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto& m = w_.machines[i];
      m.delta[0] = initial[i].delta;
      m.omega[0] = initial[i].omega;
      m.ep_q[0] = initial[i].ep_q;
      m.ep_d[0] = initial[i].ep_d;
      w_.trig[i] = trig_seed(initial[i].delta, order);
    }
    parts_.assign(4 * n_, 0.0);
  }

  template <class Exec>
  WindowSAS run(Exec&& exec) {
    algebraic_rows(exec, 0);
    for (std::size_t k = 1; k <= order_; ++k) {
      k_ = k;
      exec(4 * n_, [this](std::size_t t) { state_task(t); });
      check_states(k);
      exec(2 * n_, [this](std::size_t t) { trig_task(t); });
      algebraic_rows(exec, k);
    }
    for (const auto& a : w_.algebraic)
      for (const Series* s : {&a.i_d, &a.i_q, &a.P_e, &a.e_d, &a.e_q})
        for (double v : s->coeffs())
          if (!std::isfinite(v)) throw DivergenceError("build_window: non-finite algebraic coefficient", 0.0, 0);
    return std::move(w_);
  }

 private:
  template <class Exec>
  void algebraic_rows(Exec& exec, std::size_t k) {
    k_ = k;
    exec(4 * n_, [this](std::size_t t) { voltage_part(t); });
    exec(2 * n_, [this](std::size_t t) { voltage_combine(t); });
    exec(4 * n_, [this](std::size_t t) { current_part(t); });
    exec(2 * n_, [this](std::size_t t) { current_combine(t); });
    exec(4 * n_, [this](std::size_t t) { dq_part(t); });
    exec(n_, [this](std::size_t t) { dq_combine(t); });
    exec(4 * n_, [this](std::size_t t) { power_part(t); });
    exec(n_, [this](std::size_t t) { power_combine(t); });
  }

  // Row 1: Phi(k) from Phi(k-1), Psi(k-1).
  void state_task(std::size_t t) {
    const std::size_t i = t / 4, k = k_;
    const auto& p = model_.machines[i];
    auto& m = w_.machines[i];
    const auto& a = w_.algebraic[i];
    const double kd = static_cast<double>(k);
    const bool first = (k == 1);
    switch (t % 4) {
      case 0: m.delta[k] = model_.omega_s * m.omega[k - 1] / kd; break;
      case 1: m.omega[k] = ((first ? p.P_m : 0.0) - a.P_e[k - 1] - p.D * m.omega[k - 1]) / (2.0 * p.H * kd); break;
      case 2:
        m.ep_q[k] = ((first ? p.e_fd : 0.0) - m.ep_q[k - 1] - (p.x_d - p.xp_d) * a.i_d[k - 1]) / (p.Tp_d0 * kd);
        break;
      default: m.ep_d[k] = (-m.ep_d[k - 1] + (p.x_q - p.xp_q) * a.i_q[k - 1]) / (p.Tp_q0 * kd); break;
    }
  }

  void check_states(std::size_t k) const {
    const double scale = opts_.blowup_horizon > 0.0 ? std::pow(opts_.blowup_horizon, static_cast<double>(k)) : 0.0;
    for (const auto& m : w_.machines)
      for (double v : {m.delta[k], m.omega[k], m.ep_q[k], m.ep_d[k]}) {
        if (!std::isfinite(v))
          throw DivergenceError("build_window: non-finite coefficient at order " + std::to_string(k), 0.0, 0);
        if (scale > 0.0 && std::abs(v) * scale > opts_.blowup_limit)
          throw DivergenceError("build_window: series blow-up at order " + std::to_string(k), 0.0, 0);
      }
  }

  // Row 2: S(k), C(k).
  void trig_task(std::size_t t) {
    const std::size_t i = t / 2, k = k_;
    auto& tp = w_.trig[i];
    const auto delta = w_.machines[i].delta.coeffs();
    const auto s = tp.sin_series.coeffs();
    const auto c = tp.cos_series.coeffs();
    double acc = 0.0;
    if (t % 2 == 0) {
      for (std::size_t m = 0; m < k; ++m) acc += c[m] * (static_cast<double>(k - m) * delta[k - m]);
      tp.sin_series[k] = acc * (1.0 / static_cast<double>(k));
    } else {
      for (std::size_t m = 0; m < k; ++m) acc += s[m] * (static_cast<double>(k - m) * delta[k - m]);
      tp.cos_series[k] = -acc * (1.0 / static_cast<double>(k));
    }
  }

  // e_x = e'_d S + e'_q C, e_y = e'_q S - e'_d C; one convolution per addend.
  void voltage_part(std::size_t t) {
    const std::size_t i = t / 4, k = k_;
    const auto& m = w_.machines[i];
    const auto& tp = w_.trig[i];
    double v = 0.0;
    switch (t % 4) {
      case 0: v = conv_range(m.ep_d.coeffs(), tp.sin_series.coeffs(), k, 0, k + 1); break;
      case 1: v = conv_range(m.ep_q.coeffs(), tp.cos_series.coeffs(), k, 0, k + 1); break;
      case 2: v = conv_range(m.ep_q.coeffs(), tp.sin_series.coeffs(), k, 0, k + 1); break;
      default: v = -conv_range(m.ep_d.coeffs(), tp.cos_series.coeffs(), k, 0, k + 1); break;
    }
    parts_[t] = v;
  }

  void voltage_combine(std::size_t t) {
    const std::size_t i = t / 2;
    auto& a = w_.algebraic[i];
    if (t % 2 == 0)
      a.e_x[k_] = parts_[4 * i] + parts_[4 * i + 1];
    else
      a.e_y[k_] = parts_[4 * i + 2] + parts_[4 * i + 3];
  }

  // I = Y E per order (the network map is linear); each row sum split over two column halves.
  void current_part(std::size_t t) {
    const std::size_t i = t / 4, slot = t % 4, k = k_;
    const std::size_t lo = (slot % 2 == 0) ? 0 : half_;
    const std::size_t hi = (slot % 2 == 0) ? half_ : n_;
    const double* g = &g_[i * n_];
    const double* b = &b_[i * n_];
    double acc = 0.0;
    if (slot < 2) {
      for (std::size_t j = lo; j < hi; ++j) acc += g[j] * w_.algebraic[j].e_x[k] - b[j] * w_.algebraic[j].e_y[k];
    } else {
      for (std::size_t j = lo; j < hi; ++j) acc += g[j] * w_.algebraic[j].e_y[k] + b[j] * w_.algebraic[j].e_x[k];
    }
    parts_[t] = acc;
  }

  void current_combine(std::size_t t) {
    const std::size_t i = t / 2;
    auto& a = w_.algebraic[i];
    if (t % 2 == 0)
      a.i_x[k_] = parts_[4 * i] + parts_[4 * i + 1];
    else
      a.i_y[k_] = parts_[4 * i + 2] + parts_[4 * i + 3];
  }

  // i_d = S i_x - C i_y, i_q = C i_x + S i_y.
  void dq_part(std::size_t t) {
    const std::size_t i = t / 4, k = k_;
    const auto& a = w_.algebraic[i];
    const auto& tp = w_.trig[i];
    double v = 0.0;
    switch (t % 4) {
      case 0: v = conv_range(tp.sin_series.coeffs(), a.i_x.coeffs(), k, 0, k + 1); break;
      case 1: v = -conv_range(tp.cos_series.coeffs(), a.i_y.coeffs(), k, 0, k + 1); break;
      case 2: v = conv_range(tp.cos_series.coeffs(), a.i_x.coeffs(), k, 0, k + 1); break;
      default: v = conv_range(tp.sin_series.coeffs(), a.i_y.coeffs(), k, 0, k + 1); break;
    }
    parts_[t] = v;
  }

  void dq_combine(std::size_t i) {
    const std::size_t k = k_;
    const auto& p = model_.machines[i];
    const auto& m = w_.machines[i];
    auto& a = w_.algebraic[i];
    a.i_d[k] = parts_[4 * i] + parts_[4 * i + 1];
    a.i_q[k] = parts_[4 * i + 2] + parts_[4 * i + 3];
    a.e_d[k] = m.ep_d[k] - p.R_a * a.i_d[k] + p.xp_q * a.i_q[k];
    a.e_q[k] = m.ep_q[k] - p.xp_d * a.i_d[k] - p.R_a * a.i_q[k];
  }

  // P_E = conv(E_d, I_d) + conv(E_q, I_q), each convolution split at the middle index.
  void power_part(std::size_t t) {
    const std::size_t i = t / 4, slot = t % 4, k = k_;
    const auto& a = w_.algebraic[i];
    const std::size_t mid = (k + 1) / 2;
    const std::size_t lo = (slot % 2 == 0) ? 0 : mid;
    const std::size_t hi = (slot % 2 == 0) ? mid : k + 1;
    parts_[t] = slot < 2 ? conv_range(a.e_d.coeffs(), a.i_d.coeffs(), k, lo, hi)
                         : conv_range(a.e_q.coeffs(), a.i_q.coeffs(), k, lo, hi);
  }

  void power_combine(std::size_t i) {
    w_.algebraic[i].P_e[k_] = (parts_[4 * i] + parts_[4 * i + 1]) + (parts_[4 * i + 2] + parts_[4 * i + 3]);
  }

  const SystemModel& model_;
  BuildOptions opts_;
  std::size_t n_;
  std::size_t order_;
  std::size_t half_ = 0;
  std::size_t k_ = 0;
  std::vector<double> g_, b_;
  std::vector<double> parts_;
  WindowSAS w_;
};

struct InlineExec {
  template <class F>
  void operator()(std::size_t n, F&& f) const {
    for (std::size_t t = 0; t < n; ++t) f(t);
  }
};

struct PoolExec {
  WorkerPool& pool;
  template <class F>
  void operator()(std::size_t n, F&& f) const {
    pool.for_each(n, std::forward<F>(f));
  }
};

}  // namespace detail

/// Coefficients Phi(0..K), Psi(0..K) of one window anchored at `initial`.
inline WindowSAS build_window(std::span<const MachineState> initial, const SystemModel& model, Stage stage,
                              std::size_t order, BuildOptions opts = {}) {
  return detail::WindowBuilder(model, stage, initial, order, opts).run(detail::InlineExec{});
}

/// Same coefficients, each row of independent expressions spread over `pool`
/// with a barrier between rows and between orders.
inline WindowSAS parallel_build_window(std::span<const MachineState> initial, const SystemModel& model, Stage stage,
                                       std::size_t order, WorkerPool& pool, BuildOptions opts = {}) {
  return detail::WindowBuilder(model, stage, initial, order, opts).run(detail::PoolExec{pool});
}

inline WindowSAS parallel_build_window(std::span<const MachineState> initial, const SystemModel& model, Stage stage,
                                       std::size_t order, std::size_t workers, BuildOptions opts = {}) {
  WorkerPool pool(workers);
  return parallel_build_window(initial, model, stage, order, pool, opts);
}

inline void evaluate_states(const WindowSAS& w, double t_offset, std::span<MachineState> out) {
  for (std::size_t i = 0; i < w.machines.size(); ++i) {
    const auto& m = w.machines[i];
    out[i] = {idt_eval(m.delta, t_offset), idt_eval(m.omega, t_offset), idt_eval(m.ep_q, t_offset),
              idt_eval(m.ep_d, t_offset)};
  }
}

inline std::vector<MachineState> evaluate_states(const WindowSAS& w, double t_offset) {
  std::vector<MachineState> out(w.machines.size());
  evaluate_states(w, t_offset, out);
  return out;
}

/// States and algebraic variables of the window at an offset from its anchor.
inline std::pair<std::vector<MachineState>, std::vector<AlgebraicState>> evaluate_window(const WindowSAS& w,
                                                                                          double t_offset) {
  auto states = evaluate_states(w, t_offset);
  std::vector<AlgebraicState> alg(w.algebraic.size());
  for (std::size_t i = 0; i < alg.size(); ++i) {
    const auto& a = w.algebraic[i];
    alg[i] = {idt_eval(a.i_d, t_offset), idt_eval(a.i_q, t_offset), idt_eval(a.e_d, t_offset),
              idt_eval(a.e_q, t_offset), idt_eval(a.e_x, t_offset), idt_eval(a.e_y, t_offset),
              idt_eval(a.i_x, t_offset), idt_eval(a.i_y, t_offset), idt_eval(a.P_e, t_offset)};
  }
  return {std::move(states), std::move(alg)};
}

struct SimConfig {
  std::size_t order = 12;
  double window = 0.2;          // s
  double duration = 6.0;        // s
  double sample_step = 0.2;     // s
  double tolerance = 1e-5;      // used by tuning only
  bool parallel = false;
  std::size_t workers = 1;

  void validate() const {
    if (order < 1) throw ValidationError("order must be >= 1");
    if (!(window > 0.0) || !(duration > 0.0) || window > duration * (1.0 + 1e-12))
      throw ValidationError("need 0 < window <= duration");
    if (!(sample_step > 0.0) || sample_step > window * (1.0 + 1e-12))
      throw ValidationError("need 0 < sample_step <= window");
  }
};

inline constexpr double kTimeEps = 1e-9;

/// Consecutive window boundaries over [0, duration]: the t_w grid, the end
/// time, and any event instants inside the horizon.
inline std::vector<double> window_boundaries(double duration, double window, const std::optional<FaultEvent>& event) {
  std::vector<double> b;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * window;
    if (t >= duration - kTimeEps) break;
    b.push_back(t);
  }
  b.push_back(duration);
  if (event)
    for (double t : {event->t_fault, event->t_clear})
      if (t > kTimeEps && t < duration - kTimeEps) b.push_back(t);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double t : b)
    if (out.empty() || t - out.back() > kTimeEps) out.push_back(t);
  return out;
}

/// Called for every window built by simulate().
using WindowObserver = std::function<void(std::size_t index, const WindowSAS&)>;

/// Multi-window SAS simulation. Each window starts from the previous window's
/// evaluated end state; topology switches at event instants.
inline Trajectory simulate(const SystemModel& model, std::span<const MachineState> initial, const SimConfig& cfg,
                           const WindowObserver& observer = {}) {
  cfg.validate();
  if (initial.size() != model.size()) throw ValidationError("simulate: initial state size mismatch");
  const auto bounds = window_boundaries(cfg.duration, cfg.window, model.network.event);
  std::unique_ptr<WorkerPool> pool;
  if (cfg.parallel) pool = std::make_unique<WorkerPool>(cfg.workers);

  Trajectory tr;
  tr.machines = model.size();
  const auto t_start = std::chrono::steady_clock::now();
  const auto n_samples = static_cast<std::size_t>(std::floor(cfg.duration / cfg.sample_step + kTimeEps)) + 1;
  std::vector<MachineState> state(initial.begin(), initial.end());
  std::size_t j = 0;
  const BuildOptions opts{cfg.window, 1e6};
  for (std::size_t wi = 0; wi + 1 < bounds.size(); ++wi) {
    const double a = bounds[wi], b = bounds[wi + 1];
    const bool last = (wi + 2 == bounds.size());
    const Stage stage = model.network.stage_at(0.5 * (a + b));
    const auto w0 = std::chrono::steady_clock::now();
    WindowSAS w;
    try {
      w = pool ? parallel_build_window(state, model, stage, cfg.order, *pool, opts)
               : build_window(state, model, stage, cfg.order, opts);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (window " + std::to_string(wi) + ")", a, wi);
    }
    w.anchor_time = a;
    for (; j < n_samples; ++j) {
      const double t = static_cast<double>(j) * cfg.sample_step;
      if (!last && t >= b - kTimeEps) break;
      std::vector<MachineState> s(tr.machines);
      std::vector<double> pe(tr.machines);
      evaluate_states(w, t - a, s);
      for (std::size_t i = 0; i < tr.machines; ++i) pe[i] = idt_eval(w.algebraic[i].P_e, t - a);
      tr.push(t, std::move(s), std::move(pe));
    }
    evaluate_states(w, b - a, state);
    for (const auto& s : state)
      if (!std::isfinite(s.delta) || !std::isfinite(s.omega) || !std::isfinite(s.ep_q) || !std::isfinite(s.ep_d))
        throw DivergenceError("simulate: non-finite state at end of window " + std::to_string(wi), a, wi);
    tr.window_starts.push_back(a);
    tr.window_wall_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - w0).count());
    if (observer) observer(wi, w);
  }
  tr.steps = tr.window_starts.size();
  tr.total_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return tr;
}

}  // namespace dtmsas
