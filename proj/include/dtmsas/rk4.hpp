#pragma once

// Fixed-step classical RK4 over the same two-axis model; the network algebra
// is re-solved at each of the four stage evaluations.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"
#include "dtmsas/trajectory.hpp"

namespace dtmsas {

struct RK4Config {
  double step = 1.0 / 1200.0;
  double duration = 6.0;
  std::size_t record_every = 1;  // emit every n-th step (the final step is always emitted)

  void validate() const {
    if (!(step > 0.0) || !(duration > 0.0)) throw ValidationError("rk4: need step > 0 and duration > 0");
    if (record_every == 0) throw ValidationError("rk4: record_every must be >= 1");
  }
};

/// Scratch buffers so the hot loop does not allocate.
class RK4Stepper {
 public:
  explicit RK4Stepper(const SystemModel& model) : model_(model) {
    const auto n = model.size();
    alg_.resize(n);
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->resize(n);
  }

  void step(std::span<MachineState> s, double h, Stage stage) {
    const auto& y = model_.network.matrix(stage);
    rates(s, y, k1_);
    shift(s, k1_, 0.5 * h);
    rates(tmp_, y, k2_);
    shift(s, k2_, 0.5 * h);
    rates(tmp_, y, k3_);
    shift(s, k3_, h);
    rates(tmp_, y, k4_);
    const double c = h / 6.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i].delta += c * (k1_[i].delta + 2.0 * k2_[i].delta + 2.0 * k3_[i].delta + k4_[i].delta);
      s[i].omega += c * (k1_[i].omega + 2.0 * k2_[i].omega + 2.0 * k3_[i].omega + k4_[i].omega);
      s[i].ep_q += c * (k1_[i].ep_q + 2.0 * k2_[i].ep_q + 2.0 * k3_[i].ep_q + k4_[i].ep_q);
      s[i].ep_d += c * (k1_[i].ep_d + 2.0 * k2_[i].ep_d + 2.0 * k3_[i].ep_d + k4_[i].ep_d);
    }
  }

  /// Electrical power of every machine at `s` (for trajectory output).
  void power(std::span<const MachineState> s, Stage stage, std::span<double> out) {
    algebraic_eval(s, model_.network.matrix(stage), model_.machines, alg_);
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = alg_[i].P_e;
  }

 private:
  void rates(std::span<const MachineState> s, const ComplexMatrix& y, std::vector<MachineState>& k) {
    algebraic_eval(s, y, model_.machines, alg_);
    for (std::size_t i = 0; i < s.size(); ++i) k[i] = machine_rates(s[i], alg_[i], model_.machines[i], model_.omega_s);
  }

  void shift(std::span<const MachineState> s, const std::vector<MachineState>& k, double c) {
    for (std::size_t i = 0; i < s.size(); ++i)
      tmp_[i] = {s[i].delta + c * k[i].delta, s[i].omega + c * k[i].omega, s[i].ep_q + c * k[i].ep_q,
                 s[i].ep_d + c * k[i].ep_d};
  }

  const SystemModel& model_;
  std::vector<AlgebraicState> alg_;
  std::vector<MachineState> k1_, k2_, k3_, k4_, tmp_;
};

inline std::vector<MachineState> rk4_step(std::span<const MachineState> state, double h, const SystemModel& model,
                                          Stage stage) {
  std::vector<MachineState> s(state.begin(), state.end());
  RK4Stepper(model).step(s, h, stage);
  for (const auto& m : s)
    if (!std::isfinite(m.delta) || !std::isfinite(m.omega) || !std::isfinite(m.ep_q) || !std::isfinite(m.ep_d))
      throw DivergenceError("rk4_step: non-finite state", 0.0, 0);
  return s;
}

/// Stage in force during step j (covering [j h, (j+1) h]); event instants are
/// snapped to the nearest grid point.
inline Stage rk4_stage(const StagedNetwork& net, std::size_t j, double h) {
  if (!net.event) return Stage::pre_fault;
  const auto jf = static_cast<std::size_t>(std::llround(net.event->t_fault / h));
  const auto jc = static_cast<std::size_t>(std::llround(net.event->t_clear / h));
  if (j < jf) return Stage::pre_fault;
  if (j < jc) return Stage::fault_on;
  return Stage::post_fault;
}

inline Trajectory rk4_simulate(const SystemModel& model, std::span<const MachineState> initial, const RK4Config& cfg) {
  cfg.validate();
  if (initial.size() != model.size()) throw ValidationError("rk4_simulate: initial state size mismatch");
  const auto n = model.size();
  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.step));
  if (steps == 0) throw ValidationError("rk4_simulate: duration shorter than one step");
  Trajectory tr;
  tr.machines = n;
  RK4Stepper stepper(model);
  std::vector<MachineState> s(initial.begin(), initial.end());
  std::vector<double> pe(n);
  const auto t0 = std::chrono::steady_clock::now();
  auto emit = [&](std::size_t j, Stage stage) {
    stepper.power(s, stage, pe);
    tr.push(static_cast<double>(j) * cfg.step, s, pe);
  };
  emit(0, rk4_stage(model.network, 0, cfg.step));
  for (std::size_t j = 0; j < steps; ++j) {
    stepper.step(s, cfg.step, rk4_stage(model.network, j, cfg.step));
    for (const auto& m : s)
      if (!std::isfinite(m.delta) || !std::isfinite(m.omega) || !std::isfinite(m.ep_q) || !std::isfinite(m.ep_d))
        throw DivergenceError("rk4: state diverged at step " + std::to_string(j + 1),
                              static_cast<double>(j) * cfg.step, j + 1);
    if ((j + 1) % cfg.record_every == 0 || j + 1 == steps) emit(j + 1, rk4_stage(model.network, j + 1, cfg.step));
  }
  tr.steps = steps;
  tr.total_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

}  // namespace dtmsas
