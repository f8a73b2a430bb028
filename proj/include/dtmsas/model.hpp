#pragma once

// Multi-machine two-axis generator model on a Kron-reduced network.
//
// Frame convention: the internal voltage phasor is
//   e_x + j e_y = (e'_d + j e'_q) * exp(j (delta - pi/2)),
// i.e. e_x = e'_d sin(delta) + e'_q cos(delta), e_y = e'_q sin(delta) - e'_d cos(delta),
// and the stator currents come from the inverse rotation. The reduced matrix
// maps internal voltages to injected currents, I = Y E.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dtmsas/errors.hpp"

namespace dtmsas {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kDefaultOmegaS = 2.0 * std::numbers::pi * 60.0;

struct MachineParams {
  double H = 1.0;      // inertia, s
  double D = 0.0;      // damping, p.u. power per p.u. speed
  double x_d = 1.0;
  double x_q = 1.0;
  double xp_d = 0.3;
  double xp_q = 0.3;
  double Tp_d0 = 5.0;  // s
  double Tp_q0 = 1.0;  // s
  double R_a = 0.0;
  double P_m = 0.0;    // constant mechanical power
  double e_fd = 0.0;   // constant field voltage

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(H) && finite(D) && finite(x_d) && finite(x_q) && finite(xp_d) && finite(xp_q) &&
          finite(Tp_d0) && finite(Tp_q0) && finite(R_a) && finite(P_m) && finite(e_fd)))
      throw ValidationError("machine parameters must be finite");
    if (!(H > 0.0)) throw ValidationError("machine H must be > 0");
    if (!(Tp_d0 > 0.0) || !(Tp_q0 > 0.0)) throw ValidationError("machine Tp_d0, Tp_q0 must be > 0");
    if (!(xp_d > 0.0) || !(xp_q > 0.0)) throw ValidationError("machine xp_d, xp_q must be > 0");
    if (x_d < xp_d || x_q < xp_q) throw ValidationError("machine requires x_d >= xp_d, x_q >= xp_q");
    if (D < 0.0) throw ValidationError("machine D must be >= 0");
  }
};

struct MachineState {
  double delta = 0.0;  // rad
  double omega = 0.0;  // p.u. speed deviation; d(delta)/dt = omega_s * omega
  double ep_q = 0.0;
  double ep_d = 0.0;

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

struct AlgebraicState {
  double i_d = 0.0, i_q = 0.0;
  double e_d = 0.0, e_q = 0.0;
  double e_x = 0.0, e_y = 0.0;
  double i_x = 0.0, i_y = 0.0;
  double P_e = 0.0;
};

enum class Stage { pre_fault, fault_on, post_fault };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::pre_fault: return "pre_fault";
    case Stage::fault_on: return "fault_on";
    case Stage::post_fault: return "post_fault";
  }
  return "?";
}

struct FaultEvent {
  double t_fault = 0.0;
  double t_clear = 0.0;
};

struct StagedNetwork {
  ComplexMatrix y_pre;
  ComplexMatrix y_fault;
  ComplexMatrix y_post;
  std::optional<FaultEvent> event;

  const ComplexMatrix& matrix(Stage s) const {
    switch (s) {
      case Stage::pre_fault: return y_pre;
      case Stage::fault_on: return y_fault;
      case Stage::post_fault: return y_post;
    }
    return y_pre;
  }

  /// Topology in force at time t; event instants belong to the later stage.
  Stage stage_at(double t) const {
    if (!event) return Stage::pre_fault;
    if (t < event->t_fault) return Stage::pre_fault;
    if (t < event->t_clear) return Stage::fault_on;
    return Stage::post_fault;
  }
};

struct SystemModel {
  std::vector<MachineParams> machines;
  double omega_s = kDefaultOmegaS;
  StagedNetwork network;

  std::size_t size() const noexcept { return machines.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(machines.size());
    if (n < 1) throw ValidationError("model needs at least one machine");
    if (!(omega_s > 0.0)) throw ValidationError("omega_s must be > 0");
    for (const auto& m : machines) m.validate();
    for (Stage s : {Stage::pre_fault, Stage::fault_on, Stage::post_fault}) {
      const auto& y = network.matrix(s);
      if (y.rows() != n || y.cols() != n)
        throw ValidationError(std::string("stage matrix ") + to_string(s) + " has wrong dimension");
      if (!y.allFinite()) throw ValidationError(std::string("stage matrix ") + to_string(s) + " not finite");
      const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
      if ((y - y.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw ValidationError(std::string("stage matrix ") + to_string(s) + " is not symmetric");
    }
    if (network.event) {
      const auto& e = *network.event;
      if (!(e.t_fault >= 0.0) || !(e.t_fault < e.t_clear))
        throw ValidationError("event requires 0 <= t_fault < t_clear");
    }
  }
};

/// Schur complement Y_rr - Y_re Y_ee^{-1} Y_er eliminating every index not in
/// `retained`. The result is ordered as `retained`.
inline ComplexMatrix kron_reduce(const ComplexMatrix& y_bus, std::span<const std::size_t> retained) {
  const auto m = static_cast<std::size_t>(y_bus.rows());
  if (y_bus.cols() != y_bus.rows()) throw ValidationError("kron_reduce: matrix not square");
  std::vector<char> keep(m, 0);
  for (auto r : retained) {
    if (r >= m) throw ValidationError("kron_reduce: retained index out of range");
    if (keep[r]) throw ValidationError("kron_reduce: duplicate retained index");
    keep[r] = 1;
  }
  std::vector<std::size_t> elim;
  for (std::size_t i = 0; i < m; ++i)
    if (!keep[i]) elim.push_back(i);

  const auto ne = static_cast<Eigen::Index>(elim.size());
  auto pick = [&](std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    ComplexMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            y_bus(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
  };
  ComplexMatrix y_rr = pick(retained, retained);
  if (ne == 0) return y_rr;

  const ComplexMatrix y_ee = pick(elim, elim);
  const ComplexMatrix y_er = pick(elim, retained);
  const ComplexMatrix y_re = pick(retained, elim);
  Eigen::PartialPivLU<ComplexMatrix> lu(y_ee);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15))
    throw SingularNetworkError("kron_reduce: eliminated block is singular (rcond " +
                                   std::to_string(rcond) + ")",
                               rcond);
  return y_rr - y_re * lu.solve(y_er);
}

struct SteadyState {
  MachineState state;
  MachineParams params;  // input params with P_m and e_fd filled in
};

/// Two-axis equilibrium from a power-flow solution at the machine terminal.
inline SteadyState init_steady_state(Complex terminal_voltage, Complex injected_power,
                                     const MachineParams& params) {
  if (!(std::abs(terminal_voltage) > 0.0)) throw ValidationError("init_steady_state: zero terminal voltage");
  const Complex current = std::conj(injected_power / terminal_voltage);
  const Complex e_q_phasor = terminal_voltage + Complex(params.R_a, params.x_q) * current;
  const double delta = std::arg(e_q_phasor);
  // Network frame -> dq frame: multiply by exp(-j (delta - pi/2)).
  const Complex to_dq = std::polar(1.0, -(delta - std::numbers::pi / 2.0));
  const Complex idq = current * to_dq;
  const Complex vdq = terminal_voltage * to_dq;
  const double i_d = idq.real(), i_q = idq.imag();
  const double v_d = vdq.real(), v_q = vdq.imag();

  SteadyState out;
  out.params = params;
  out.state.delta = delta;
  out.state.omega = 0.0;
  out.state.ep_q = v_q + params.R_a * i_q + params.xp_d * i_d;
  out.state.ep_d = v_d + params.R_a * i_d - params.xp_q * i_q;
  out.params.e_fd = out.state.ep_q + (params.x_d - params.xp_d) * i_d;
  out.params.P_m = v_d * i_d + v_q * i_q;
  return out;
}

/// Internal voltage phasor e_x + j e_y of one machine.
inline Complex internal_voltage(const MachineState& s) {
  const double sn = std::sin(s.delta), cs = std::cos(s.delta);
  return {s.ep_d * sn + s.ep_q * cs, s.ep_q * sn - s.ep_d * cs};
}

/// Point-wise algebraic variables for all machines. `out` must have states.size() entries.
inline void algebraic_eval(std::span<const MachineState> states, const ComplexMatrix& y,
                           std::span<const MachineParams> params, std::span<AlgebraicState> out) {
  const auto n = states.size();
  if (params.size() != n || out.size() != n || static_cast<std::size_t>(y.rows()) != n ||
      static_cast<std::size_t>(y.cols()) != n)
    throw ValidationError("algebraic_eval: dimension mismatch");
  thread_local std::vector<double> sn, cs;
  thread_local std::vector<Complex> e;
  sn.resize(n);
  cs.resize(n);
  e.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sn[i] = std::sin(states[i].delta);
    cs[i] = std::cos(states[i].delta);
    e[i] = {states[i].ep_d * sn[i] + states[i].ep_q * cs[i],
            states[i].ep_q * sn[i] - states[i].ep_d * cs[i]};
    out[i].e_x = e[i].real();
    out[i].e_y = e[i].imag();
  }
  for (std::size_t i = 0; i < n; ++i) {
    Complex cur{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      cur += y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * e[j];
    auto& a = out[i];
    const auto& p = params[i];
    a.i_x = cur.real();
    a.i_y = cur.imag();
    a.i_d = sn[i] * a.i_x - cs[i] * a.i_y;
    a.i_q = cs[i] * a.i_x + sn[i] * a.i_y;
    a.e_d = states[i].ep_d - p.R_a * a.i_d + p.xp_q * a.i_q;
    a.e_q = states[i].ep_q - p.xp_d * a.i_d - p.R_a * a.i_q;
    a.P_e = a.e_d * a.i_d + a.e_q * a.i_q;
  }
}

inline std::vector<AlgebraicState> algebraic_eval(std::span<const MachineState> states,
                                                  const ComplexMatrix& y,
                                                  std::span<const MachineParams> params) {
  std::vector<AlgebraicState> out(states.size());
  algebraic_eval(states, y, params, out);
  return out;
}

/// Time derivatives of the two-axis swing model given the algebraic variables.
inline MachineState machine_rates(const MachineState& s, const AlgebraicState& a,
                                  const MachineParams& p, double omega_s) {
  MachineState r;
  r.delta = omega_s * s.omega;
  r.omega = (p.P_m - a.P_e - p.D * s.omega) / (2.0 * p.H);
  r.ep_q = (p.e_fd - s.ep_q - (p.x_d - p.xp_d) * a.i_d) / p.Tp_d0;
  r.ep_d = (-s.ep_d + (p.x_q - p.xp_q) * a.i_q) / p.Tp_q0;
  return r;
}

/// Right-hand side of the full model in a given network stage.
inline std::vector<MachineState> model_rates(const SystemModel& model, Stage stage,
                                             std::span<const MachineState> states) {
  const auto alg = algebraic_eval(states, model.network.matrix(stage), model.machines);
  std::vector<MachineState> r(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    r[i] = machine_rates(states[i], alg[i], model.machines[i], model.omega_s);
  return r;
}

}  // namespace dtmsas
