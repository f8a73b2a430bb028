#pragma once

#include <complex>
#include <string>
#include <vector>

#include "dtmsas/model.hpp"
#include "dtmsas/scenario.hpp"

namespace testsupport {

inline std::string data_file(const std::string& name) { return std::string(DTMSAS_DATA_DIR) + "/" + name; }

inline const dtmsas::Scenario& ieee39() {
  static const dtmsas::Scenario sc = dtmsas::load_scenario(data_file("ieee39.json"));
  return sc;
}

/// Coefficients of one window computed with complex series arithmetic:
/// E = (Ep_d + j Ep_q)(S - jC), I = Y E, I_dq = I (S + jC),
/// P_E = Re(E_dq conj-free product) summed per order. Returns phi[i][v][k]
/// with v = delta, omega, ep_q, ep_d, and pe[i][k].
struct NaiveWindow {
  std::vector<std::vector<std::vector<double>>> phi;
  std::vector<std::vector<double>> pe, sin_c, cos_c;
};

inline NaiveWindow naive_build(const dtmsas::SystemModel& model, dtmsas::Stage stage,
                               const std::vector<dtmsas::MachineState>& init, std::size_t K) {
  using C = std::complex<double>;
  const auto n = model.size();
  const auto& Y = model.network.matrix(stage);
  NaiveWindow w;
  w.phi.assign(n, std::vector<std::vector<double>>(4, std::vector<double>(K + 1, 0.0)));
  w.pe.assign(n, std::vector<double>(K + 1, 0.0));
  w.sin_c.assign(n, std::vector<double>(K + 1, 0.0));
  w.cos_c.assign(n, std::vector<double>(K + 1, 0.0));
  std::vector<std::vector<C>> E(n, std::vector<C>(K + 1)), I(n, std::vector<C>(K + 1)),
      Idq(n, std::vector<C>(K + 1)), Edq(n, std::vector<C>(K + 1));
  for (std::size_t i = 0; i < n; ++i) {
    w.phi[i][0][0] = init[i].delta;
    w.phi[i][1][0] = init[i].omega;
    w.phi[i][2][0] = init[i].ep_q;
    w.phi[i][3][0] = init[i].ep_d;
    w.sin_c[i][0] = std::sin(init[i].delta);
    w.cos_c[i][0] = std::cos(init[i].delta);
  }
  for (std::size_t k = 0;; ++k) {
    if (k > 0)
      for (std::size_t i = 0; i < n; ++i) {
        // d/dt sin = cos delta', d/dt cos = -sin delta' on the derivative series
        C acc{0.0, 0.0};
        for (std::size_t m = 1; m <= k; ++m) {
          const double dm = static_cast<double>(m) * w.phi[i][0][m];
          acc += C(w.cos_c[i][k - m], -w.sin_c[i][k - m]) * dm;
        }
        w.sin_c[i][k] = acc.real() / static_cast<double>(k);
        w.cos_c[i][k] = acc.imag() / static_cast<double>(k);
      }
    for (std::size_t i = 0; i < n; ++i) {
      C acc{0.0, 0.0};
      for (std::size_t m = 0; m <= k; ++m)
        acc += C(w.phi[i][3][m], w.phi[i][2][m]) * C(w.sin_c[i][k - m], -w.cos_c[i][k - m]);
      E[i][k] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      C acc{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) acc += Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * E[j][k];
      I[i][k] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      C acc{0.0, 0.0};
      for (std::size_t m = 0; m <= k; ++m) acc += I[i][m] * C(w.sin_c[i][k - m], w.cos_c[i][k - m]);
      Idq[i][k] = acc;
      const auto& p = model.machines[i];
      Edq[i][k] = C(w.phi[i][3][k], w.phi[i][2][k]) - C(p.R_a, 0.0) * acc +
                  C(p.xp_q * acc.imag(), -p.xp_d * acc.real());
      double pk = 0.0;
      for (std::size_t m = 0; m <= k; ++m) pk += (Edq[i][m] * std::conj(Idq[i][k - m]) + std::conj(Edq[i][m]) * Idq[i][k - m]).real() / 2.0;
      w.pe[i][k] = pk;
    }
    if (k == K) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = model.machines[i];
      const double kp = static_cast<double>(k + 1);
      w.phi[i][0][k + 1] = model.omega_s * w.phi[i][1][k] / kp;
      w.phi[i][1][k + 1] = ((k == 0 ? p.P_m : 0.0) - w.pe[i][k] - p.D * w.phi[i][1][k]) / (2.0 * p.H * kp);
      w.phi[i][2][k + 1] =
          ((k == 0 ? p.e_fd : 0.0) - w.phi[i][2][k] - (p.x_d - p.xp_d) * Idq[i][k].real()) / (p.Tp_d0 * kp);
      w.phi[i][3][k + 1] = (-w.phi[i][3][k] + (p.x_q - p.xp_q) * Idq[i][k].imag()) / (p.Tp_q0 * kp);
    }
  }
  return w;
}

}  // namespace testsupport
