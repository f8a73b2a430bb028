#pragma once

#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"

namespace dtmsas {

/// Sampled simulation output. states[j][i] is machine i at times[j].
struct Trajectory {
  std::size_t machines = 0;
  std::vector<double> times;
  std::vector<std::vector<MachineState>> states;
  std::vector<std::vector<double>> p_e;

  // Integrator bookkeeping (not part of the CSV).
  std::vector<double> window_starts;   // SAS window anchors
  std::vector<double> window_wall_ms;  // per-window build+evaluate wall time
  std::size_t steps = 0;               // windows (SAS) or steps (RK4)
  double total_wall_ms = 0.0;

  std::size_t size() const noexcept { return times.size(); }

  void push(double t, std::vector<MachineState> s, std::vector<double> pe) {
    times.push_back(t);
    states.push_back(std::move(s));
    p_e.push_back(std::move(pe));
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV with header t, delta_i, omega_i, epq_i, epd_i, pe_i (i from 1).
/// Values are printed with 17 significant digits so re-reading is exact.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << "t";
  for (std::size_t i = 1; i <= tr.machines; ++i)
    out << ",delta_" << i << ",omega_" << i << ",epq_" << i << ",epd_" << i << ",pe_" << i;
  out << '\n';
  for (std::size_t j = 0; j < tr.size(); ++j) {
    out << format_double(tr.times[j]);
    for (std::size_t i = 0; i < tr.machines; ++i) {
      const auto& s = tr.states[j][i];
      out << ',' << format_double(s.delta) << ',' << format_double(s.omega) << ','
          << format_double(s.ep_q) << ',' << format_double(s.ep_d) << ','
          << format_double(tr.p_e[j][i]);
    }
    out << '\n';
  }
}

inline Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory tr;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trajectory CSV: empty input");
  std::size_t cols = 1;
  for (char c : line) cols += (c == ',');
  if (cols < 1 || (cols - 1) % 5 != 0) throw ValidationError("trajectory CSV: unexpected header");
  tr.machines = (cols - 1) / 5;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> v;
    v.reserve(cols);
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto next = line.find(',', pos);
      const auto cell = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("trajectory CSV: bad number on row " + std::to_string(row));
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (v.size() != cols) throw ValidationError("trajectory CSV: wrong column count on row " + std::to_string(row));
    std::vector<MachineState> s(tr.machines);
    std::vector<double> pe(tr.machines);
    for (std::size_t i = 0; i < tr.machines; ++i) {
      const double* c = &v[1 + 5 * i];
      s[i] = {c[0], c[1], c[2], c[3]};
      pe[i] = c[4];
    }
    tr.push(v[0], std::move(s), std::move(pe));
  }
  return tr;
}

}  // namespace dtmsas
