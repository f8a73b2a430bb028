#pragma once

// Scenario documents: bus/branch networks with a solved power flow, or
// explicit reduced stage matrices with machine states, plus the bundled
// single-machine infinite-bus case.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtmsas/errors.hpp"
#include "dtmsas/model.hpp"
#include "dtmsas/smib.hpp"

namespace dtmsas {

using json = nlohmann::json;

struct BusData {
  int id = 0;
  double vm = 1.0;
  double va_deg = 0.0;
  double p_load = 0.0;
  double q_load = 0.0;
  double g_shunt = 0.0;
  double b_shunt = 0.0;

  Complex voltage() const { return std::polar(vm, va_deg * std::numbers::pi / 180.0); }
};

struct BranchData {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;
  double tap = 0.0;  // 0 means a line (ratio 1)
  double shift_deg = 0.0;
};

struct FullNetwork {
  std::vector<BusData> buses;
  std::vector<BranchData> branches;
  std::vector<int> machine_bus;          // bus id per machine
  std::vector<Complex> machine_power;    // P + jQ injected per machine
  std::optional<int> faulted_bus;
  std::optional<std::pair<int, int>> tripped_branch;
  double fault_shunt = 1e7;

  std::size_t bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return i;
    throw ValidationError("unknown bus id " + std::to_string(id));
  }
};

struct Scenario {
  std::string name;
  SystemModel model;
  std::vector<MachineState> initial;
  std::optional<FullNetwork> full;  // present when built from bus-level data
};

/// Bus admittance matrix (pi branch model, off-nominal taps), loads folded in
/// as constant impedances at their power-flow voltage.
inline ComplexMatrix make_ybus(const FullNetwork& net, bool include_loads = true,
                               std::optional<std::pair<int, int>> skip_branch = std::nullopt) {
  const auto nb = static_cast<Eigen::Index>(net.buses.size());
  ComplexMatrix y = ComplexMatrix::Zero(nb, nb);
  bool skipped = false;
  for (const auto& br : net.branches) {
    if (skip_branch && ((br.from == skip_branch->first && br.to == skip_branch->second) ||
                        (br.from == skip_branch->second && br.to == skip_branch->first))) {
      skipped = true;
      continue;
    }
    const auto f = static_cast<Eigen::Index>(net.bus_index(br.from));
    const auto t = static_cast<Eigen::Index>(net.bus_index(br.to));
    if (br.r == 0.0 && br.x == 0.0) throw ValidationError("branch with zero impedance");
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const double ratio = br.tap == 0.0 ? 1.0 : br.tap;
    const Complex tap = std::polar(ratio, br.shift_deg * std::numbers::pi / 180.0);
    const Complex ytt = ys + Complex(0.0, br.b / 2.0);
    y(f, f) += ytt / (tap * std::conj(tap));
    y(t, t) += ytt;
    y(f, t) += -ys / std::conj(tap);
    y(t, f) += -ys / tap;
  }
  if (skip_branch && !skipped)
    throw ValidationError("tripped branch " + std::to_string(skip_branch->first) + "-" +
                          std::to_string(skip_branch->second) + " not found");
  for (Eigen::Index i = 0; i < nb; ++i) {
    const auto& bus = net.buses[static_cast<std::size_t>(i)];
    y(i, i) += Complex(bus.g_shunt, bus.b_shunt);
    if (include_loads) {
      const double v2 = bus.vm * bus.vm;
      if (!(v2 > 0.0)) throw ValidationError("bus voltage magnitude must be > 0");
      y(i, i) += Complex(bus.p_load, -bus.q_load) / v2;
    }
  }
  return y;
}

/// Bus matrix extended with one internal node per machine (appended after the
/// buses) behind R_a + j xp_d.
inline ComplexMatrix augment_with_machines(const ComplexMatrix& ybus, const FullNetwork& net,
                                           std::span<const MachineParams> params) {
  const auto nb = ybus.rows();
  const auto ng = static_cast<Eigen::Index>(params.size());
  ComplexMatrix y = ComplexMatrix::Zero(nb + ng, nb + ng);
  y.topLeftCorner(nb, nb) = ybus;
  for (Eigen::Index g = 0; g < ng; ++g) {
    const auto& p = params[static_cast<std::size_t>(g)];
    const auto b = static_cast<Eigen::Index>(net.bus_index(net.machine_bus[static_cast<std::size_t>(g)]));
    const Complex yg = 1.0 / Complex(p.R_a, p.xp_d);
    y(nb + g, nb + g) += yg;
    y(b, b) += yg;
    y(nb + g, b) -= yg;
    y(b, nb + g) -= yg;
  }
  return y;
}

inline ComplexMatrix reduce_to_internal_nodes(const ComplexMatrix& augmented, std::size_t n_buses,
                                              std::size_t n_machines) {
  std::vector<std::size_t> keep(n_machines);
  for (std::size_t g = 0; g < n_machines; ++g) keep[g] = n_buses + g;
  return kron_reduce(augmented, keep);
}

/// Pre-fault, fault-on (bolted shunt at the faulted bus) and post-fault
/// (tripped branch removed) reduced matrices.
inline StagedNetwork build_staged_network(const FullNetwork& net, std::span<const MachineParams> params,
                                          std::optional<FaultEvent> event) {
  const auto nb = net.buses.size();
  const auto ng = params.size();
  StagedNetwork out;
  out.event = event;
  const ComplexMatrix ybus = make_ybus(net);
  out.y_pre = reduce_to_internal_nodes(augment_with_machines(ybus, net, params), nb, ng);
  if (!event) {
    out.y_fault = out.y_pre;
    out.y_post = out.y_pre;
    return out;
  }
  ComplexMatrix yf = ybus;
  if (net.faulted_bus) {
    const auto fb = static_cast<Eigen::Index>(net.bus_index(*net.faulted_bus));
    yf(fb, fb) += net.fault_shunt;
  }
  out.y_fault = reduce_to_internal_nodes(augment_with_machines(yf, net, params), nb, ng);
  const ComplexMatrix ypost = make_ybus(net, true, net.tripped_branch);
  out.y_post = reduce_to_internal_nodes(augment_with_machines(ypost, net, params), nb, ng);
  return out;
}

namespace detail {

inline double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ValidationError(std::string("missing or non-numeric field '") + key + "'");
  return j.at(key).get<double>();
}

inline double get_number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ValidationError(std::string("non-numeric field '") + key + "'");
  return j.at(key).get<double>();
}

inline MachineParams parse_machine(const json& j, bool need_operating_point) {
  MachineParams p;
  p.H = get_number(j, "H");
  p.D = get_number_or(j, "D", 0.0);
  p.x_d = get_number(j, "x_d");
  p.x_q = get_number(j, "x_q");
  p.xp_d = get_number(j, "xp_d");
  p.xp_q = get_number(j, "xp_q");
  p.Tp_d0 = get_number(j, "Tp_d0");
  p.Tp_q0 = get_number(j, "Tp_q0");
  p.R_a = get_number_or(j, "R_a", 0.0);
  if (need_operating_point) {
    p.P_m = get_number(j, "P_m");
    p.e_fd = get_number(j, "e_fd");
  }
  return p;
}

inline ComplexMatrix parse_matrix(const json& j, std::size_t n, const char* what) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw ValidationError(std::string(what) + ": expected {\"re\": [[...]], \"im\": [[...]]}");
  ComplexMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || re.size() != n || im.size() != n)
    throw ValidationError(std::string(what) + ": dimension mismatch");
  for (std::size_t r = 0; r < n; ++r) {
    if (!re[r].is_array() || !im[r].is_array() || re[r].size() != n || im[r].size() != n)
      throw ValidationError(std::string(what) + ": dimension mismatch");
    for (std::size_t c = 0; c < n; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = {re[r][c].get<double>(),
                                                                       im[r][c].get<double>()};
  }
  return m;
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ii = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return {{"re", std::move(re)}, {"im", std::move(im)}};
}

}  // namespace detail

inline Scenario parse_scenario(const json& doc) {
  try {
    Scenario sc;
    sc.name = doc.value("name", std::string("scenario"));
    const double f0 = detail::get_number_or(doc, "base_frequency", 60.0);
    if (!(f0 > 0.0)) throw ValidationError("base_frequency must be > 0");
    sc.model.omega_s = 2.0 * std::numbers::pi * f0;

    std::optional<FaultEvent> event;
    std::optional<int> faulted_bus;
    std::optional<std::pair<int, int>> tripped;
    if (doc.contains("event") && !doc.at("event").is_null()) {
      const auto& ev = doc.at("event");
      event = FaultEvent{detail::get_number(ev, "t_fault"), detail::get_number(ev, "t_clear")};
      if (ev.contains("faulted_bus") && !ev.at("faulted_bus").is_null())
        faulted_bus = ev.at("faulted_bus").get<int>();
      if (ev.contains("tripped_branch") && !ev.at("tripped_branch").is_null()) {
        const auto& tb = ev.at("tripped_branch");
        if (!tb.is_array() || tb.size() != 2) throw ValidationError("tripped_branch must be [from, to]");
        tripped = std::make_pair(tb[0].get<int>(), tb[1].get<int>());
      }
    }

    if (!doc.contains("machines") || !doc.at("machines").is_array() || doc.at("machines").empty())
      throw ValidationError("scenario needs a non-empty 'machines' array");
    const auto& mj = doc.at("machines");
    const std::size_t n = mj.size();

    if (doc.contains("network")) {
      FullNetwork net;
      const auto& nj = doc.at("network");
      for (const auto& b : nj.at("buses")) {
        BusData bd;
        bd.id = b.at("id").get<int>();
        bd.vm = detail::get_number(b, "vm");
        bd.va_deg = detail::get_number_or(b, "va_deg", 0.0);
        bd.p_load = detail::get_number_or(b, "p_load", 0.0);
        bd.q_load = detail::get_number_or(b, "q_load", 0.0);
        bd.g_shunt = detail::get_number_or(b, "g_shunt", 0.0);
        bd.b_shunt = detail::get_number_or(b, "b_shunt", 0.0);
        net.buses.push_back(bd);
      }
      for (const auto& b : nj.at("branches")) {
        BranchData br;
        br.from = b.at("from").get<int>();
        br.to = b.at("to").get<int>();
        br.r = detail::get_number_or(b, "r", 0.0);
        br.x = detail::get_number_or(b, "x", 0.0);
        br.b = detail::get_number_or(b, "b", 0.0);
        br.tap = detail::get_number_or(b, "tap", 0.0);
        br.shift_deg = detail::get_number_or(b, "shift_deg", 0.0);
        net.branches.push_back(br);
      }
      net.faulted_bus = faulted_bus;
      net.tripped_branch = tripped;
      net.fault_shunt = detail::get_number_or(doc, "fault_shunt", 1e7);
      for (const auto& m : mj) {
        MachineParams p = detail::parse_machine(m, false);
        p.validate();
        const int bus = m.at("bus").get<int>();
        const Complex s{detail::get_number(m, "p_gen"), detail::get_number(m, "q_gen")};
        net.machine_bus.push_back(bus);
        net.machine_power.push_back(s);
        const auto ss = init_steady_state(net.buses[net.bus_index(bus)].voltage(), s, p);
        sc.model.machines.push_back(ss.params);
        sc.initial.push_back(ss.state);
      }
      sc.model.network = build_staged_network(net, sc.model.machines, event);
      sc.full = std::move(net);
    } else if (doc.contains("reduced")) {
      const auto& rj = doc.at("reduced");
      for (const auto& m : mj) sc.model.machines.push_back(detail::parse_machine(m, true));
      sc.model.network.y_pre = detail::parse_matrix(rj.at("y_pre"), n, "y_pre");
      sc.model.network.y_fault =
          rj.contains("y_fault") ? detail::parse_matrix(rj.at("y_fault"), n, "y_fault") : sc.model.network.y_pre;
      sc.model.network.y_post =
          rj.contains("y_post") ? detail::parse_matrix(rj.at("y_post"), n, "y_post") : sc.model.network.y_pre;
      sc.model.network.event = event;
      if (!doc.contains("initial_state") || doc.at("initial_state").size() != n)
        throw ValidationError("reduced scenario needs 'initial_state' with one entry per machine");
      for (const auto& s : doc.at("initial_state"))
        sc.initial.push_back({detail::get_number(s, "delta"), detail::get_number(s, "omega"),
                              detail::get_number(s, "epq"), detail::get_number(s, "epd")});
    } else {
      throw ValidationError("scenario needs either 'network' or 'reduced'");
    }
    for (const auto& s : sc.initial)
      if (!std::isfinite(s.delta) || !std::isfinite(s.omega) || !std::isfinite(s.ep_q) || !std::isfinite(s.ep_d))
        throw ValidationError("initial state must be finite");
    sc.model.validate();
    return sc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario JSON: ") + e.what());
  }
}

/// Reduced-form document: stage matrices, machine parameters with their
/// operating point, and the initial state. Parsing it reproduces the model.
inline json scenario_to_reduced_json(const Scenario& sc) {
  json doc;
  doc["name"] = sc.name;
  doc["base_frequency"] = sc.model.omega_s / (2.0 * std::numbers::pi);
  json machines = json::array();
  for (const auto& p : sc.model.machines)
    machines.push_back({{"H", p.H}, {"D", p.D}, {"x_d", p.x_d}, {"x_q", p.x_q}, {"xp_d", p.xp_d},
                        {"xp_q", p.xp_q}, {"Tp_d0", p.Tp_d0}, {"Tp_q0", p.Tp_q0}, {"R_a", p.R_a},
                        {"P_m", p.P_m}, {"e_fd", p.e_fd}});
  doc["machines"] = std::move(machines);
  doc["reduced"] = {{"y_pre", detail::matrix_to_json(sc.model.network.y_pre)},
                    {"y_fault", detail::matrix_to_json(sc.model.network.y_fault)},
                    {"y_post", detail::matrix_to_json(sc.model.network.y_post)}};
  json init = json::array();
  for (const auto& s : sc.initial)
    init.push_back({{"delta", s.delta}, {"omega", s.omega}, {"epq", s.ep_q}, {"epd", s.ep_d}});
  doc["initial_state"] = std::move(init);
  if (sc.model.network.event)
    doc["event"] = {{"t_fault", sc.model.network.event->t_fault}, {"t_clear", sc.model.network.event->t_clear}};
  else
    doc["event"] = nullptr;
  return doc;
}

inline void parse_smib_json(const json& doc, SmibParams& out) {
  const auto& s = doc.at("smib");
  const double f0 = detail::get_number_or(doc, "base_frequency", 60.0);
  out.H = detail::get_number(s, "H");
  out.D = detail::get_number_or(s, "D", 0.0);
  out.P_m = detail::get_number(s, "P_m");
  out.P_max = detail::get_number(s, "P_max");
  out.delta0 = detail::get_number(s, "delta0");
  out.omega0 = detail::get_number_or(s, "omega0", 0.0);
  out.omega_s = 2.0 * std::numbers::pi * f0;
  out.validate();
}

/// Either a multi-machine scenario or the single-machine infinite-bus case.
using ScenarioFile = std::variant<Scenario, SmibParams>;

inline ScenarioFile parse_scenario_file(const json& doc) {
  try {
    if (doc.value("type", std::string()) == "smib") {
      SmibParams p;
      parse_smib_json(doc, p);
      return p;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

inline ScenarioFile load_scenario_file(const std::string& path) {
  return parse_scenario_file(read_json_file(path));
}

inline Scenario load_scenario(const std::string& path) {
  auto f = load_scenario_file(path);
  if (auto* sc = std::get_if<Scenario>(&f)) return std::move(*sc);
  throw ValidationError("'" + path + "' is a single-machine infinite-bus case, not a network scenario");
}

}  // namespace dtmsas
