#pragma once

// Command implementations behind the dtmsas executable. Each returns the
// process exit code: 0 ok, 2 invalid input, 3 divergence.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtmsas/errors.hpp"
#include "dtmsas/rk4.hpp"
#include "dtmsas/sas.hpp"
#include "dtmsas/scenario.hpp"
#include "dtmsas/smib.hpp"
#include "dtmsas/svg.hpp"
#include "dtmsas/trajectory.hpp"
#include "dtmsas/tuning.hpp"

namespace dtmsas {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitDiverged = 3 };

struct RunOptions {
  std::string command;
  std::string scenario;
  std::string method = "dtm";
  std::size_t order = 12;
  double window = 0.2;
  std::optional<double> step;  // RK4 step; DTM output sample step
  double duration = 6.0;
  std::vector<double> tol{1e-5};
  bool parallel = false;
  std::size_t workers = 1;
  std::string out = "out";
  std::string sweep_orders = "4..20";
  std::vector<double> sweep_windows;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto k = std::stoul(s);
      return {k, k};
    }
    const auto a = std::stoul(s.substr(0, dots)), b = std::stoul(s.substr(dots + 2));
    if (a > b) throw ValidationError("empty order range '" + s + "'");
    return {a, b};
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("bad order range '" + s + "' (expected A..B)");
  }
}

inline bool is_multiple(double a, double h) {
  const double r = a / h;
  return std::abs(r - std::round(r)) < 1e-6;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + p.string() + "'");
  f << text;
}

inline nlohmann::json config_json(const RunOptions& o) {
  nlohmann::json j;
  j["method"] = o.method;
  j["order"] = o.order;
  j["window"] = o.window;
  j["step"] = o.step ? nlohmann::json(*o.step) : nlohmann::json(nullptr);
  j["duration"] = o.duration;
  j["tol"] = o.tol;
  j["parallel"] = o.parallel;
  j["workers"] = o.workers;
  if (o.command == "sweep") {
    j["sweep_orders"] = o.sweep_orders;
    j["sweep_windows"] = o.sweep_windows;
  }
  return j;
}

inline void write_manifest(const RunOptions& o, const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["tool"] = "dtmsas";
  m["version"] = kVersion;
  m["command"] = o.command;
  m["scenario"] = o.scenario;
  m["config"] = config_json(o);
  m["out"] = o.out;
  m["outputs"] = outputs;
  write_file(std::filesystem::path(o.out) / "manifest.json", m.dump(2) + "\n");
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream s;
  write_trajectory_csv(s, tr);
  return s.str();
}

inline std::string trajectory_svg(const Trajectory& tr, const std::string& title) {
  std::vector<svg::Line> lines(tr.machines);
  for (std::size_t i = 0; i < tr.machines; ++i) {
    lines[i].label = "delta_" + std::to_string(i + 1);
    lines[i].x = tr.times;
    for (const auto& row : tr.states) lines[i].y.push_back(row[i].delta);
  }
  std::ostringstream s;
  svg::line_plot(s, lines, title, "t (s)", "rotor angle (rad)", tr.window_starts);
  return s.str();
}

inline nlohmann::json timing_json(const Trajectory& tr, const std::string& method) {
  nlohmann::json t;
  t["method"] = method;
  t[method == "rk4" ? "steps" : "windows"] = tr.steps;
  t["total_ms"] = tr.total_wall_ms;
  if (method != "rk4") {
    t["window_starts"] = tr.window_starts;
    t["window_ms"] = tr.window_wall_ms;
  }
  return t;
}

/// Runs one integrator on a loaded scenario file.
inline Trajectory run_method(const ScenarioFile& f, const RunOptions& o, const std::string& method,
                             std::optional<double> sample_step) {
  if (method == "rk4") {
    const double h = o.step.value_or(kGridStep);
    if (const auto* smib = std::get_if<SmibParams>(&f)) return smib_rk4_simulate(*smib, h, o.duration);
    const auto& sc = std::get<Scenario>(f);
    return rk4_simulate(sc.model, sc.initial, RK4Config{h, o.duration, 1});
  }
  if (method != "dtm") throw ValidationError("unknown method '" + method + "' (dtm|rk4)");
  const double ss = sample_step.value_or(o.window);
  if (const auto* smib = std::get_if<SmibParams>(&f)) return smib_simulate(*smib, o.order, o.window, o.duration, ss);
  const auto& sc = std::get<Scenario>(f);
  SimConfig cfg;
  cfg.order = o.order;
  cfg.window = o.window;
  cfg.duration = o.duration;
  cfg.sample_step = ss;
  cfg.parallel = o.parallel;
  cfg.workers = o.workers;
  return simulate(sc.model, sc.initial, cfg);
}

}  // namespace detail

inline int run_simulate(const RunOptions& o, std::ostream& log) {
  const auto f = load_scenario_file(o.scenario);
  std::filesystem::create_directories(o.out);
  const auto tr = detail::run_method(f, o, o.method, o.step);
  const auto dir = std::filesystem::path(o.out);
  detail::write_file(dir / "trajectory.csv", detail::trajectory_csv(tr));
  detail::write_file(dir / "timing.json", detail::timing_json(tr, o.method).dump(2) + "\n");
  detail::write_file(dir / "trajectory.svg", detail::trajectory_svg(tr, o.method + " rotor angles"));
  detail::write_manifest(o, {"trajectory.csv", "timing.json", "trajectory.svg"});
  log << o.method << ": " << tr.size() << " samples, " << tr.steps << (o.method == "rk4" ? " steps" : " windows")
      << ", " << tr.total_wall_ms << " ms\n";
  return kExitOk;
}

/// Max-abs deviation per channel over the shared time grid.
struct CompareSummary {
  double delta = 0.0, omega = 0.0, ep_q = 0.0, ep_d = 0.0, p_e = 0.0;
  std::size_t points = 0;
};

inline CompareSummary compare_trajectories(const Trajectory& a, const Trajectory& b, std::ostream* csv = nullptr) {
  if (a.machines != b.machines) throw ValidationError("compare: machine counts differ");
  CompareSummary s;
  if (csv) {
    *csv << "t";
    for (std::size_t i = 1; i <= a.machines; ++i)
      *csv << ",err_delta_" << i << ",err_omega_" << i << ",err_epq_" << i << ",err_epd_" << i << ",err_pe_" << i;
    *csv << '\n';
  }
  std::size_t jb = 0;
  for (std::size_t ja = 0; ja < a.size(); ++ja) {
    while (jb < b.size() && b.times[jb] < a.times[ja] - kTimeEps) ++jb;
    if (jb == b.size()) break;
    if (std::abs(b.times[jb] - a.times[ja]) > kTimeEps) continue;
    ++s.points;
    if (csv) *csv << format_double(a.times[ja]);
    for (std::size_t i = 0; i < a.machines; ++i) {
      const auto& x = a.states[ja][i];
      const auto& y = b.states[jb][i];
      const double e[5] = {x.delta - y.delta, x.omega - y.omega, x.ep_q - y.ep_q, x.ep_d - y.ep_d,
                           a.p_e[ja][i] - b.p_e[jb][i]};
      s.delta = std::max(s.delta, std::abs(e[0]));
      s.omega = std::max(s.omega, std::abs(e[1]));
      s.ep_q = std::max(s.ep_q, std::abs(e[2]));
      s.ep_d = std::max(s.ep_d, std::abs(e[3]));
      s.p_e = std::max(s.p_e, std::abs(e[4]));
      if (csv)
        for (double v : e) *csv << ',' << format_double(v);
    }
    if (csv) *csv << '\n';
  }
  if (s.points == 0) throw ValidationError("compare: trajectories share no time points");
  return s;
}

/// DTM (sampled on the RK4 grid) against RK4; t_w must be a multiple of h.
inline int run_compare(const RunOptions& o, std::ostream& log) {
  const double h = o.step.value_or(kGridStep);
  if (!detail::is_multiple(o.window, h))
    throw ValidationError("compare: window " + format_double(o.window) + " is not a multiple of step " +
                          format_double(h));
  const auto f = load_scenario_file(o.scenario);
  std::filesystem::create_directories(o.out);
  const auto dtm = detail::run_method(f, o, "dtm", h);
  const auto rk = detail::run_method(f, o, "rk4", h);
  std::ostringstream csv;
  const auto s = compare_trajectories(dtm, rk, &csv);
  const auto dir = std::filesystem::path(o.out);
  detail::write_file(dir / "errors.csv", csv.str());
  nlohmann::json j;
  j["points"] = s.points;
  j["max_abs"] = {{"delta", s.delta}, {"omega", s.omega}, {"epq", s.ep_q}, {"epd", s.ep_d}, {"pe", s.p_e}};
  j["max_state_error"] = std::max(s.delta, s.omega);
  j["dtm"] = detail::timing_json(dtm, "dtm");
  j["rk4"] = detail::timing_json(rk, "rk4");
  detail::write_file(dir / "summary.json", j.dump(2) + "\n");
  detail::write_manifest(o, {"errors.csv", "summary.json"});
  log << "max |delta err| " << s.delta << " rad, max |omega err| " << s.omega << " p.u. over " << s.points
      << " points\n";
  log << "dtm " << dtm.steps << " windows " << dtm.total_wall_ms << " ms; rk4 " << rk.steps << " steps "
      << rk.total_wall_ms << " ms\n";
  return kExitOk;
}

inline int run_sweep(const RunOptions& o, std::ostream& log) {
  const auto sc = load_scenario(o.scenario);
  const auto [ka, kb] = detail::parse_range(o.sweep_orders);
  if (ka < 1) throw ValidationError("sweep orders must be >= 1");
  std::vector<std::size_t> orders;
  for (auto k = ka; k <= kb; ++k) orders.push_back(k);
  if (o.tol.empty()) throw ValidationError("sweep needs at least one --tol");
  for (double t : o.tol)
    if (!(t > 0.0)) throw ValidationError("tolerances must be > 0");
  TuningOptions opt;
  double longest = 0.0;
  for (double w : o.sweep_windows) {
    if (!(w > 0.0) || !detail::is_multiple(w, opt.grid_step))
      throw ValidationError("sweep window " + format_double(w) + " is not a positive multiple of 1/1200 s");
    longest = std::max(longest, w);
  }
  opt.max_steps = std::max<std::size_t>(opt.max_steps, static_cast<std::size_t>(std::llround(longest / opt.grid_step)));

  std::filesystem::create_directories(o.out);
  const auto dir = std::filesystem::path(o.out);
  const auto probes = make_probes(sc.model, sc.initial, opt);
  auto grid = tuning_grid(sc.model, probes, orders, o.tol, o.duration, opt);
  grid.scenario = sc.name;
  std::ostringstream csv;
  write_tuning_csv(csv, grid);
  detail::write_file(dir / "tuning.csv", csv.str());
  std::vector<std::string> outputs{"tuning.csv"};

  nlohmann::json rec = nlohmann::json::array();
  for (double t : o.tol) {
    try {
      const auto& best = select_optimal(grid, t);
      log << "tol " << t << ": K* = " << best.order << ", t_w* = " << *best.t_w_max << " s, t_one = "
          << best.t_one * 1e6 << " us, projected t_total = " << best.t_total * 1e3 << " ms\n";
      rec.push_back({{"tol", t}, {"K", best.order}, {"t_w", *best.t_w_max}, {"t_one", best.t_one},
                     {"t_total", best.t_total}});
    } catch (const ValidationError&) {
      log << "tol " << t << ": unreachable for every order in " << o.sweep_orders << "\n";
      rec.push_back({{"tol", t}, {"K", nullptr}});
    }
  }
  detail::write_file(dir / "recommendation.json", rec.dump(2) + "\n");
  outputs.push_back("recommendation.json");

  if (!o.sweep_windows.empty()) {
    const auto cells = error_map(sc.model, orders, o.sweep_windows, probes, opt);
    std::ostringstream em;
    write_error_map_csv(em, cells);
    detail::write_file(dir / "error_map.csv", em.str());
    std::vector<svg::Cell> hc;
    std::vector<std::string> cols, rows;
    for (auto k : orders) cols.push_back(std::to_string(k));
    for (double w : o.sweep_windows) rows.push_back(std::to_string(std::llround(w / opt.grid_step)));
    for (std::size_t i = 0; i < cells.size(); ++i)
      hc.push_back({i / o.sweep_windows.size(), i % o.sweep_windows.size(), cells[i].max_err});
    std::ostringstream hm;
    svg::heatmap(hm, hc, cols, rows, "one-window max error", "order K", "t_w (x 1/1200 s)");
    detail::write_file(dir / "heatmap.svg", hm.str());
    outputs.push_back("error_map.csv");
    outputs.push_back("heatmap.svg");
  }
  detail::write_manifest(o, outputs);
  return kExitOk;
}

/// Writes the staged reduced matrices; a reduced document passes through unchanged.
inline int run_reduce(const RunOptions& o, std::ostream& log) {
  const auto doc = read_json_file(o.scenario);
  std::filesystem::create_directories(o.out);
  const auto dir = std::filesystem::path(o.out);
  nlohmann::json out;
  if (doc.contains("reduced") && !doc.contains("network")) {
    parse_scenario(doc);  // validates
    out = doc;
    log << "already reduced; passed through\n";
  } else {
    const auto f = parse_scenario_file(doc);
    const auto* sc = std::get_if<Scenario>(&f);
    if (!sc) throw ValidationError("reduce needs a network scenario");
    out = scenario_to_reduced_json(*sc);
    log << "reduced " << sc->full->buses.size() << " buses to " << sc->model.size() << " internal nodes\n";
  }
  detail::write_file(dir / "reduced.json", out.dump(2) + "\n");
  detail::write_manifest(o, {"reduced.json"});
  return kExitOk;
}

/// Dispatch with the exit-code contract applied to library errors.
inline int run_command(const RunOptions& o, std::ostream& log, std::ostream& err) {
  try {
    if (o.command == "simulate") return run_simulate(o, log);
    if (o.command == "compare") return run_compare(o, log);
    if (o.command == "sweep") return run_sweep(o, log);
    if (o.command == "reduce") return run_reduce(o, log);
    err << "unknown command '" << o.command << "'\n";
    return kExitInvalid;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "; last good time " << e.last_good_time() << " s\n";
    return kExitDiverged;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const SingularNetworkError& e) {
    err << "invalid input: " << e.what() << " (rcond " << e.rcond() << ")\n";
    return kExitInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace dtmsas
