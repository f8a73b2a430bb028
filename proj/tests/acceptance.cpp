// Acceptance run: one PASS/FAIL line per criterion. `--only N` runs one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dtmsas/rk4.hpp"
#include "dtmsas/sas.hpp"
#include "dtmsas/scenario.hpp"
#include "dtmsas/smib.hpp"
#include "dtmsas/tuning.hpp"
#include "test_support.hpp"

using namespace dtmsas;

namespace {

struct Result {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

const Scenario& ieee39() { return testsupport::ieee39(); }

template <class F>
double median_seconds(F&& f, int reps) {
  std::vector<double> t;
  f();  // warmup
  for (int r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

// 1: accurate single-window length for K = 3, 4, 7, 15 at 1e-5 rad
Result smib_windows() {
  const SmibParams p;
  const double h = 1.0 / 1200;
  const auto ref = smib_reference(p, {p.delta0, p.omega0}, h, 600, 4);
  const std::size_t orders[] = {3, 4, 7, 15};
  const double target[] = {0.01, 0.04, 0.10, 0.25};
  bool ok = true;
  std::string d;
  double prev = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double tw = smib_max_window(p, orders[i], 1e-5, ref, h);
    const double f = std::max(tw / target[i], target[i] / tw);
    const bool in = f <= 1.5;
    ok = ok && in && tw > prev;
    prev = tw;
    d += "K=" + std::to_string(orders[i]) + " " + fmt("%.4f", tw) + " s (ref " + fmt("%.2f", target[i]) +
         ", x" + fmt("%.2f", f) + (in ? ")" : " out of 1.5x)") + (i < 3 ? "; " : "");
  }
  return {ok, d};
}

// 2: Delta(0..3) against the closed forms
Result table_closed_forms() {
  const SmibParams p;
  const auto w = smib_build_window(p, {p.delta0, p.omega0}, 3);
  const double ws = p.omega_s, d0 = p.delta0, w0 = p.omega0;
  const double acc = p.P_m - p.P_max * std::sin(d0) - p.D * w0;
  const double ref[4] = {d0, ws * w0, ws * acc / (4 * p.H),
                         -ws * ws * p.P_max * w0 * std::cos(d0) / (12 * p.H) - ws * p.D * acc / (24 * p.H * p.H)};
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(w.delta[k] - ref[k]) / std::abs(ref[k]));
  return {worst <= 1e-12, "Delta = [" + fmt("%.9g", w.delta[0]) + ", " + fmt("%.9g", w.delta[1]) + ", " +
                              fmt("%.9g", w.delta[2]) + ", " + fmt("%.9g", w.delta[3]) + "], max rel dev " +
                              fmt("%.2e", worst)};
}

// 3: coefficients unchanged when the order grows
Result coefficient_finality() {
  const auto& sc = ieee39();
  const auto probes = make_probes(sc.model, sc.initial);
  std::size_t compared = 0, differ = 0;
  for (const auto& pr : probes) {
    const auto a = build_window(pr.ref.front(), sc.model, pr.stage, 8);
    const auto b = build_window(pr.ref.front(), sc.model, pr.stage, 16);
    for (std::size_t i = 0; i < a.machines.size(); ++i)
      for (std::size_t k = 0; k <= 8; ++k)
        for (auto [x, y] : {std::pair{&a.machines[i].delta, &b.machines[i].delta},
                            std::pair{&a.machines[i].omega, &b.machines[i].omega},
                            std::pair{&a.machines[i].ep_q, &b.machines[i].ep_q},
                            std::pair{&a.machines[i].ep_d, &b.machines[i].ep_d}}) {
          ++compared;
          differ += ((*x)[k] != (*y)[k]);
        }
  }
  const SmibParams p;
  const auto s8 = smib_build_window(p, {p.delta0, p.omega0}, 8);
  const auto s16 = smib_build_window(p, {p.delta0, p.omega0}, 16);
  for (std::size_t k = 0; k <= 8; ++k) {
    compared += 2;
    differ += (s8.delta[k] != s16.delta[k]) + (s8.omega[k] != s16.omega[k]);
  }
  return {differ == 0, std::to_string(compared) + " coefficients compared (39-bus probes + SMIB), " +
                           std::to_string(differ) + " differ"};
}

// 4: trig identity and derivative consistency on every window of a 39-bus run
Result series_identities() {
  const auto& sc = ieee39();
  SimConfig cfg;
  double pyth = 0.0, pyth_scaled = 0.0, deriv = 0.0;
  std::size_t windows = 0;
  std::vector<WindowSAS> ws;
  simulate(sc.model, sc.initial, cfg, [&](std::size_t, const WindowSAS& w) { ws.push_back(w); });
  for (std::size_t wi = 0; wi < ws.size(); ++wi) {
    const auto& w = ws[wi];
    const double len = (wi + 1 < ws.size() ? ws[wi + 1].anchor_time : cfg.duration) - w.anchor_time;
    ++windows;
    for (const auto& tp : w.trig)
      for (std::size_t k = 0; k <= w.order; ++k) {
        const double r = conv(tp.sin_series, tp.sin_series, k) + conv(tp.cos_series, tp.cos_series, k) - (k == 0);
        pyth = std::max(pyth, std::abs(r));
        pyth_scaled = std::max(pyth_scaled, std::abs(r) * std::pow(len, static_cast<double>(k)));
      }
    for (const auto& m : w.machines)
      for (std::size_t k = 0; k < w.order; ++k)
        deriv = std::max(deriv, std::abs((k + 1) * m.delta[k + 1] - sc.model.omega_s * m.omega[k]));
  }
  return {pyth <= 1e-12 && deriv <= 1e-10,
          std::to_string(windows) + " windows; max |S*S+C*C - [k=0]| " + fmt("%.2e", pyth) +
              " (gate 1e-12; in window-normalized time " + fmt("%.2e", pyth_scaled) + "); max derivative residual " +
              fmt("%.2e", deriv) + " (gate 1e-10)"};
}

// 5: local order of one SMIB window
Result local_order() {
  const SmibParams p;
  bool ok = true;
  std::string d;
  for (std::size_t K : {3u, 4u}) {
    std::vector<double> lh, le;
    for (double h : {0.005, 0.01, 0.02, 0.04}) {
      const std::size_t sub = 400;
      const auto ref = smib_reference(p, {p.delta0, p.omega0}, h / sub, sub, 1);
      const auto w = smib_build_window(p, {p.delta0, p.omega0}, K);
      double e = 0;
      for (std::size_t j = 0; j <= sub; j += 10) {
        const auto s = w.eval(j * h / sub);
        e = std::max({e, std::abs(s.delta - ref[j].delta), std::abs(s.omega - ref[j].omega)});
      }
      lh.push_back(std::log(h));
      le.push_back(std::log(e));
    }
    double mx = 0, my = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      mx += lh[i] / 4;
      my += le[i] / 4;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      sxy += (lh[i] - mx) * (le[i] - my);
      sxx += (lh[i] - mx) * (lh[i] - mx);
    }
    const double slope = sxy / sxx;
    ok = ok && std::abs(slope - static_cast<double>(K + 1)) <= 0.7;
    d += "K=" + std::to_string(K) + " slope " + fmt("%.2f", slope) + " (target " + std::to_string(K + 1) + ")" +
         (K == 3 ? "; " : "");
  }
  return {ok, d};
}

// 6: 39-bus run against RK4 at 1/1200 s
Result end_to_end() {
  const auto& sc = ieee39();
  SimConfig cfg;
  cfg.sample_step = 1.0 / 1200;
  const auto a = simulate(sc.model, sc.initial, cfg);
  const auto b = rk4_simulate(sc.model, sc.initial, RK4Config{});
  double e = 0.0, ed = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    e = std::max(e, state_error(a.states[j], b.states[j]));
    for (std::size_t i = 0; i < a.machines; ++i) ed = std::max(ed, std::abs(a.states[j][i].delta - b.states[j][i].delta));
  }
  return {e <= 1e-4, "K=12, t_w=0.2 s, 6 s: max state error " + fmt("%.2e", e) + " (max |delta err| " +
                         fmt("%.2e", ed) + " rad; reference figure 1.5e-06)"};
}

// 7: windows vs RK4 steps
Result window_count() {
  const auto& sc = ieee39();
  SimConfig cfg;
  const auto a = simulate(sc.model, sc.initial, cfg);
  const auto b = rk4_simulate(sc.model, sc.initial, RK4Config{1.0 / 1200, 6.0, 240});
  // event instants off the 0.2 s grid add one split each
  std::size_t splits = 0;
  for (double t : {sc.model.network.event->t_fault, sc.model.network.event->t_clear}) {
    const double r = t / 0.2;
    if (std::abs(r - std::round(r)) > 1e-9) ++splits;
  }
  const bool ok = a.steps == 30 + splits && b.steps == 7200;
  return {ok, std::to_string(a.steps) + " windows (30 + " + std::to_string(splits) + " event split) vs " +
                  std::to_string(b.steps) + " RK4 steps, " + fmt("%.0f", 7200.0 / 30) + " steps per grid window"};
}

// 8: monotone tuning table, K 6 -> 12 prolongation
Result tuning_monotone() {
  const auto& sc = ieee39();
  const auto probes = make_probes(sc.model, sc.initial);
  const std::size_t orders[] = {6, 8, 10, 12};
  const double tols[] = {1e-3, 1e-5, 1e-7};
  double tw[3][4];
  bool mono = true;
  std::string d;
  for (int t = 0; t < 3; ++t) {
    d += "tol " + fmt("%.0e", tols[t]) + ":";
    for (int k = 0; k < 4; ++k) {
      tw[t][k] = max_window(sc.model, orders[k], tols[t], probes).value_or(0.0);
      d += " " + fmt("%.4f", tw[t][k]);
      if (k > 0 && tw[t][k] < tw[t][k - 1]) {
        mono = false;
        d += "(<K" + std::to_string(orders[k - 1]) + ")";
      }
      if (t > 0 && tw[t][k] > tw[t - 1][k]) mono = false;
    }
    d += "; ";
  }
  const double ratio = tw[1][3] / tw[1][0];
  d += "K12/K6 at 1e-5 = " + fmt("%.2f", ratio);
  return {mono && ratio >= 2.0 && ratio <= 8.0, d};
}

// 9: parallel and sequential coefficients agree; speedup is reported
Result parallel_equivalence() {
  const auto& sc = ieee39();
  SimConfig cfg;
  std::vector<std::pair<std::vector<MachineState>, Stage>> starts;
  simulate(sc.model, sc.initial, cfg, [&](std::size_t, const WindowSAS& w) {
    std::vector<MachineState> s;
    for (const auto& m : w.machines) s.push_back({m.delta[0], m.omega[0], m.ep_q[0], m.ep_d[0]});
    starts.emplace_back(std::move(s), w.stage);
  });
  double worst = 0.0;
  std::string speed;
  for (std::size_t width : {1u, 4u, 40u}) {
    WorkerPool pool(width);
    for (const auto& [s, st] : starts) {
      const auto a = build_window(s, sc.model, st, 12);
      const auto b = parallel_build_window(s, sc.model, st, 12, pool);
      for (std::size_t i = 0; i < a.machines.size(); ++i)
        for (std::size_t k = 0; k <= 12; ++k)
          for (auto [x, y] : {std::pair{a.machines[i].delta[k], b.machines[i].delta[k]},
                              std::pair{a.machines[i].omega[k], b.machines[i].omega[k]},
                              std::pair{a.machines[i].ep_q[k], b.machines[i].ep_q[k]},
                              std::pair{a.machines[i].ep_d[k], b.machines[i].ep_d[k]},
                              std::pair{a.algebraic[i].P_e[k], b.algebraic[i].P_e[k]}})
            worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), 1e-300));
    }
    const auto& s0 = starts[6];
    const double tseq = median_seconds([&] { build_window(s0.first, sc.model, s0.second, 12); }, 21);
    const double tpar =
        median_seconds([&] { parallel_build_window(s0.first, sc.model, s0.second, 12, pool); }, 21);
    speed += " w" + std::to_string(width) + " x" + fmt("%.2f", tseq / tpar);
  }
  return {worst <= 1e-13, "max rel coefficient deviation " + fmt("%.1e", worst) + " over " +
                              std::to_string(starts.size()) + " windows x widths {1,4,40}; measured speedup" + speed +
                              " (" + std::to_string(std::thread::hardware_concurrency()) + " hardware threads)"};
}

// 10: DTM vs RK4 wall time at matched accuracy
Result relative_performance() {
  const auto& sc = ieee39();
  const auto probes = make_probes(sc.model, sc.initial);
  const auto tw_max = max_window(sc.model, 12, 1e-5, probes);
  SimConfig cfg;  // K = 12, t_w = 0.2 s
  const bool matched = tw_max && *tw_max >= cfg.window;
  cfg.sample_step = cfg.window;
  const double t_dtm = median_seconds([&] { simulate(sc.model, sc.initial, cfg); }, 15);
  const double t_rk4 = median_seconds([&] { rk4_simulate(sc.model, sc.initial, RK4Config{1.0 / 1200, 6.0, 240}); }, 15);
  SimConfig full = cfg;
  full.sample_step = 1.0 / 1200;
  const double t_dtm_full = median_seconds([&] { simulate(sc.model, sc.initial, full); }, 7);
  const double t_rk4_full = median_seconds([&] { rk4_simulate(sc.model, sc.initial, RK4Config{}); }, 7);
  const double ratio = t_dtm / t_rk4;
  return {matched && ratio <= 0.5,
          "K=12, t_w=0.2 s (tuned t_w_max " + fmt("%.4f", tw_max.value_or(0.0)) + " s at 1e-5): DTM " +
              fmt("%.3f", t_dtm * 1e3) + " ms vs RK4 " + fmt("%.3f", t_rk4 * 1e3) + " ms, ratio " + fmt("%.3f", ratio) +
              " (speedup x" + fmt("%.1f", 1.0 / ratio) + "); with output at every 1/1200 s: ratio " +
              fmt("%.3f", t_dtm_full / t_rk4_full)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);
  const std::vector<Criterion> all{
      {1, "SMIB accuracy windows", smib_windows},
      {2, "low-order closed forms", table_closed_forms},
      {3, "coefficient finality", coefficient_finality},
      {4, "series identities", series_identities},
      {5, "local convergence order", local_order},
      {6, "39-bus end-to-end accuracy", end_to_end},
      {7, "window-count reduction", window_count},
      {8, "tuning monotonicity", tuning_monotone},
      {9, "parallel equivalence", parallel_equivalence},
      {10, "relative performance", relative_performance},
  };
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d %s: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.name, r.detail.c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
