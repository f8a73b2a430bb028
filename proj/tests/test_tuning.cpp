#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dtmsas/tuning.hpp"
#include "test_support.hpp"

using namespace dtmsas;
using testsupport::ieee39;

namespace {

const std::vector<Probe>& probes() {
  static const auto p = make_probes(ieee39().model, ieee39().initial);
  return p;
}

}  // namespace

TEST(Probes, ClearingStateAndFirstSwing) {
  const auto& p = probes();
  ASSERT_EQ(p.size(), 4u);
  EXPECT_NEAR(p[0].time, 1.0 + 5.0 / 60, 1e-12);
  EXPECT_NEAR(p[3].time, 1.0 + 5.0 / 60 + 0.6, 1e-12);
  for (const auto& q : p) {
    EXPECT_EQ(q.stage, Stage::post_fault);
    EXPECT_EQ(q.ref.size(), 481u);
  }
}

TEST(MaxWindow, Order12NearTwoTenthsSecond) {
  const auto tw = max_window(ieee39().model, 12, 1e-5, probes());
  ASSERT_TRUE(tw.has_value());
  EXPECT_GE(*tw, 0.1);
  EXPECT_LE(*tw, 0.4);
  // the result sits on the 1/1200 s grid
  EXPECT_NEAR(*tw * 1200, std::round(*tw * 1200), 1e-9);
}

TEST(MaxWindow, Order6VersusOrder12) {
  const auto t6 = max_window(ieee39().model, 6, 1e-5, probes());
  const auto t12 = max_window(ieee39().model, 12, 1e-5, probes());
  ASSERT_TRUE(t6 && t12);
  EXPECT_GE(*t12 / *t6, 2.0);
  EXPECT_LE(*t12 / *t6, 8.0);
}

TEST(MaxWindow, InfiniteToleranceGivesLargestCandidate) {
  const auto tw = max_window(ieee39().model, 3, std::numeric_limits<double>::infinity(), probes());
  ASSERT_TRUE(tw.has_value());
  EXPECT_NEAR(*tw, 480.0 / 1200, 1e-12);
}

TEST(MaxWindow, UnreachableTolerance) {
  EXPECT_FALSE(max_window(ieee39().model, 2, 1e-14, probes()).has_value());
}

TEST(MaxWindow, NonDecreasingInTolerance) {
  for (std::size_t k : {4u, 8u, 12u}) {
    double prev = 0.0;
    for (double tol : {1e-7, 1e-5, 1e-3}) {
      const auto tw = max_window(ieee39().model, k, tol, probes()).value_or(0.0);
      EXPECT_GE(tw, prev) << "K=" << k << " tol=" << tol;
      prev = tw;
    }
  }
}

TEST(ErrorMap, DecreasesWithOrderAtFixedWindow) {
  const std::vector<std::size_t> orders{4, 5, 6, 7, 8, 9, 10};
  const std::vector<double> windows{96.0 / 1200};
  const auto cells = error_map(ieee39().model, orders, windows, probes());
  ASSERT_EQ(cells.size(), orders.size());
  for (std::size_t i = 1; i < cells.size(); ++i) EXPECT_LT(cells[i].max_err, cells[i - 1].max_err);
  const double ratio = cells[0].max_err / cells[2].max_err;  // K 4 -> 6
  EXPECT_GE(ratio, 5.0);
  EXPECT_LE(ratio, 1000.0);
}

TEST(ErrorMap, ShortWindowsApproachRoundingFloor) {
  const std::vector<std::size_t> orders{12};
  const std::vector<double> windows{1.0 / 1200, 24.0 / 1200, 240.0 / 1200};
  const auto cells = error_map(ieee39().model, orders, windows, probes());
  EXPECT_LT(cells[0].max_err, 1e-10);
  EXPECT_LT(cells[0].max_err, cells[1].max_err);
  EXPECT_LT(cells[1].max_err, cells[2].max_err);
}

TEST(ErrorMap, WindowOffGridRejected) {
  const std::vector<std::size_t> orders{6};
  const std::vector<double> windows{1.0};
  EXPECT_THROW(error_map(ieee39().model, orders, windows, probes()), ValidationError);
}

TEST(SelectOptimal, ConstantCostPicksLongestWindow) {
  TuningGrid g;
  g.duration = 6.0;
  for (std::size_t k : {4u, 8u, 12u, 16u}) {
    TuningRow r;
    r.order = k;
    r.tol = 1e-5;
    r.t_w_max = (k == 12 || k == 16) ? 0.2 : 0.05 * static_cast<double>(k) / 4;
    r.t_one = 1e-5;
    r.t_total = r.t_one * g.duration / *r.t_w_max;
    g.rows.push_back(r);
  }
  // 12 and 16 tie on t_total; the smaller order wins
  EXPECT_EQ(select_optimal(g, 1e-5).order, 12u);
  auto g2 = g;
  for (auto& r : g2.rows) r.t_total *= 2.0;  // doubling T
  EXPECT_EQ(select_optimal(g2, 1e-5).order, 12u);
  EXPECT_THROW(select_optimal(g, 1e-3), ValidationError);
}

TEST(TuningGrid, MeasuredRowsAndCsv) {
  const std::vector<std::size_t> orders{6, 12};
  const std::vector<double> tols{1e-5};
  const auto g = tuning_grid(ieee39().model, probes(), orders, tols, 6.0);
  ASSERT_EQ(g.rows.size(), 2u);
  for (const auto& r : g.rows) {
    ASSERT_TRUE(r.t_w_max.has_value());
    EXPECT_GT(r.t_one, 0.0);
    EXPECT_NEAR(r.t_total, r.t_one * 6.0 / *r.t_w_max, 1e-15);
    EXPECT_LE(r.max_err, 1e-5);
  }
  std::ostringstream s;
  write_tuning_csv(s, g);
  const auto text = s.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "K,t_w,tol,max_err,t_one,t_total");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(TuningGrid, SingleCell) {
  const std::vector<std::size_t> orders{8};
  const std::vector<double> tols{1e-3};
  const auto g = tuning_grid(ieee39().model, probes(), orders, tols, 6.0, {}, false);
  ASSERT_EQ(g.rows.size(), 1u);
  EXPECT_EQ(g.rows[0].order, 8u);
}

TEST(MeasureTOne, ProjectionMatchesFullRun) {
  // Cost model sanity: t_one * T / t_w against a measured simulate() run.
  const auto& sc = ieee39();
  const double tw = 0.2;
  SimConfig cfg;
  cfg.order = 12;
  cfg.window = tw;
  cfg.sample_step = tw;
  bool ok = false;
  double last_ratio = 0.0;
  for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
    const double t_one = measure_t_one(sc.model, probes().front(), 12, tw, 41);
    std::vector<double> runs;
    for (int r = 0; r < 9; ++r) runs.push_back(simulate(sc.model, sc.initial, cfg).total_wall_ms / 1e3);
    std::sort(runs.begin(), runs.end());
    const double projected = t_one * cfg.duration / tw;
    last_ratio = projected / runs[runs.size() / 2];
    ok = last_ratio > 0.7 && last_ratio < 1.3;
  }
  EXPECT_TRUE(ok) << "projected/measured = " << last_ratio;
}
