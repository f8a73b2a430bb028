// dtmsas: transient-stability runs with power-series windows or RK4.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dtmsas/commands.hpp"

int main(int argc, char** argv) {
  using dtmsas::RunOptions;
  RunOptions o;
  CLI::App app{"Semi-analytical (DTM) transient stability simulator"};
  app.set_version_flag("--version", std::string("dtmsas ") + dtmsas::kVersion);
  app.require_subcommand(1);

  auto common = [&o](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o.out, "output directory")->capture_default_str();
    c->add_option("--duration", o.duration, "simulated time in seconds (pre-fault hold included)")
        ->capture_default_str()->check(CLI::PositiveNumber);
  };
  auto sas = [&o](CLI::App* c) {
    c->add_option("--order", o.order, "series order K")->capture_default_str()->check(CLI::Range(1, 60));
    c->add_option("--window", o.window, "window length t_w in seconds")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--step", o.step, "RK4 step h in seconds; output sample step for dtm (default t_w)")
        ->check(CLI::PositiveNumber);
    c->add_flag("--parallel", o.parallel, "build coefficients on a worker pool");
    c->add_option("--workers", o.workers, "worker pool width")->capture_default_str()->check(CLI::Range(1, 1024));
  };

  auto* sim = app.add_subcommand("simulate", "run one method and write trajectory.csv");
  common(sim);
  sas(sim);
  sim->add_option("--method", o.method, "dtm or rk4")->capture_default_str()
      ->check(CLI::IsMember({"dtm", "rk4"}));

  auto* cmp = app.add_subcommand("compare", "DTM against RK4 on the RK4 grid");
  common(cmp);
  sas(cmp);

  auto* sw = app.add_subcommand("sweep", "tuning table, error map and recommended order");
  common(sw);
  sw->add_option("--tol", o.tol, "error tolerance(s)")->capture_default_str()->delimiter(',');
  sw->add_option("--sweep-orders", o.sweep_orders, "order range A..B")->capture_default_str();
  sw->add_option("--sweep-windows", o.sweep_windows, "comma-separated t_w values for the error map")
      ->delimiter(',');

  auto* red = app.add_subcommand("reduce", "write the staged reduced matrices");
  common(red);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dtmsas::kExitInvalid;
  }
  o.command = app.get_subcommands().front()->get_name();
  return dtmsas::run_command(o, std::cout, std::cerr);
}
