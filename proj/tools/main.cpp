#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace stagetrack::cli;
  CLI::App app{"stagetrack: UWB stage tracking tools"};
  app.require_subcommand(1);

  CoverageArgs cov;
  std::string cov_out;
  auto* coverage = app.add_subcommand("coverage", "HDOP coverage grid of a stage config");
  coverage->add_option("--config", cov.config, "stage config JSON")->required();
  coverage->add_option("--cell", cov.options.cell_size, "cell size in m")->capture_default_str();
  coverage->add_option("--hdop-max", cov.options.hdop_max)->capture_default_str();
  coverage->add_option("--min-anchors", cov.options.min_anchors)->capture_default_str();
  coverage->add_option("--eval-height", cov.options.eval_height, "tag height in m")->capture_default_str();
  coverage->add_option("--out", cov_out, "CSV output (default stdout)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run the seeded simulator and write an event log");
  simulate->add_option("--config", sim.config)->required();
  simulate->add_option("--script", sim.script)->required();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--duration", sim.duration_s, "seconds")->capture_default_str();
  simulate->add_option("--fps", sim.fps)->capture_default_str();
  simulate->add_option("--out", sim.out, "event log (NDJSON)")->required();

  ServeArgs srv;
  std::string capture, replay, simcfg, srvcfg, script;
  auto* serve = app.add_subcommand("serve", "telemetry/command service");
  auto* src = serve->add_option_group("source");
  src->add_option("--capture", capture, "wire-format byte stream (file or device)");
  src->add_option("--replay", replay, "event log");
  src->add_option("--simulate", simcfg, "stage config to simulate");
  src->require_option(1);
  serve->add_option("--config", srvcfg, "stage config for --capture");
  serve->add_option("--script", script, "motion script for --simulate");
  serve->add_option("--seed", srv.seed)->capture_default_str();
  serve->add_option("--duration", srv.duration_s)->capture_default_str();
  serve->add_option("--fps", srv.fps)->capture_default_str();
  serve->add_option("--port", srv.port)->capture_default_str();
  serve->add_option("--speed", srv.speed, "pacing multiplier, <= 0 unpaced")->capture_default_str();
  serve->add_option("--wait-clients", srv.wait_clients, "hold frames until N clients connect");
  serve->add_flag("--exit-when-done", srv.exit_when_done);

  ReplayCheckArgs rc;
  auto* replay_check = app.add_subcommand("replay-check", "recompute zone/show state from a log");
  replay_check->add_option("--log", rc.log)->required();

  CLI11_PARSE(app, argc, argv);

  if (*coverage) {
    if (!cov_out.empty()) cov.out = cov_out;
    return cmd_coverage(cov, std::cout, std::cerr);
  }
  if (*simulate) return cmd_simulate(sim, std::cout, std::cerr);
  if (*serve) {
    if (!capture.empty()) srv.capture = capture;
    if (!replay.empty()) srv.replay = replay;
    if (!simcfg.empty()) srv.simulate = simcfg;
    if (!srvcfg.empty()) srv.config = srvcfg;
    if (!script.empty()) srv.script = script;
    return cmd_serve(srv, std::cout, std::cerr);
  }
  return cmd_replay_check(rc, std::cout, std::cerr);
}
