#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>

#include "stagetrack/error.hpp"
#include "stagetrack/replay.hpp"
#include "stagetrack/service.hpp"
#include "stagetrack/simulation.hpp"
#include "stagetrack/stage.hpp"

namespace stagetrack::cli {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

NoiseModel noise_from(const json& doc) {
  return doc.contains("noise") ? parse_noise_model(doc.at("noise")) : NoiseModel{};
}

}  // namespace

int cmd_coverage(const CoverageArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const StageConfig stage = load_stage_config(args.config);
    const CoverageGrid grid = coverage_map(stage, args.options);

    std::ofstream file;
    std::ostream* csv = &out;
    if (args.out) {
      file.open(*args.out);
      if (!file) throw Error(ErrorCode::InvalidConfig, "cannot write " + args.out->string());
      csv = &file;
    }
    *csv << "x_idx,y_idx,x_m,y_m,anchors,hdop,covered\n";
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const CoverageCell& c = grid.at(ix, iy);
        const Vec3 p = grid.center(ix, iy, stage.width, stage.depth, args.options.eval_height);
        *csv << ix << ',' << iy << ',' << fixed(p.x(), 3) << ',' << fixed(p.y(), 3) << ',' << c.anchors_in_range
             << ',' << (c.hdop ? fixed(*c.hdop, 4) : "") << ',' << (c.covered ? 1 : 0) << '\n';
      }
    }
    out << "cells=" << grid.nx << "x" << grid.ny << "\n";
    out << "covered_fraction=" << fixed(grid.covered_fraction, 3) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "coverage: " << e.what() << "\n";
    return 2;
  }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const json doc = read_json(args.config);
    SimulationSetup setup;
    setup.stage = parse_stage_config(doc);
    setup.noise = noise_from(doc);
    setup.filter = parse_filter_params(doc);
    setup.script = load_motion_script(args.script);
    setup.seed = args.seed;
    setup.duration_s = args.duration_s;
    setup.fps = args.fps;
    if (!(args.fps > 0.0) || !(args.duration_s >= 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "fps must be positive and duration non-negative");
    }

    const SimulationResult result = run_simulation(setup);
    std::ofstream file(args.out, std::ios::binary);
    if (!file) throw Error(ErrorCode::InvalidConfig, "cannot write " + args.out.string());
    log::write(file, result.records);
    file.close();
    if (!file) throw Error(ErrorCode::InvalidConfig, "write failed: " + args.out.string());

    const SimulationSummary& s = result.summary;
    out << "frames=" << s.frames << " fixes=" << s.fixes << " solve_failures=" << s.solve_failures << "\n";
    out << "raw_rmse_m=" << fixed(s.raw_rmse, 4) << " fused_rmse_m=" << fixed(s.fused_rmse, 4) << "\n";
    out << "zone_events=" << s.zone_events << " transitions=" << s.transitions << " scene=" << s.final_scene
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << "\n";
    return 2;
  }
}

int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const int sources = (args.capture ? 1 : 0) + (args.replay ? 1 : 0) + (args.simulate ? 1 : 0);
    if (sources != 1) throw Error(ErrorCode::InvalidConfig, "exactly one of --capture, --replay, --simulate");

    PipelineConfig pc;
    pc.fps = args.fps;
    std::unique_ptr<service::FrameSource> source;
    if (args.capture) {
      if (!args.config) throw Error(ErrorCode::InvalidConfig, "--capture needs --config");
      const json doc = read_json(*args.config);
      pc.stage = parse_stage_config(doc);
      pc.filter = parse_filter_params(doc);
      source = std::make_unique<service::CaptureSource>(*args.capture, pc.stage);
    } else if (args.replay) {
      std::ifstream in(*args.replay);
      if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + args.replay->string());
      const std::vector<log::Record> records = log::read(in);
      if (records.empty() || records.front().value("code", "") != "header") {
        throw Error(ErrorCode::InvalidConfig, "log has no header record");
      }
      const log::Record& h = records.front();
      pc.stage = parse_stage_config(h.at("config"));
      pc.filter = parse_filter_params(h);
      pc.fps = h.value("fps", args.fps);
      source = std::make_unique<service::ReplaySource>(records);
    } else {
      if (!args.script) throw Error(ErrorCode::InvalidConfig, "--simulate needs --script");
      const json doc = read_json(*args.simulate);
      pc.stage = parse_stage_config(doc);
      pc.filter = parse_filter_params(doc);
      World world(pc.stage, load_motion_script(*args.script), noise_from(doc), args.seed, args.fps);
      source = std::make_unique<service::SimulationSource>(std::move(world), args.duration_s);
    }

    service::ServiceOptions opts;
    opts.port = args.port;
    opts.fps = pc.fps;
    opts.speed = args.speed;
    opts.wait_for_clients = args.wait_clients;
    opts.exit_when_done = args.exit_when_done;
    service::Service svc(opts, pc, std::move(source));
    if (auto e = svc.start()) {
      err << "serve: " << *e << "\n";
      return 3;
    }
    out << "listening port=" << svc.port() << std::endl;
    svc.wait();
    svc.stop();
    return 0;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << "\n";
    return 2;
  }
}

int cmd_replay_check(const ReplayCheckArgs& args, std::ostream& out, std::ostream& err) {
  std::ifstream in(args.log);
  if (!in) {
    err << "replay-check: cannot read " << args.log.string() << "\n";
    return 2;
  }
  try {
    const ReplayCheckResult r = replay_check(in);
    if (!r.ok) {
      err << r.message << "\n";
      return 1;
    }
    out << "ok\n";
    return 0;
  } catch (const std::exception& e) {
    err << "replay-check: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace stagetrack::cli
