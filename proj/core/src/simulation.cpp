#include "stagetrack/simulation.hpp"

#include <cmath>

#include "stagetrack/error.hpp"

namespace stagetrack {

using nlohmann::json;

FilterParams parse_filter_params(const json& doc) {
  FilterParams p;
  if (!doc.contains("filter")) return p;
  const json& f = doc.at("filter");
  p.q_accel = f.value("q_accel", p.q_accel);
  p.r_pos = f.value("r_pos_m2", p.r_pos);
  p.gate_chi2 = f.value("gate_chi2", p.gate_chi2);
  p.reject_reset = f.value("reject_reset", p.reject_reset);
  p.init_position_var = f.value("init_position_var_m2", p.init_position_var);
  p.init_velocity_var = f.value("init_velocity_var", p.init_velocity_var);
  if (!(p.q_accel > 0.0 && p.r_pos > 0.0 && p.gate_chi2 > 0.0 && p.reject_reset > 0)) {
    throw Error(ErrorCode::InvalidConfig, "filter parameters must be positive");
  }
  return p;
}

json to_json(const FilterParams& p) {
  return {{"q_accel", p.q_accel},
          {"r_pos_m2", p.r_pos},
          {"gate_chi2", p.gate_chi2},
          {"reject_reset", p.reject_reset},
          {"init_position_var_m2", p.init_position_var},
          {"init_velocity_var", p.init_velocity_var}};
}

std::vector<TagInput> pipeline_inputs(const SimFrameOutput& sim, const StageConfig& stage) {
  std::vector<TagInput> inputs;
  for (const auto& [tag, truth] : sim.truth) {
    TagInput in;
    in.tag_id = tag;
    for (const RangeMeasurement& m : sim.measurements) {
      if (m.tag_id != tag) continue;
      in.ranges.push_back(RangeObservation{stage.find_anchor(m.anchor_id)->position, m.distance, m.sigma});
    }
    for (const TagImu& s : sim.imu) {
      if (s.tag_id == tag) in.imu = s.sample;
    }
    inputs.push_back(std::move(in));
  }
  return inputs;
}

SimulationResult run_simulation(const SimulationSetup& setup) {
  if (!(setup.duration_s >= 0.0)) throw Error(ErrorCode::InvalidConfig, "duration must be >= 0");
  World world(setup.stage, setup.script, setup.noise, setup.seed, setup.fps);
  Pipeline pipeline(PipelineConfig{setup.stage, setup.filter, SolveOptions{}, setup.fps});

  SimulationResult result;
  auto& records = result.records;
  json header{{"kind", "diag"},
              {"frame", 0},
              {"code", "header"},
              {"seed", setup.seed},
              {"fps", setup.fps},
              {"duration_s", setup.duration_s},
              {"config", to_json(setup.stage)},
              {"script", to_json(setup.script)},
              {"noise", to_json(setup.noise)},
              {"filter", to_json(setup.filter)}};
  records.push_back(std::move(header));

  const auto frames = static_cast<FrameIndex>(std::llround(setup.duration_s * setup.fps));
  double raw_sq = 0.0;
  double fused_sq = 0.0;
  std::size_t compared = 0;
  SimulationSummary& sum = result.summary;

  for (FrameIndex f = 0; f < frames; ++f) {
    SimFrameOutput sim = world.tick(f);
    const auto ts_ms = static_cast<std::int64_t>(std::llround(world.time_of(f) * 1000.0));

    const std::vector<TagInput> inputs = pipeline_inputs(sim, setup.stage);
    for (const auto& [tag, truth] : sim.truth) records.push_back(log::truth(f, tag, truth));

    FrameOutput out = pipeline.process(f, ts_ms, inputs);
    log::append(records, out);

    for (const FixOutput& fx : out.fixes) {
      const Vec3& truth = sim.truth.at(fx.tag_id);
      raw_sq += (fx.fix.position.head<2>() - truth.head<2>()).squaredNorm();
      for (const TrackOutput& t : out.tracks) {
        if (t.tag_id == fx.tag_id) fused_sq += (t.track.position.head<2>() - truth.head<2>()).squaredNorm();
      }
      ++compared;
    }
    sum.fixes += out.fixes.size();
    for (const Diagnostic& d : out.diagnostics) {
      if (d.code == "InsufficientAnchors" || d.code == "DegenerateGeometry") ++sum.solve_failures;
    }
    sum.zone_events += out.zone_events.size();
    sum.transitions += out.transitions.size();
  }

  sum.frames = frames;
  sum.raw_rmse = compared ? std::sqrt(raw_sq / compared) : 0.0;
  sum.fused_rmse = compared ? std::sqrt(fused_sq / compared) : 0.0;
  sum.final_scene = pipeline.show_state().current_scene;

  records.push_back(json{{"kind", "diag"},
                         {"frame", frames > 0 ? frames - 1 : 0},
                         {"code", "summary"},
                         {"frames", sum.frames},
                         {"fixes", sum.fixes},
                         {"solve_failures", sum.solve_failures},
                         {"zone_events", sum.zone_events},
                         {"transitions", sum.transitions},
                         {"raw_rmse_m", sum.raw_rmse},
                         {"fused_rmse_m", sum.fused_rmse},
                         {"scene", sum.final_scene}});
  return result;
}

}  // namespace stagetrack
