#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stagetrack/event_log.hpp"
#include "stagetrack/pipeline.hpp"
#include "stagetrack/sim.hpp"

namespace stagetrack {

struct SimulationSetup {
  StageConfig stage;
  MotionScript script;
  NoiseModel noise;
  FilterParams filter;
  std::uint64_t seed = 42;
  double duration_s = 20.0;
  double fps = 30.0;
};

struct SimulationSummary {
  FrameIndex frames = 0;
  std::size_t fixes = 0;
  std::size_t solve_failures = 0;
  std::size_t zone_events = 0;
  std::size_t transitions = 0;
  double raw_rmse = 0.0;    // horizontal, solver fixes vs truth
  double fused_rmse = 0.0;  // horizontal, tracks vs truth, same frames
  std::string final_scene;
};

struct SimulationResult {
  std::vector<log::Record> records;
  SimulationSummary summary;
};

/// Pipeline inputs (ranges + IMU per tag) for one simulator frame.
std::vector<TagInput> pipeline_inputs(const SimFrameOutput& sim, const StageConfig& stage);

/// Runs sim_tick -> pipeline per frame. The first record is a "diag" header
/// carrying the full setup (so the log replays standalone); the last is a
/// "diag" summary.
SimulationResult run_simulation(const SimulationSetup& setup);

/// Reads optional "noise" and "filter" sections of a stage config document.
FilterParams parse_filter_params(const nlohmann::json& doc);
nlohmann::json to_json(const FilterParams& params);

}  // namespace stagetrack
