#include <benchmark/benchmark.h>

#include <filesystem>
#include <vector>

#include "stagetrack/geometry.hpp"
#include "stagetrack/pipeline.hpp"
#include "stagetrack/rng.hpp"
#include "stagetrack/simulation.hpp"
#include "stagetrack/solver.hpp"
#include "stagetrack/stage.hpp"
#include "stagetrack/wire.hpp"

using namespace stagetrack;

namespace {

const std::filesystem::path kData{STAGETRACK_DATA_DIR};

StageConfig rect() { return load_stage_config(kData / "configs" / "paper_rect.json"); }

void BM_MultilateratePlanar(benchmark::State& state) {
  const StageConfig stage = rect();
  Rng rng(1);
  const Vec3 p{4.0, 6.0, stage.tag_height};
  std::vector<RangeObservation> obs;
  for (const Vec3& a : stage.anchor_positions()) obs.push_back({a, (a - p).norm() + rng.normal(0, 0.1), 0.1});
  SolveOptions opts;
  opts.fixed_height = stage.tag_height;
  for (auto _ : state) benchmark::DoNotOptimize(multilaterate(obs, opts));
}
BENCHMARK(BM_MultilateratePlanar);

void BM_DecodeStream(benchmark::State& state) {
  std::vector<std::uint8_t> bytes;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    wire::append_frame(bytes, wire::PositionReport{1, static_cast<std::uint8_t>(i), i * 33, 3200, 4000, 200, 150});
    wire::append_frame(bytes, wire::RangeReport{1, static_cast<std::uint8_t>(i), i * 33, 2, 5000, 200});
  }
  for (auto _ : state) {
    wire::DecodeDiagnostics d;
    benchmark::DoNotOptimize(wire::decode_stream(bytes, d, true));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_DecodeStream);

void BM_CoverageMap(benchmark::State& state) {
  const StageConfig stage = rect();
  CoverageOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(coverage_map(stage, o));
}
BENCHMARK(BM_CoverageMap);

void BM_SimPipelineFrame(benchmark::State& state) {
  const StageConfig stage = load_stage_config(kData / "configs" / "puzzle.json");
  const MotionScript script = load_motion_script(kData / "scripts" / "puzzle.json");
  World world(stage, script, NoiseModel{}, 42, 30.0);
  Pipeline pipeline(PipelineConfig{stage, FilterParams{}, SolveOptions{}, 30.0});
  FrameIndex f = 0;
  for (auto _ : state) {
    const SimFrameOutput sim = world.tick(f);
    benchmark::DoNotOptimize(pipeline.process(f, f * 33, pipeline_inputs(sim, stage)));
    ++f;
  }
}
BENCHMARK(BM_SimPipelineFrame);

}  // namespace

BENCHMARK_MAIN();
