#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stagetrack/error.hpp"
#include "stagetrack/pipeline.hpp"
#include "stagetrack/replay.hpp"
#include "stagetrack/simulation.hpp"
#include "stagetrack/stage.hpp"

using namespace stagetrack;

namespace {

const std::filesystem::path kData{STAGETRACK_DATA_DIR};

SimulationSetup setup(const std::string& config, const std::string& script) {
  SimulationSetup s;
  s.stage = load_stage_config(kData / "configs" / config);
  s.script = load_motion_script(kData / "scripts" / script);
  return s;
}

std::vector<log::Record> of_kind(const std::vector<log::Record>& r, const std::string& kind) {
  std::vector<log::Record> out;
  for (const auto& x : r) {
    if (x.at("kind") == kind) out.push_back(x);
  }
  return out;
}

PipelineConfig rect_pipeline() {
  PipelineConfig pc;
  pc.stage.anchors = centered_rectangle_anchors(pc.stage.width, pc.stage.depth, 7.55, 5.70);
  pc.stage.zones.push_back(ZoneDef{"Z1", Vec3{3, 3, 0}});
  pc.stage.scenes.push_back(SceneDef{"a", {{"Z1", std::nullopt}}, "b"});
  pc.stage.scenes.push_back(SceneDef{"b", {}, "End"});
  return pc;
}

std::vector<RangeObservation> ranges_to(const StageConfig& s, const Vec3& p, int n = 4) {
  std::vector<RangeObservation> r;
  for (int k = 0; k < n; ++k) r.push_back({s.anchors[k].position, (s.anchors[k].position - p).norm(), 0.1});
  return r;
}

}  // namespace

TEST_CASE("noise-free run recovers truth") {
  SimulationSetup s = setup("paper_rect.json", "walk.json");
  s.noise = NoiseModel::noise_free();
  s.duration_s = 10;
  const SimulationResult r = run_simulation(s);
  std::map<std::pair<FrameIndex, int>, Vec3> truth;
  for (const auto& t : of_kind(r.records, "truth")) {
    truth[{t.at("frame").get<FrameIndex>(), t.at("tag").get<int>()}] = Vec3{t.at("x").get<double>(), t.at("y").get<double>(), t.at("z").get<double>()};
  }
  double worst = 0;
  for (const auto& f : of_kind(r.records, "fix")) {
    const Vec3 p{f.at("x").get<double>(), f.at("y").get<double>(), f.at("z").get<double>()};
    worst = std::max(worst, horizontal_distance(p, truth.at({f.at("frame").get<FrameIndex>(), f.at("tag").get<int>()})));
  }
  CHECK(worst < 1e-5);
  CHECK(r.summary.raw_rmse < 1e-5);
  CHECK(r.summary.fixes == 300);
}

TEST_CASE("centered cube latches on its 100th inside frame") {
  SimulationSetup s = setup("puzzle.json", "centered_cube.json");
  s.duration_s = 10;
  const SimulationResult r = run_simulation(s);
  const auto events = of_kind(r.records, "zone_event");
  REQUIRE(events.size() >= 1);
  const auto& latch = events.front();
  CHECK(latch.at("event") == "Latched");
  CHECK(latch.at("zone") == "Z1");

  const ZoneDef z = s.stage.zones.front();
  const FrameIndex f_latch = latch.at("frame");
  FrameIndex run_start = -1;
  for (const auto& t : of_kind(r.records, "track")) {
    const FrameIndex f = t.at("frame");
    if (f > f_latch) break;
    const bool inside = containment(z, Vec3{t.at("x").get<double>(), t.at("y").get<double>(), 0.0}) == Containment::Inside;
    if (!inside) {
      run_start = -1;
    } else if (run_start < 0) {
      run_start = f;
    }
  }
  CHECK(f_latch - run_start == 99);
}

TEST_CASE("parked tags produce no events") {
  SimulationSetup s = setup("puzzle.json", "parked.json");
  const SimulationResult r = run_simulation(s);
  CHECK(of_kind(r.records, "zone_event").empty());
  CHECK(of_kind(r.records, "scene").empty());
  CHECK(r.summary.final_scene == "act1");
}

TEST_CASE("three cubes complete the puzzle chain") {
  SimulationSetup s = setup("puzzle.json", "puzzle.json");
  s.duration_s = 30;
  const SimulationResult r = run_simulation(s);
  const auto scenes = of_kind(r.records, "scene");
  REQUIRE(scenes.size() == 3);
  CHECK(scenes[0].at("to") == "act2");
  CHECK(scenes[1].at("to") == "act3");
  CHECK(scenes[2].at("to") == "End");
  CHECK(r.records.back().at("scene") == "End");
  CHECK(replay_check(r.records).ok);
}

TEST_CASE("pipeline diagnostics and ordering") {
  Pipeline p(rect_pipeline());
  const StageConfig& s = p.config().stage;
  const Vec3 truth{3, 3, 0.2};
  FrameOutput out = p.process(0, 0, {TagInput{1, ranges_to(s, truth), std::nullopt, std::nullopt}});
  REQUIRE(out.fixes.size() == 1);
  CHECK(horizontal_distance(out.fixes[0].fix.position, truth) < 1e-6);
  REQUIRE(out.tracks.size() == 1);
  CHECK_FALSE(out.tracks[0].update.has_value());

  out = p.process(1, 33, {TagInput{1, ranges_to(s, truth, 2), std::nullopt, std::nullopt}});
  REQUIRE(out.diagnostics.size() == 1);
  CHECK(out.diagnostics[0].code == "InsufficientAnchors");
  CHECK(out.fixes.empty());
  CHECK(out.tracks.size() == 1);  // predicted only

  CHECK_THROWS_AS(p.process(1, 33, {}), Error);

  // a position fix from upstream is fused as-is
  PositionFix fix;
  fix.position = Vec3{3.01, 3.0, 0.2};
  fix.covariance = Mat3::Identity() * 0.01;
  out = p.process(2, 66, {TagInput{1, {}, fix, std::nullopt}});
  REQUIRE(out.tracks.size() == 1);
  CHECK(out.tracks[0].update == UpdateOutcome::Accepted);

  for (FrameIndex f = 3; f < 3 + 120; ++f) p.process(f, f * 33, {TagInput{1, ranges_to(s, truth), std::nullopt, std::nullopt}});
  CHECK(p.show_state().current_scene == "End");
  CHECK(p.zone_tracker("Z1", 1)->occupied());
}

TEST_CASE("force_scene and update_zone") {
  Pipeline p(rect_pipeline());
  p.process(0, 0, {});
  const SceneTransition t = p.force_scene("b");
  CHECK(t.forced);
  CHECK(t.from == "a");
  CHECK(t.to == "b");
  CHECK_THROWS_AS(p.force_scene("zzz"), Error);

  const StageConfig& s = p.config().stage;
  for (FrameIndex f = 1; f < 50; ++f) p.process(f, f * 33, {TagInput{1, ranges_to(s, Vec3{3, 3, 0.2}), std::nullopt, std::nullopt}});
  CHECK(p.zone_tracker("Z1", 1)->in_count() > 0);
  p.update_zone(ZoneDef{"Z1", Vec3{6, 6, 0}});
  CHECK(p.zone_tracker("Z1", 1) == nullptr);
  CHECK(p.config().stage.zones.front().center.x() == 6);
  CHECK_THROWS_AS(p.update_zone(ZoneDef{"Z1", Vec3{6, 6, 0}, 0.5, 0.4}), Error);
  p.update_zone(ZoneDef{"Z9", Vec3{1, 1, 0}});
  CHECK(p.config().stage.zones.size() == 2);
  CHECK_NOTHROW(p.process(60, 2000, {}));
}
