#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagetrack/fusion.hpp"
#include "stagetrack/show.hpp"
#include "stagetrack/solver.hpp"
#include "stagetrack/stage.hpp"
#include "stagetrack/zones.hpp"

namespace stagetrack {

struct PipelineConfig {
  StageConfig stage;
  FilterParams filter;
  SolveOptions solve;  // fixed_height is taken from stage.tag_height
  double fps = 30.0;
};

/// Per-tag input for one frame: raw ranges to multilaterate, or a position
/// fix computed upstream (e.g. forwarded by the main tag).
struct TagInput {
  TagId tag_id = 0;
  std::vector<RangeObservation> ranges;
  std::optional<PositionFix> fix;
  std::optional<ImuSample> imu;
};

struct Diagnostic {
  FrameIndex frame = 0;
  std::optional<TagId> tag_id;
  std::string code;
  std::string message;
  nlohmann::json data = nlohmann::json::object();  // extra structured fields
};

struct FixOutput {
  TagId tag_id = 0;
  PositionFix fix;
};

struct TrackOutput {
  TagId tag_id = 0;
  TrackState track;
  std::optional<UpdateOutcome> update;  // none when predicted only
  std::optional<double> heading;
};

struct FrameOutput {
  FrameIndex frame = 0;
  std::vector<FixOutput> fixes;
  std::vector<TrackOutput> tracks;
  std::vector<ZoneEvent> zone_events;
  std::vector<SceneTransition> transitions;
  std::vector<Diagnostic> diagnostics;
};

/// Single-owner processing chain: multilaterate -> fuse -> dwell zones -> show.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Frames must be strictly increasing.
  FrameOutput process(FrameIndex frame, std::int64_t timestamp_ms,
                      const std::vector<TagInput>& inputs);

  /// Throws Error{UnknownScene}.
  SceneTransition force_scene(const std::string& scene_id);
  /// Replaces (or adds) a zone; its dwell trackers restart from idle.
  void update_zone(const ZoneDef& zone);

  const ShowState& show_state() const { return show_state_; }
  const Show& show() const { return show_; }
  const PipelineConfig& config() const { return config_; }
  const std::map<TagId, TrackState>& tracks() const { return tracks_; }
  std::optional<FrameIndex> last_frame() const { return last_frame_; }
  const ZoneTracker* zone_tracker(const std::string& zone_id, TagId tag) const;

 private:
  PipelineConfig config_;
  Show show_;
  ShowState show_state_;
  std::map<TagId, TrackState> tracks_;
  std::map<std::pair<std::string, TagId>, ZoneTracker> zone_trackers_;
  std::optional<FrameIndex> last_frame_;
};

}  // namespace stagetrack
