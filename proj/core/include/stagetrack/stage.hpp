#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagetrack/show.hpp"
#include "stagetrack/types.hpp"
#include "stagetrack/zones.hpp"

namespace stagetrack {

struct StageConfig {
  double width = 10.42;
  double depth = 10.44;
  /// Fixed height used for planar solving (cube tags sit at half of 40 cm).
  double tag_height = 0.2;
  std::vector<Anchor> anchors;
  std::vector<Box> occluders;
  std::vector<ZoneDef> zones;
  std::vector<SceneDef> scenes;

  /// Throws Error{InvalidConfig}.
  void validate() const;
  std::vector<Vec3> anchor_positions() const;
  std::vector<std::string> zone_ids() const;
  const Anchor* find_anchor(AnchorId id) const;
};

/// Parses the JSON stage config (keys stage.width_m, stage.depth_m,
/// anchors[].id/x_m/y_m/z_m/max_range_m, occluders[].min/max, zones[], scenes[]).
StageConfig parse_stage_config(const nlohmann::json& doc);
StageConfig load_stage_config(const std::filesystem::path& path);
nlohmann::json to_json(const StageConfig& stage);

/// Anchors on a w x h rectangle centered on the stage, ids 1..4 counter-clockwise.
std::vector<Anchor> centered_rectangle_anchors(double stage_width, double stage_depth, double rect_w,
                                               double rect_h, double height = 3.0,
                                               double max_range = 30.0);

}  // namespace stagetrack
