#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stagetrack/types.hpp"
#include "stagetrack/zones.hpp"

namespace stagetrack {

/// Reserved scene id for the terminal state.
inline constexpr const char* kEndScene = "End";

struct SceneRequirement {
  std::string zone_id;
  std::optional<TagId> tag;  // nullopt = any tag

  bool operator==(const SceneRequirement&) const = default;
};

struct SceneDef {
  std::string id;
  std::vector<SceneRequirement> requirements;  // conjunctive
  std::string next = kEndScene;
};

struct SceneTransition {
  std::string from;
  std::string to;
  FrameIndex frame = 0;
  bool forced = false;

  bool operator==(const SceneTransition&) const = default;
};

struct ShowState {
  std::string current_scene;
  std::map<std::pair<std::string, TagId>, bool> occupancy;
  std::vector<SceneTransition> history;
};

/// Scene-progression engine over a validated scene graph. The first scene in
/// the list is the opening scene. Committed transitions are never rolled back.
class Show {
 public:
  /// Validates requirement zones against `zone_ids`, `next` links, and
  /// acyclicity. Throws Error{UnknownZone}, Error{UnknownScene} or
  /// Error{InvalidConfig}.
  Show(std::vector<SceneDef> scenes, const std::vector<std::string>& zone_ids);

  ShowState initial_state() const;

  /// Applies this frame's zone events, then advances (possibly several times)
  /// while the current scene's requirements are all met. Returns transitions
  /// taken this frame.
  std::vector<SceneTransition> step(ShowState& state, const std::vector<ZoneEvent>& events,
                                    FrameIndex frame) const;

  /// Operator override; records a forced transition and keeps occupancy.
  void force_scene(ShowState& state, const std::string& scene_id, FrameIndex frame) const;

  bool requirements_met(const ShowState& state, const std::string& scene_id) const;
  const SceneDef* find(const std::string& scene_id) const;
  const std::vector<SceneDef>& scenes() const { return scenes_; }
  bool has_zone(const std::string& zone_id) const;

 private:
  std::vector<SceneDef> scenes_;
  std::vector<std::string> zone_ids_;
};

}  // namespace stagetrack
