#include "stagetrack/show.hpp"

#include <algorithm>
#include <set>

#include "stagetrack/error.hpp"

namespace stagetrack {

Show::Show(std::vector<SceneDef> scenes, const std::vector<std::string>& zone_ids)
    : scenes_(std::move(scenes)), zone_ids_(zone_ids) {
  std::set<std::string> ids;
  for (const SceneDef& s : scenes_) {
    if (s.id.empty() || s.id == kEndScene) {
      throw Error(ErrorCode::InvalidConfig, "invalid scene id '" + s.id + "'");
    }
    if (!ids.insert(s.id).second) throw Error(ErrorCode::InvalidConfig, "duplicate scene " + s.id);
  }
  for (const SceneDef& s : scenes_) {
    if (s.next != kEndScene && !ids.count(s.next)) {
      throw Error(ErrorCode::UnknownScene, s.id + " -> " + s.next);
    }
    for (const SceneRequirement& r : s.requirements) {
      if (!has_zone(r.zone_id)) throw Error(ErrorCode::UnknownZone, s.id + " requires " + r.zone_id);
    }
  }
  // Each scene has one successor, so following next from every scene must
  // reach End within |scenes| hops.
  for (const SceneDef& s : scenes_) {
    std::string cur = s.id;
    for (std::size_t hops = 0; cur != kEndScene; ++hops) {
      if (hops > scenes_.size()) throw Error(ErrorCode::InvalidConfig, "scene graph has a cycle through " + s.id);
      cur = find(cur)->next;
    }
  }
}

ShowState Show::initial_state() const {
  ShowState st;
  st.current_scene = scenes_.empty() ? std::string(kEndScene) : scenes_.front().id;
  return st;
}

bool Show::has_zone(const std::string& zone_id) const {
  return std::find(zone_ids_.begin(), zone_ids_.end(), zone_id) != zone_ids_.end();
}

const SceneDef* Show::find(const std::string& scene_id) const {
  for (const SceneDef& s : scenes_) {
    if (s.id == scene_id) return &s;
  }
  return nullptr;
}

bool Show::requirements_met(const ShowState& state, const std::string& scene_id) const {
  const SceneDef* scene = find(scene_id);
  if (!scene) return false;
  for (const SceneRequirement& req : scene->requirements) {
    bool met = false;
    for (const auto& [key, occupied] : state.occupancy) {
      if (occupied && key.first == req.zone_id && (!req.tag || *req.tag == key.second)) {
        met = true;
        break;
      }
    }
    if (!met) return false;
  }
  return true;
}

std::vector<SceneTransition> Show::step(ShowState& state, const std::vector<ZoneEvent>& events,
                                        FrameIndex frame) const {
  for (const ZoneEvent& e : events) {
    if (!has_zone(e.zone_id)) throw Error(ErrorCode::UnknownZone, e.zone_id);
    state.occupancy[{e.zone_id, e.tag_id}] = e.kind == ZoneEventKind::Latched;
  }

  std::vector<SceneTransition> taken;
  // Bounded by the chain length since the graph is acyclic.
  while (state.current_scene != kEndScene) {
    const SceneDef* scene = find(state.current_scene);
    if (!scene) throw Error(ErrorCode::UnknownScene, state.current_scene);
    if (!requirements_met(state, scene->id)) break;
    SceneTransition t{scene->id, scene->next, frame, false};
    state.history.push_back(t);
    taken.push_back(t);
    state.current_scene = scene->next;
  }
  return taken;
}

void Show::force_scene(ShowState& state, const std::string& scene_id, FrameIndex frame) const {
  if (scene_id != kEndScene && !find(scene_id)) throw Error(ErrorCode::UnknownScene, scene_id);
  state.history.push_back(SceneTransition{state.current_scene, scene_id, frame, true});
  state.current_scene = scene_id;
}

}  // namespace stagetrack
