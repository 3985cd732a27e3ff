#include "stagetrack/replay.hpp"

#include <istream>
#include <map>
#include <sstream>

#include "stagetrack/error.hpp"
#include "stagetrack/stage.hpp"

namespace stagetrack {

using nlohmann::json;

namespace {

struct FrameLog {
  std::map<TagId, Vec3> tracks;  // ascending tag order, as the pipeline steps them
  std::vector<ZoneEvent> zone_events;
  std::vector<SceneTransition> transitions;
  std::vector<SceneTransition> forced;
};

std::string describe(const ZoneEvent& e) {
  std::ostringstream os;
  os << "zone_event{" << e.zone_id << ", tag " << e.tag_id << ", " << to_string(e.kind) << "}";
  return os.str();
}

std::string describe(const SceneTransition& t) {
  return "scene{" + t.from + " -> " + t.to + "}";
}

ReplayCheckResult diverge(FrameIndex frame, const std::string& what) {
  return ReplayCheckResult{false, frame, "divergence at frame " + std::to_string(frame) + ": " + what};
}

template <typename T>
std::optional<std::string> compare(const std::vector<T>& expect, const std::vector<T>& logged) {
  const std::size_t n = std::max(expect.size(), logged.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= logged.size()) return "recomputed " + describe(expect[i]) + " missing from log";
    if (i >= expect.size()) return "logged " + describe(logged[i]) + " not reproduced";
    if (!(expect[i] == logged[i])) return "recomputed " + describe(expect[i]) + ", log has " + describe(logged[i]);
  }
  return std::nullopt;
}

}  // namespace

ReplayCheckResult replay_check(const std::vector<log::Record>& records) {
  if (records.empty()) return ReplayCheckResult{false, std::nullopt, "empty log"};
  const json& header = records.front();
  if (header.value("kind", "") != "diag" || header.value("code", "") != "header" || !header.contains("config")) {
    return ReplayCheckResult{false, std::nullopt, "log does not start with a header record"};
  }

  StageConfig stage;
  try {
    stage = parse_stage_config(header.at("config"));
  } catch (const Error& e) {
    return ReplayCheckResult{false, std::nullopt, std::string("header config: ") + e.what()};
  }

  std::map<FrameIndex, FrameLog> frames;
  try {
    for (std::size_t i = 1; i < records.size(); ++i) {
      const json& r = records[i];
      const std::string kind = r.at("kind").get<std::string>();
      const FrameIndex f = r.at("frame").get<FrameIndex>();
      if (kind == "track") {
        frames[f].tracks[r.at("tag").get<TagId>()] =
            Vec3{r.at("x").get<double>(), r.at("y").get<double>(), r.at("z").get<double>()};
      } else if (kind == "zone_event") {
        frames[f].zone_events.push_back(log::parse_zone_event(r));
      } else if (kind == "scene") {
        SceneTransition t = log::parse_scene(r);
        (t.forced ? frames[f].forced : frames[f].transitions).push_back(t);
      }
    }
  } catch (const std::exception& e) {
    return ReplayCheckResult{false, std::nullopt, std::string("malformed record: ") + e.what()};
  }

  Show show(stage.scenes, stage.zone_ids());
  ShowState state = show.initial_state();
  std::map<std::pair<std::string, TagId>, ZoneTracker> trackers;

  for (const auto& [frame, log] : frames) {
    std::vector<ZoneEvent> events;
    for (const ZoneDef& zone : stage.zones) {
      for (const auto& [tag, pos] : log.tracks) {
        auto key = std::make_pair(zone.id, tag);
        auto it = trackers.find(key);
        if (it == trackers.end()) it = trackers.emplace(key, ZoneTracker(zone.id, tag)).first;
        if (auto ev = it->second.step(zone, pos, frame)) events.push_back(*ev);
      }
    }
    if (auto d = compare(events, log.zone_events)) return diverge(frame, *d);

    for (const SceneTransition& t : log.forced) show.force_scene(state, t.to, frame);
    const auto transitions = show.step(state, events, frame);
    if (auto d = compare(transitions, log.transitions)) return diverge(frame, *d);
  }
  return ReplayCheckResult{true, std::nullopt, "ok: " + std::to_string(frames.size()) + " frames, final scene " + state.current_scene};
}

ReplayCheckResult replay_check(std::istream& is) {
  try {
    return replay_check(log::read(is));
  } catch (const Error& e) {
    return ReplayCheckResult{false, std::nullopt, e.what()};
  }
}

}  // namespace stagetrack
