#include "stagetrack/event_log.hpp"

#include <istream>
#include <ostream>

#include "stagetrack/error.hpp"

namespace stagetrack::log {

using nlohmann::json;

namespace {

const char* outcome_name(UpdateOutcome o) {
  switch (o) {
    case UpdateOutcome::Accepted: return "accepted";
    case UpdateOutcome::Rejected: return "rejected";
    case UpdateOutcome::Reset: return "reset";
    case UpdateOutcome::NumericalBreakdown: return "numerical_breakdown";
  }
  return "unknown";
}

}  // namespace

Record truth(FrameIndex frame, TagId tag, const Vec3& p) {
  return {{"kind", "truth"}, {"frame", frame}, {"tag", tag}, {"x", p.x()}, {"y", p.y()}, {"z", p.z()}};
}

Record fix(FrameIndex frame, TagId tag, const PositionFix& f) {
  json cov = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cov.push_back(f.covariance(r, c));
  }
  return {{"kind", "fix"},
          {"frame", frame},
          {"tag", tag},
          {"x", f.position.x()},
          {"y", f.position.y()},
          {"z", f.position.z()},
          {"covariance", cov},
          {"residual_rms", f.residual_rms},
          {"n_anchors", f.n_anchors},
          {"timestamp_ms", f.timestamp_ms},
          {"mode", f.mode == SolveMode::Planar ? "planar" : "full3d"},
          {"converged", f.converged}};
}

Record track(FrameIndex frame, const TrackOutput& t) {
  Record r{{"kind", "track"},
           {"frame", frame},
           {"tag", t.tag_id},
           {"x", t.track.position.x()},
           {"y", t.track.position.y()},
           {"z", t.track.position.z()},
           {"vx", t.track.velocity.x()},
           {"vy", t.track.velocity.y()},
           {"vz", t.track.velocity.z()},
           {"pos_var", t.track.covariance.topLeftCorner<3, 3>().trace()},
           {"update", t.update ? json(outcome_name(*t.update)) : json(nullptr)}};
  if (t.heading) r["heading_rad"] = *t.heading;
  return r;
}

Record zone_event(const ZoneEvent& e) {
  return {{"kind", "zone_event"}, {"frame", e.frame}, {"zone", e.zone_id}, {"tag", e.tag_id}, {"event", to_string(e.kind)}};
}

Record scene(const SceneTransition& t) {
  return {{"kind", "scene"}, {"frame", t.frame}, {"from", t.from}, {"to", t.to}, {"forced", t.forced}};
}

Record diag(const Diagnostic& d) {
  Record r{{"kind", "diag"}, {"frame", d.frame}, {"code", d.code}, {"message", d.message}};
  if (d.tag_id) r["tag"] = *d.tag_id;
  for (const auto& [k, v] : d.data.items()) r[k] = v;
  return r;
}

void append(std::vector<Record>& out, const FrameOutput& frame) {
  for (const FixOutput& f : frame.fixes) out.push_back(fix(frame.frame, f.tag_id, f.fix));
  for (const TrackOutput& t : frame.tracks) out.push_back(track(frame.frame, t));
  for (const ZoneEvent& e : frame.zone_events) out.push_back(zone_event(e));
  for (const SceneTransition& t : frame.transitions) out.push_back(scene(t));
  for (const Diagnostic& d : frame.diagnostics) out.push_back(diag(d));
}

ZoneEvent parse_zone_event(const Record& r) {
  const std::string kind = r.at("event").get<std::string>();
  if (kind != "Latched" && kind != "Released") throw Error(ErrorCode::InvalidConfig, "bad zone event " + kind);
  return ZoneEvent{r.at("zone").get<std::string>(), r.at("tag").get<TagId>(),
                   kind == "Latched" ? ZoneEventKind::Latched : ZoneEventKind::Released,
                   r.at("frame").get<FrameIndex>()};
}

SceneTransition parse_scene(const Record& r) {
  return SceneTransition{r.at("from").get<std::string>(), r.at("to").get<std::string>(),
                         r.at("frame").get<FrameIndex>(), r.value("forced", false)};
}

PositionFix parse_fix(const Record& r) {
  PositionFix f;
  f.position = Vec3{r.at("x").get<double>(), r.at("y").get<double>(), r.at("z").get<double>()};
  if (r.contains("covariance")) {
    const json& c = r.at("covariance");
    for (int i = 0; i < 9; ++i) f.covariance(i / 3, i % 3) = c.at(i).get<double>();
  }
  f.residual_rms = r.value("residual_rms", 0.0);
  f.n_anchors = r.value("n_anchors", 0);
  f.timestamp_ms = r.value("timestamp_ms", std::int64_t{0});
  f.mode = r.value("mode", std::string("planar")) == "full3d" ? SolveMode::Full3d : SolveMode::Planar;
  f.converged = r.value("converged", true);
  return f;
}

std::string dump_line(const Record& r) { return r.dump(); }

void write(std::ostream& os, const std::vector<Record>& records) {
  for (const Record& r : records) os << r.dump() << '\n';
}

std::vector<Record> read(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.back().is_object() || !out.back().contains("kind")) {
      throw Error(ErrorCode::InvalidConfig, "log line " + std::to_string(lineno) + " has no kind");
    }
  }
  return out;
}

}  // namespace stagetrack::log
