#include "stagetrack/telemetry.hpp"

#include <chrono>

#include "stagetrack/event_log.hpp"

namespace stagetrack::telemetry {

using nlohmann::json;

namespace {

// Log records carry kind/frame at top level; telemetry moves the rest into payload.
json payload_of(json record) {
  record.erase("kind");
  record.erase("frame");
  return record;
}

}  // namespace

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::Position: return "position";
    case Kind::Track: return "track";
    case Kind::ZoneEvent: return "zone_event";
    case Kind::Scene: return "scene";
    case Kind::Coverage: return "coverage";
    case Kind::Diag: return "diag";
  }
  return "diag";
}

std::optional<Kind> kind_from_string(const std::string& s) {
  for (Kind k : {Kind::Position, Kind::Track, Kind::ZoneEvent, Kind::Scene, Kind::Coverage, Kind::Diag}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string Message::to_line() const {
  return json{{"kind", to_string(kind)}, {"frame", frame}, {"wallclock_ms", wallclock_ms}, {"payload", payload}}.dump();
}

std::optional<Message> Message::parse(const std::string& line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto kind = kind_from_string(j.value("kind", ""));
  if (!kind) return std::nullopt;
  Message m;
  m.kind = *kind;
  m.frame = j.value("frame", FrameIndex{0});
  m.wallclock_ms = j.value("wallclock_ms", std::int64_t{0});
  m.payload = j.value("payload", json::object());
  return m;
}

std::vector<Message> from_frame(const FrameOutput& out, std::int64_t wallclock_ms) {
  std::vector<Message> msgs;
  for (const FixOutput& f : out.fixes) {
    msgs.push_back(Message{Kind::Position, payload_of(log::fix(out.frame, f.tag_id, f.fix)), out.frame, wallclock_ms});
  }
  for (const TrackOutput& t : out.tracks) {
    msgs.push_back(Message{Kind::Track, payload_of(log::track(out.frame, t)), out.frame, wallclock_ms});
  }
  for (const ZoneEvent& e : out.zone_events) {
    msgs.push_back(Message{Kind::ZoneEvent, payload_of(log::zone_event(e)), out.frame, wallclock_ms});
  }
  for (const SceneTransition& t : out.transitions) {
    msgs.push_back(Message{Kind::Scene, payload_of(log::scene(t)), out.frame, wallclock_ms});
  }
  for (const Diagnostic& d : out.diagnostics) msgs.push_back(from_diag(d, wallclock_ms));
  return msgs;
}

Message from_diag(const Diagnostic& d, std::int64_t wallclock_ms) {
  return Message{Kind::Diag, payload_of(log::diag(d)), d.frame, wallclock_ms};
}

Message from_coverage(const CoverageGrid& grid, FrameIndex frame, std::int64_t wallclock_ms) {
  json hdop = json::array();
  json covered = json::array();
  for (const CoverageCell& c : grid.cells) {
    hdop.push_back(c.hdop ? json(*c.hdop) : json(nullptr));
    covered.push_back(c.covered);
  }
  json payload{{"cell_size", grid.cell_size}, {"nx", grid.nx},           {"ny", grid.ny},
               {"hdop", hdop},                {"covered", covered},      {"covered_fraction", grid.covered_fraction}};
  return Message{Kind::Coverage, payload, frame, wallclock_ms};
}

const char* command_name(const CommandBody& body) {
  struct Visitor {
    const char* operator()(const MoveTag&) const { return "move_tag"; }
    const char* operator()(const ForceScene&) const { return "force_scene"; }
    const char* operator()(const UpdateZone&) const { return "update_zone"; }
    const char* operator()(const Pause&) const { return "pause"; }
    const char* operator()(const Resume&) const { return "resume"; }
    const char* operator()(const RequestCoverage&) const { return "coverage"; }
  };
  return std::visit(Visitor{}, body);
}

std::variant<OperatorCommand, std::string> parse_command(const std::string& line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::string("malformed command: not a JSON object");
  OperatorCommand cmd;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    cmd.issued_at = j.value("issued_at", std::int64_t{0});
    if (kind == "move_tag") {
      cmd.body = MoveTag{j.at("tag_id").get<TagId>(), j.at("x_m").get<double>(), j.at("y_m").get<double>()};
    } else if (kind == "force_scene") {
      cmd.body = ForceScene{j.at("scene_id").get<std::string>()};
    } else if (kind == "update_zone") {
      const json& z = j.at("zone");
      ZoneDef zone;
      zone.id = z.at("id").get<std::string>();
      zone.center = Vec3{z.at("x_m").get<double>(), z.at("y_m").get<double>(), 0.0};
      zone.outer_half = z.value("outer_half_m", zone.outer_half);
      zone.exit_half = z.value("exit_half_m", zone.exit_half);
      zone.dwell_frames = z.value("dwell_frames", zone.dwell_frames);
      cmd.body = UpdateZone{zone};
    } else if (kind == "pause") {
      cmd.body = Pause{};
    } else if (kind == "resume") {
      cmd.body = Resume{};
    } else if (kind == "coverage") {
      CoverageOptions o;
      o.cell_size = j.value("cell_size", o.cell_size);
      o.hdop_max = j.value("hdop_max", o.hdop_max);
      o.min_anchors = j.value("min_anchors", o.min_anchors);
      o.eval_height = j.value("eval_height", o.eval_height);
      cmd.body = RequestCoverage{o};
    } else {
      return "unknown command kind '" + kind + "'";
    }
  } catch (const json::exception& e) {
    return std::string("malformed command: ") + e.what();
  }
  return cmd;
}

std::string to_line(const OperatorCommand& cmd) {
  json j{{"issued_at", cmd.issued_at}};
  j["kind"] = command_name(cmd.body);
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, MoveTag>) {
          j["tag_id"] = b.tag_id;
          j["x_m"] = b.x_m;
          j["y_m"] = b.y_m;
        } else if constexpr (std::is_same_v<T, ForceScene>) {
          j["scene_id"] = b.scene_id;
        } else if constexpr (std::is_same_v<T, UpdateZone>) {
          j["zone"] = {{"id", b.zone.id},
                       {"x_m", b.zone.center.x()},
                       {"y_m", b.zone.center.y()},
                       {"outer_half_m", b.zone.outer_half},
                       {"exit_half_m", b.zone.exit_half},
                       {"dwell_frames", b.zone.dwell_frames}};
        } else if constexpr (std::is_same_v<T, RequestCoverage>) {
          j["cell_size"] = b.options.cell_size;
          j["hdop_max"] = b.options.hdop_max;
          j["min_anchors"] = b.options.min_anchors;
          j["eval_height"] = b.options.eval_height;
        }
      },
      cmd.body);
  return j.dump();
}

Hub::Hub(std::size_t per_client_capacity) : capacity_(per_client_capacity) {}

int Hub::add_client() {
  std::lock_guard lock(mu_);
  const int id = next_id_++;
  clients_[id];
  return id;
}

void Hub::remove_client(int id) {
  {
    std::lock_guard lock(mu_);
    clients_.erase(id);
  }
  cv_.notify_all();
}

std::vector<int> Hub::publish(const std::string& line) {
  std::vector<int> dropped;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, c] : clients_) {
      if (c.dropped || c.closed) continue;
      if (c.queue.size() >= capacity_) {
        c.dropped = true;
        c.queue.clear();
        dropped.push_back(id);
        continue;
      }
      c.queue.push_back(line);
    }
  }
  cv_.notify_all();
  return dropped;
}

bool Hub::send_to(int id, const std::string& line) {
  {
    std::lock_guard lock(mu_);
    auto it = clients_.find(id);
    if (it == clients_.end() || it->second.dropped || it->second.closed) return false;
    if (it->second.queue.size() >= capacity_) {
      it->second.dropped = true;
      it->second.queue.clear();
      return false;
    }
    it->second.queue.push_back(line);
  }
  cv_.notify_all();
  return true;
}

std::optional<std::string> Hub::pop(int id, int timeout_ms) {
  std::unique_lock lock(mu_);
  auto ready = [&] {
    auto it = clients_.find(id);
    return it == clients_.end() || it->second.dropped || it->second.closed || !it->second.queue.empty();
  };
  cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms), ready);
  auto it = clients_.find(id);
  if (it == clients_.end() || it->second.dropped || it->second.queue.empty()) return std::nullopt;
  std::string line = std::move(it->second.queue.front());
  it->second.queue.pop_front();
  return line;
}

bool Hub::is_dropped(int id) const {
  std::lock_guard lock(mu_);
  auto it = clients_.find(id);
  return it == clients_.end() || it->second.dropped;
}

bool Hub::all_drained() const {
  std::lock_guard lock(mu_);
  for (const auto& [id, c] : clients_) {
    if (!c.dropped && !c.queue.empty()) return false;
  }
  return true;
}

void Hub::close_all() {
  {
    std::lock_guard lock(mu_);
    for (auto& [id, c] : clients_) c.closed = true;
  }
  cv_.notify_all();
}

std::size_t Hub::client_count() const {
  std::lock_guard lock(mu_);
  return clients_.size();
}

}  // namespace stagetrack::telemetry
