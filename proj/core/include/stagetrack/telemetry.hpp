#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "stagetrack/geometry.hpp"
#include "stagetrack/pipeline.hpp"
#include "stagetrack/zones.hpp"

namespace stagetrack::telemetry {

enum class Kind { Position, Track, ZoneEvent, Scene, Coverage, Diag };

const char* to_string(Kind kind);
std::optional<Kind> kind_from_string(const std::string& s);

/// One line of the telemetry stream:
///   {"kind":..., "frame":..., "wallclock_ms":..., "payload":{...}}
struct Message {
  Kind kind = Kind::Diag;
  nlohmann::json payload = nlohmann::json::object();
  FrameIndex frame = 0;
  std::int64_t wallclock_ms = 0;

  std::string to_line() const;
  static std::optional<Message> parse(const std::string& line);
};

/// Telemetry messages for one pipeline frame, in log order.
std::vector<Message> from_frame(const FrameOutput& out, std::int64_t wallclock_ms);
Message from_diag(const Diagnostic& d, std::int64_t wallclock_ms);
Message from_coverage(const CoverageGrid& grid, FrameIndex frame, std::int64_t wallclock_ms);

struct MoveTag {
  TagId tag_id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
};
struct ForceScene {
  std::string scene_id;
};
struct UpdateZone {
  ZoneDef zone;
};
struct Pause {};
struct Resume {};
/// Console overlay request; answered with one coverage message.
struct RequestCoverage {
  CoverageOptions options;
};

using CommandBody = std::variant<MoveTag, ForceScene, UpdateZone, Pause, Resume, RequestCoverage>;

struct OperatorCommand {
  CommandBody body;
  std::int64_t issued_at = 0;
};

const char* command_name(const CommandBody& body);

/// Parses {"kind":"move_tag","tag_id":1,"x_m":..,"y_m":..,"issued_at":..} and
/// friends. On failure returns the error text.
std::variant<OperatorCommand, std::string> parse_command(const std::string& line);
std::string to_line(const OperatorCommand& cmd);

/// Fan-out of telemetry lines to clients with bounded per-client queues.
/// Publishing never blocks: a client whose queue is full is dropped.
class Hub {
 public:
  explicit Hub(std::size_t per_client_capacity = 4096);

  int add_client();
  void remove_client(int id);

  /// Returns ids dropped for overflow during this call.
  std::vector<int> publish(const std::string& line);
  /// Queues a line for one client; false if unknown, dropped or full.
  bool send_to(int id, const std::string& line);

  /// Blocks up to `timeout_ms` for the next line. nullopt on timeout or
  /// once the client is dropped/closed and its queue is drained.
  std::optional<std::string> pop(int id, int timeout_ms);

  bool is_dropped(int id) const;
  /// True when every live client queue is empty.
  bool all_drained() const;
  void close_all();
  std::size_t client_count() const;
  std::size_t capacity() const { return capacity_; }

 private:
  struct Client {
    std::deque<std::string> queue;
    bool dropped = false;
    bool closed = false;
  };
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<int, Client> clients_;
  int next_id_ = 1;
};

}  // namespace stagetrack::telemetry
