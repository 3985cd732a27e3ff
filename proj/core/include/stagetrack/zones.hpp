#pragma once

#include <optional>
#include <string>

#include "stagetrack/types.hpp"

namespace stagetrack {

/// Square trigger area with a hysteresis band. The default is a 65 x 65 cm
/// latch square inside a 75 x 75 cm exit square, latching after 100 frames.
struct ZoneDef {
  std::string id;
  Vec3 center = Vec3::Zero();  // z ignored
  double outer_half = 0.325;
  double exit_half = 0.375;
  int dwell_frames = 100;

  /// Throws Error{InvalidConfig} on violated invariants.
  void validate() const;
};

enum class Containment { Inside, Band, Outside };

Containment containment(const ZoneDef& zone, const Vec3& pos);

enum class ZoneEventKind { Latched, Released };

const char* to_string(ZoneEventKind kind);

struct ZoneEvent {
  std::string zone_id;
  TagId tag_id = 0;
  ZoneEventKind kind = ZoneEventKind::Latched;
  FrameIndex frame = 0;

  bool operator==(const ZoneEvent&) const = default;
};

/// Dwell/debounce state for one (zone, tag) pair. Symmetric: `dwell_frames`
/// consecutive Inside frames latch, `dwell_frames` consecutive Outside frames
/// release. Band frames reset whichever counter is running.
class ZoneTracker {
 public:
  ZoneTracker() = default;
  ZoneTracker(std::string zone_id, TagId tag_id);

  /// Throws Error{FrameOrder} unless frame is strictly greater than the last one.
  std::optional<ZoneEvent> step(const ZoneDef& zone, const Vec3& pos, FrameIndex frame);
  std::optional<ZoneEvent> step(const ZoneDef& zone, Containment c, FrameIndex frame);

  const std::string& zone_id() const { return zone_id_; }
  TagId tag_id() const { return tag_id_; }
  bool occupied() const { return occupied_; }
  int in_count() const { return in_count_; }
  int out_count() const { return out_count_; }
  std::optional<FrameIndex> last_frame() const { return last_frame_; }

 private:
  std::string zone_id_;
  TagId tag_id_ = 0;
  bool occupied_ = false;
  int in_count_ = 0;
  int out_count_ = 0;
  std::optional<FrameIndex> last_frame_;
};

}  // namespace stagetrack
