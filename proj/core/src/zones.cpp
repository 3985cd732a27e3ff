#include "stagetrack/zones.hpp"

#include <algorithm>
#include <cmath>

#include "stagetrack/error.hpp"

namespace stagetrack {

void ZoneDef::validate() const {
  if (id.empty()) throw Error(ErrorCode::InvalidConfig, "zone id is empty");
  if (!(outer_half > 0.0) || !(exit_half >= outer_half)) {
    throw Error(ErrorCode::InvalidConfig, "zone " + id + ": need exit_half >= outer_half > 0");
  }
  if (dwell_frames < 1) throw Error(ErrorCode::InvalidConfig, "zone " + id + ": dwell_frames must be >= 1");
}

Containment containment(const ZoneDef& zone, const Vec3& pos) {
  const double dx = std::abs(pos.x() - zone.center.x());
  const double dy = std::abs(pos.y() - zone.center.y());
  if (dx <= zone.outer_half && dy <= zone.outer_half) return Containment::Inside;
  if (dx > zone.exit_half || dy > zone.exit_half) return Containment::Outside;
  return Containment::Band;
}

const char* to_string(ZoneEventKind kind) {
  return kind == ZoneEventKind::Latched ? "Latched" : "Released";
}

ZoneTracker::ZoneTracker(std::string zone_id, TagId tag_id)
    : zone_id_(std::move(zone_id)), tag_id_(tag_id) {}

std::optional<ZoneEvent> ZoneTracker::step(const ZoneDef& zone, const Vec3& pos, FrameIndex frame) {
  return step(zone, containment(zone, pos), frame);
}

std::optional<ZoneEvent> ZoneTracker::step(const ZoneDef& zone, Containment c, FrameIndex frame) {
  if (last_frame_ && frame <= *last_frame_) {
    throw Error(ErrorCode::FrameOrder, "frame " + std::to_string(frame) + " after " +
                                           std::to_string(*last_frame_));
  }
  last_frame_ = frame;

  if (!occupied_) {
    if (c != Containment::Inside) {
      in_count_ = 0;
      return std::nullopt;
    }
    in_count_ = std::min(in_count_ + 1, zone.dwell_frames);
    if (in_count_ < zone.dwell_frames) return std::nullopt;
    occupied_ = true;
    in_count_ = 0;
    return ZoneEvent{zone_id_, tag_id_, ZoneEventKind::Latched, frame};
  }

  if (c != Containment::Outside) {
    out_count_ = 0;
    return std::nullopt;
  }
  out_count_ = std::min(out_count_ + 1, zone.dwell_frames);
  if (out_count_ < zone.dwell_frames) return std::nullopt;
  occupied_ = false;
  out_count_ = 0;
  return ZoneEvent{zone_id_, tag_id_, ZoneEventKind::Released, frame};
}

}  // namespace stagetrack
