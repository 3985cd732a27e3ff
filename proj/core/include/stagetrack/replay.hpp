#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stagetrack/event_log.hpp"

namespace stagetrack {

struct ReplayCheckResult {
  bool ok = true;
  std::optional<FrameIndex> divergence_frame;
  std::string message;
};

/// Re-runs the zone and show state machines over the logged track positions
/// and compares the recomputed zone events and scene transitions with the
/// logged ones. The log must start with the simulation header record.
ReplayCheckResult replay_check(const std::vector<log::Record>& records);
ReplayCheckResult replay_check(std::istream& is);

}  // namespace stagetrack
