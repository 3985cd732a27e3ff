#pragma once

// Newline-delimited JSON event log. One object per line; every record has a
// "kind" (truth, fix, track, zone_event, scene, diag) and a "frame".

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagetrack/pipeline.hpp"
#include "stagetrack/types.hpp"

namespace stagetrack::log {

using Record = nlohmann::json;

Record truth(FrameIndex frame, TagId tag, const Vec3& pos);
Record fix(FrameIndex frame, TagId tag, const PositionFix& fix);
Record track(FrameIndex frame, const TrackOutput& t);
Record zone_event(const ZoneEvent& e);
Record scene(const SceneTransition& t);
Record diag(const Diagnostic& d);

/// Appends the records of one pipeline frame in a fixed order: fixes, tracks,
/// zone events, scene transitions, diagnostics.
void append(std::vector<Record>& out, const FrameOutput& frame);

ZoneEvent parse_zone_event(const Record& r);
SceneTransition parse_scene(const Record& r);
PositionFix parse_fix(const Record& r);

void write(std::ostream& os, const std::vector<Record>& records);
std::string dump_line(const Record& r);
/// Throws Error{InvalidConfig} on a malformed line.
std::vector<Record> read(std::istream& is);

}  // namespace stagetrack::log
