#include "stagetrack/pipeline.hpp"

#include <algorithm>
#include <set>

#include "stagetrack/error.hpp"

namespace stagetrack {

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)), show_(config_.stage.scenes, config_.stage.zone_ids()) {
  if (!(config_.fps > 0.0)) throw Error(ErrorCode::InvalidConfig, "fps must be > 0");
  config_.solve.mode = SolveMode::Planar;
  config_.solve.fixed_height = config_.stage.tag_height;
  show_state_ = show_.initial_state();
}

FrameOutput Pipeline::process(FrameIndex frame, std::int64_t timestamp_ms,
                              const std::vector<TagInput>& inputs) {
  if (last_frame_ && frame <= *last_frame_) {
    throw Error(ErrorCode::FrameOrder, "pipeline frame " + std::to_string(frame) + " after " +
                                           std::to_string(*last_frame_));
  }
  const double dt = last_frame_ ? static_cast<double>(frame - *last_frame_) / config_.fps : 0.0;
  last_frame_ = frame;

  FrameOutput out;
  out.frame = frame;

  std::map<TagId, const TagInput*> by_tag;
  for (const TagInput& in : inputs) by_tag[in.tag_id] = &in;
  std::set<TagId> tags;
  for (const auto& [id, _] : by_tag) tags.insert(id);
  for (const auto& [id, _] : tracks_) tags.insert(id);

  for (TagId tag : tags) {
    const auto in_it = by_tag.find(tag);
    const TagInput* input = in_it == by_tag.end() ? nullptr : in_it->second;
    auto track_it = tracks_.find(tag);

    std::optional<Vec3> accel;
    if (input && input->imu) {
      // Props slide without tumbling: body axes are taken as world axes.
      accel = input->imu->accel - Vec3{0.0, 0.0, kStandardGravity};
    }
    if (track_it != tracks_.end()) {
      track_it->second = predict(track_it->second, dt, accel, config_.filter);
    }

    std::optional<PositionFix> fix;
    if (input) {
      if (input->fix) {
        fix = input->fix;
      } else {
        try {
          std::optional<Vec3> prior;
          if (track_it != tracks_.end()) prior = track_it->second.position;
          fix = multilaterate(input->ranges, config_.solve, prior);
        } catch (const Error& e) {
          out.diagnostics.push_back(Diagnostic{frame, tag, std::string(to_string(e.code())), e.what()});
        }
      }
    }

    std::optional<UpdateOutcome> outcome;
    if (fix) {
      fix->timestamp_ms = timestamp_ms;
      if (!fix->converged) {
        out.diagnostics.push_back(Diagnostic{frame, tag, "NoConvergence",
                                             "solver hit max_iterations; best iterate used"});
      }
      out.fixes.push_back(FixOutput{tag, *fix});
      if (track_it == tracks_.end()) {
        track_it = tracks_.emplace(tag, init_track(*fix, config_.filter)).first;
      } else {
        UpdateResult res = update_position(track_it->second, *fix, config_.filter);
        outcome = res.outcome;
        track_it->second = res.track;
        if (res.outcome == UpdateOutcome::NumericalBreakdown) {
          out.diagnostics.push_back(Diagnostic{frame, tag, "NumericalBreakdown", "track reinitialized"});
        } else if (res.outcome == UpdateOutcome::Reset) {
          out.diagnostics.push_back(Diagnostic{frame, tag, "TrackReset", "consecutive gate rejections"});
        }
      }
    }

    if (track_it != tracks_.end()) {
      TrackOutput t{tag, track_it->second, outcome, std::nullopt};
      if (input && input->imu) {
        try {
          t.heading = tilt_compensated_heading(*input->imu);
        } catch (const Error&) {
        }
      }
      out.tracks.push_back(std::move(t));
    }
  }

  for (const ZoneDef& zone : config_.stage.zones) {
    for (const auto& [tag, track] : tracks_) {
      auto key = std::make_pair(zone.id, tag);
      auto it = zone_trackers_.find(key);
      if (it == zone_trackers_.end()) it = zone_trackers_.emplace(key, ZoneTracker(zone.id, tag)).first;
      if (auto ev = it->second.step(zone, track.position, frame)) out.zone_events.push_back(*ev);
    }
  }

  out.transitions = show_.step(show_state_, out.zone_events, frame);
  return out;
}

SceneTransition Pipeline::force_scene(const std::string& scene_id) {
  show_.force_scene(show_state_, scene_id, last_frame_.value_or(0));
  return show_state_.history.back();
}

void Pipeline::update_zone(const ZoneDef& zone) {
  zone.validate();
  auto& zones = config_.stage.zones;
  const auto it = std::find_if(zones.begin(), zones.end(), [&](const ZoneDef& z) { return z.id == zone.id; });
  if (it == zones.end()) {
    zones.push_back(zone);
  } else {
    *it = zone;
  }
  show_ = Show(config_.stage.scenes, config_.stage.zone_ids());
  for (auto z = zone_trackers_.begin(); z != zone_trackers_.end();) {
    if (z->first.first == zone.id) {
      show_state_.occupancy.erase(z->first);
      z = zone_trackers_.erase(z);
    } else {
      ++z;
    }
  }
}

const ZoneTracker* Pipeline::zone_tracker(const std::string& zone_id, TagId tag) const {
  const auto it = zone_trackers_.find({zone_id, tag});
  return it == zone_trackers_.end() ? nullptr : &it->second;
}

}  // namespace stagetrack
