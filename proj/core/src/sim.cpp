#include "stagetrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stagetrack/error.hpp"

namespace stagetrack {

using nlohmann::json;

Vec3 MotionScript::position_at(TagId tag, double t) const {
  const auto it = tags.find(tag);
  if (it == tags.end() || it->second.empty()) {
    throw Error(ErrorCode::InvalidConfig, "no motion for tag " + std::to_string(tag));
  }
  const auto& wps = it->second;
  if (t <= wps.front().t) return wps.front().position;
  if (t >= wps.back().t) return wps.back().position;
  const auto next = std::upper_bound(wps.begin(), wps.end(), t,
                                     [](double v, const Waypoint& w) { return v < w.t; });
  const Waypoint& b = *next;
  const Waypoint& a = *(next - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return a.position + s * (b.position - a.position);
}

void MotionScript::validate(const StageConfig& stage) const {
  for (const auto& [tag, wps] : tags) {
    if (wps.empty()) throw Error(ErrorCode::InvalidConfig, "tag " + std::to_string(tag) + " has no waypoints");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      if (i > 0 && !(wps[i].t > wps[i - 1].t)) {
        throw Error(ErrorCode::InvalidConfig, "waypoint times must increase (tag " + std::to_string(tag) + ")");
      }
      const Vec3& p = wps[i].position;
      if (!p.allFinite() || p.x() < 0.0 || p.x() > stage.width || p.y() < 0.0 || p.y() > stage.depth) {
        throw Error(ErrorCode::InvalidConfig, "waypoint outside stage (tag " + std::to_string(tag) + ")");
      }
    }
  }
}

MotionScript parse_motion_script(const json& doc) {
  MotionScript script;
  try {
    for (const json& t : doc.at("tags")) {
      const TagId id = t.at("id").get<TagId>();
      auto& wps = script.tags[id];
      for (const json& w : t.at("waypoints")) {
        wps.push_back(Waypoint{w.at("t").get<double>(),
                               Vec3{w.at("x").get<double>(), w.at("y").get<double>(), w.value("z", 0.2)}});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("motion script: ") + e.what());
  }
  return script;
}

MotionScript load_motion_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read script " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_motion_script(doc);
}

json to_json(const MotionScript& script) {
  json tags = json::array();
  for (const auto& [id, wps] : script.tags) {
    json w = json::array();
    for (const Waypoint& p : wps) {
      w.push_back({{"t", p.t}, {"x", p.position.x()}, {"y", p.position.y()}, {"z", p.position.z()}});
    }
    tags.push_back({{"id", id}, {"waypoints", w}});
  }
  return {{"tags", tags}};
}

NoiseModel NoiseModel::noise_free() {
  return NoiseModel{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
}

void NoiseModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(sigma_los >= 0.0 && sigma_nlos >= 0.0 && nlos_bias_mean >= 0.0 && imu_accel_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise sigmas must be >= 0");
  }
  if (!prob(dropout_los) || !prob(dropout_nlos)) {
    throw Error(ErrorCode::InvalidConfig, "dropout probabilities must be in [0, 1]");
  }
}

NoiseModel parse_noise_model(const json& doc) {
  NoiseModel n;
  n.sigma_los = doc.value("sigma_los_m", n.sigma_los);
  n.sigma_nlos = doc.value("sigma_nlos_m", n.sigma_nlos);
  n.nlos_bias_mean = doc.value("nlos_bias_mean_m", n.nlos_bias_mean);
  n.dropout_los = doc.value("dropout_los", n.dropout_los);
  n.dropout_nlos = doc.value("dropout_nlos", n.dropout_nlos);
  n.imu_accel_sigma = doc.value("imu_accel_sigma", n.imu_accel_sigma);
  n.validate();
  return n;
}

json to_json(const NoiseModel& n) {
  return {{"sigma_los_m", n.sigma_los},     {"sigma_nlos_m", n.sigma_nlos},
          {"nlos_bias_mean_m", n.nlos_bias_mean}, {"dropout_los", n.dropout_los},
          {"dropout_nlos", n.dropout_nlos}, {"imu_accel_sigma", n.imu_accel_sigma}};
}

bool segment_intersects_box(const Vec3& a, const Vec3& b, const Box& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec3 d = b - a;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (a[axis] < box.min[axis] || a[axis] > box.max[axis]) return false;
      continue;
    }
    double lo = (box.min[axis] - a[axis]) / d[axis];
    double hi = (box.max[axis] - a[axis]) / d[axis];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  return true;
}

World::World(StageConfig stage, MotionScript script, NoiseModel noise, std::uint64_t seed, double fps)
    : stage_(std::move(stage)), script_(std::move(script)), noise_(noise), rng_(seed), fps_(fps) {
  if (!(fps_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "fps must be > 0");
  stage_.validate();
  script_.validate(stage_);
  noise_.validate();
}

SimFrameOutput World::tick(FrameIndex frame) {
  last_frame_ = frame;
  SimFrameOutput out;
  out.frame = frame;
  const double t = time_of(frame);
  const double dt = 1.0 / fps_;
  const auto ts_ms = static_cast<std::int64_t>(std::llround(t * 1000.0));

  std::vector<AnchorId> anchor_order;
  for (const Anchor& a : stage_.anchors) anchor_order.push_back(a.id);
  std::sort(anchor_order.begin(), anchor_order.end());

  // std::map iterates tags in ascending id order.
  for (const auto& [tag, wps] : script_.tags) {
    const Vec3 p = script_.position_at(tag, t);
    out.truth[tag] = p;
    for (AnchorId aid : anchor_order) {
      const Anchor& anchor = *stage_.find_anchor(aid);
      const double true_d = (anchor.position - p).norm();
      if (true_d > anchor.max_range) continue;
      bool nlos = false;
      for (const Box& box : stage_.occluders) {
        if (segment_intersects_box(p, anchor.position, box)) {
          nlos = true;
          break;
        }
      }
      if (nlos) out.nlos.emplace_back(tag, aid);
      const double dropout = nlos ? noise_.dropout_nlos : noise_.dropout_los;
      if (rng_.uniform() < dropout) {
        ++out.dropped;
        continue;
      }
      const double sigma = nlos ? noise_.sigma_nlos : noise_.sigma_los;
      double d = true_d + sigma * rng_.normal();
      if (nlos) d += rng_.exponential(noise_.nlos_bias_mean);
      RangeMeasurement m;
      m.tag_id = tag;
      m.anchor_id = aid;
      m.distance = std::max(0.0, d);
      // Noise-free runs still need a positive weight for the solver.
      m.sigma = sigma > 0.0 ? sigma : 0.01;
      m.quality = nlos ? 96 : 255;
      m.timestamp_ms = ts_ms;
      out.measurements.push_back(m);
    }
  }

  for (const auto& [tag, wps] : script_.tags) {
    // Mean acceleration over the last frame interval (backward second difference).
    const Vec3 p0 = script_.position_at(tag, t);
    const Vec3 p1 = script_.position_at(tag, t - dt);
    const Vec3 p2 = script_.position_at(tag, t - 2.0 * dt);
    Vec3 accel = (p0 - 2.0 * p1 + p2) / (dt * dt);
    accel.z() += kStandardGravity;
    for (int k = 0; k < 3; ++k) accel[k] += noise_.imu_accel_sigma * rng_.normal();
    ImuSample s;
    s.accel = accel;
    s.mag = kSimMagneticField;
    s.timestamp_ms = ts_ms;
    out.imu.push_back(TagImu{tag, s});
  }
  return out;
}

void World::move_tag(TagId tag, double x, double y, double speed) {
  const double now = time_of(last_frame_);
  const Vec3 from = script_.tags.count(tag) ? script_.position_at(tag, now) : Vec3{x, y, stage_.tag_height};
  Vec3 to{std::clamp(x, 0.0, stage_.width), std::clamp(y, 0.0, stage_.depth), from.z()};
  const double travel = (to - from).norm() / std::max(speed, 1e-3);
  auto& wps = script_.tags[tag];
  wps.clear();
  wps.push_back(Waypoint{now, from});
  if (travel > 0.0) wps.push_back(Waypoint{now + travel, to});
}

}  // namespace stagetrack
