#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagetrack/fusion.hpp"
#include "stagetrack/ranging.hpp"
#include "stagetrack/rng.hpp"
#include "stagetrack/stage.hpp"
#include "stagetrack/types.hpp"

namespace stagetrack {

struct Waypoint {
  double t = 0.0;  // s
  Vec3 position = Vec3::Zero();
};

/// Piecewise-linear tag motion; each tag holds its first waypoint before it
/// and its last waypoint after it.
struct MotionScript {
  std::map<TagId, std::vector<Waypoint>> tags;

  Vec3 position_at(TagId tag, double t) const;
  /// Throws Error{InvalidConfig} on non-increasing times or waypoints off stage.
  void validate(const StageConfig& stage) const;
};

MotionScript parse_motion_script(const nlohmann::json& doc);
MotionScript load_motion_script(const std::filesystem::path& path);
nlohmann::json to_json(const MotionScript& script);

struct NoiseModel {
  double sigma_los = 0.25;
  double sigma_nlos = 0.60;
  double nlos_bias_mean = 0.40;  // exponential, positive
  double dropout_los = 0.01;
  double dropout_nlos = 0.25;
  double imu_accel_sigma = 0.05;

  static NoiseModel noise_free();
  /// sigmas >= 0 (0 only for the noise-free limit), probabilities in [0, 1].
  void validate() const;
};

NoiseModel parse_noise_model(const nlohmann::json& doc);
nlohmann::json to_json(const NoiseModel& noise);

/// Closed segment vs closed box, slab method.
bool segment_intersects_box(const Vec3& a, const Vec3& b, const Box& box);

struct TagImu {
  TagId tag_id = 0;
  ImuSample sample;
};

struct SimFrameOutput {
  FrameIndex frame = 0;
  std::map<TagId, Vec3> truth;
  std::vector<RangeMeasurement> measurements;
  std::vector<TagImu> imu;
  std::vector<std::pair<TagId, AnchorId>> nlos;  // pairs classified NLOS this frame
  int dropped = 0;
};

/// Earth field used for synthesized magnetometer samples (north, downward dip).
inline const Vec3 kSimMagneticField{30.0, 0.0, -20.0};

/// Deterministic stage world. All randomness comes from one generator in a
/// fixed draw order: for each tag ascending, for each anchor ascending in
/// range, a dropout uniform, then (if kept) a Gaussian, then (NLOS only) an
/// exponential bias; afterwards three accelerometer Gaussians per tag.
class World {
 public:
  World(StageConfig stage, MotionScript script, NoiseModel noise, std::uint64_t seed, double fps);

  SimFrameOutput tick(FrameIndex frame);

  /// Redirects a tag from its current position toward (x, y) at `speed` m/s,
  /// holding there afterwards. Coordinates are clamped to the stage.
  void move_tag(TagId tag, double x, double y, double speed = 1.0);

  const StageConfig& stage() const { return stage_; }
  const MotionScript& script() const { return script_; }
  double fps() const { return fps_; }
  double time_of(FrameIndex frame) const { return static_cast<double>(frame) / fps_; }

 private:
  StageConfig stage_;
  MotionScript script_;
  NoiseModel noise_;
  Rng rng_;
  double fps_;
  FrameIndex last_frame_ = 0;
};

inline SimFrameOutput sim_tick(World& world, FrameIndex frame) { return world.tick(frame); }

}  // namespace stagetrack
