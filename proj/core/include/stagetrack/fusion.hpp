#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "stagetrack/solver.hpp"
#include "stagetrack/types.hpp"

namespace stagetrack {

using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kStandardGravity = 9.80665;

/// Body-frame IMU sample. Axes: x forward, y left, z up. Accelerometers report
/// specific force, so a level device at rest reads (0, 0, +g).
struct ImuSample {
  Vec3 accel = Vec3::Zero();  // m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 mag = Vec3::Zero();    // uT
  std::int64_t timestamp_ms = 0;
};

struct TrackState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat6 covariance = Mat6::Identity();
  std::int64_t last_update_ms = 0;
  int consecutive_rejects = 0;
};

struct FilterParams {
  double q_accel = 0.5;      // (m/s^2)^2 / Hz, white-acceleration PSD
  double r_pos = 0.0025;     // m^2, floor on fix variance per axis
  double gate_chi2 = 11.34;  // 99 %, 3 dof
  int reject_reset = 10;
  double init_position_var = 1.0;  // m^2 on (re)initialization
  double init_velocity_var = 1.0;  // (m/s)^2 on (re)initialization
};

/// Track initialized at a fix with large covariance.
TrackState init_track(const PositionFix& fix, const FilterParams& params);

/// Constant-velocity prediction over dt seconds with optional world-frame
/// acceleration input (gravity removed). Process noise is the continuous
/// white-acceleration model:
///   Q = q * [dt^3/3 I, dt^2/2 I; dt^2/2 I, dt I].
TrackState predict(const TrackState& track, double dt, const std::optional<Vec3>& accel_world,
                   const FilterParams& params);

enum class UpdateOutcome { Accepted, Rejected, Reset, NumericalBreakdown };

struct UpdateResult {
  TrackState track;
  UpdateOutcome outcome = UpdateOutcome::Accepted;
  double mahalanobis2 = 0.0;

  bool accepted() const { return outcome == UpdateOutcome::Accepted; }
};

/// Chi-square gated Kalman update with a position fix. The measurement
/// covariance is the fix covariance with each diagonal raised to r_pos.
/// After `reject_reset` consecutive rejections the track reinitializes at
/// the fix (outcome Reset). A singular innovation covariance reinitializes
/// the track and reports NumericalBreakdown.
UpdateResult update_position(const TrackState& track, const PositionFix& fix,
                             const FilterParams& params);

/// Tilt-compensated magnetic heading in [-pi, pi), clockwise from magnetic
/// north (east positive). Throws Error{Unobservable} when |accel| <= 1 m/s^2
/// or |mag| <= 5 uT, or when the field is parallel to gravity.
double tilt_compensated_heading(const ImuSample& imu);

}  // namespace stagetrack
