#include "stagetrack/fusion.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "stagetrack/error.hpp"

namespace stagetrack {
namespace {

Mat3 measurement_covariance(const PositionFix& fix, const FilterParams& params) {
  Mat3 r = 0.5 * (fix.covariance + fix.covariance.transpose());
  for (int i = 0; i < 3; ++i) r(i, i) = std::max(r(i, i), params.r_pos);
  return r;
}

void symmetrize(Mat6& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

TrackState init_track(const PositionFix& fix, const FilterParams& params) {
  TrackState t;
  t.position = fix.position;
  t.velocity.setZero();
  t.covariance.setZero();
  t.covariance.topLeftCorner<3, 3>() = Mat3::Identity() * params.init_position_var;
  t.covariance.bottomRightCorner<3, 3>() = Mat3::Identity() * params.init_velocity_var;
  t.last_update_ms = fix.timestamp_ms;
  return t;
}

TrackState predict(const TrackState& track, double dt, const std::optional<Vec3>& accel_world,
                   const FilterParams& params) {
  if (dt < 0.0) throw Error(ErrorCode::InvalidConfig, "dt must be >= 0");
  if (dt == 0.0) return track;

  TrackState out = track;
  out.position = track.position + track.velocity * dt;
  if (accel_world) {
    out.position += 0.5 * *accel_world * dt * dt;
    out.velocity += *accel_world * dt;
  }

  Mat6 f = Mat6::Identity();
  f.topRightCorner<3, 3>() = Mat3::Identity() * dt;

  const double q = params.q_accel;
  Mat6 noise = Mat6::Zero();
  noise.topLeftCorner<3, 3>() = Mat3::Identity() * (q * dt * dt * dt / 3.0);
  noise.topRightCorner<3, 3>() = Mat3::Identity() * (q * dt * dt / 2.0);
  noise.bottomLeftCorner<3, 3>() = Mat3::Identity() * (q * dt * dt / 2.0);
  noise.bottomRightCorner<3, 3>() = Mat3::Identity() * (q * dt);

  out.covariance = f * track.covariance * f.transpose() + noise;
  symmetrize(out.covariance);
  return out;
}

UpdateResult update_position(const TrackState& track, const PositionFix& fix,
                             const FilterParams& params) {
  const Mat3 r = measurement_covariance(fix, params);
  const Vec3 innovation = fix.position - track.position;
  const Mat3 s = track.covariance.topLeftCorner<3, 3>() + r;

  Eigen::LDLT<Mat3> ldlt(s);
  const bool invertible = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                          (ldlt.vectorD().array() > 1e-15 * std::max(1.0, s.trace())).all();
  if (!invertible || !innovation.allFinite()) {
    UpdateResult res{init_track(fix, params), UpdateOutcome::NumericalBreakdown, 0.0};
    return res;
  }

  const double d2 = innovation.dot(ldlt.solve(innovation));
  if (!(d2 <= params.gate_chi2)) {
    TrackState rejected = track;
    rejected.consecutive_rejects += 1;
    if (rejected.consecutive_rejects >= params.reject_reset) {
      return UpdateResult{init_track(fix, params), UpdateOutcome::Reset, d2};
    }
    return UpdateResult{rejected, UpdateOutcome::Rejected, d2};
  }

  // K = P H^T S^-1 with H = [I 0].
  const Eigen::Matrix<double, 6, 3> pht = track.covariance.leftCols<3>();
  const Eigen::Matrix<double, 6, 3> gain = ldlt.solve(pht.transpose()).transpose();

  TrackState out = track;
  Eigen::Matrix<double, 6, 1> state;
  state << track.position, track.velocity;
  state += gain * innovation;
  out.position = state.head<3>();
  out.velocity = state.tail<3>();

  // Joseph form keeps the covariance symmetric PSD under round-off.
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>().setIdentity();
  const Mat6 ikh = Mat6::Identity() - gain * h;
  out.covariance = ikh * track.covariance * ikh.transpose() + gain * r * gain.transpose();
  symmetrize(out.covariance);
  out.consecutive_rejects = 0;
  out.last_update_ms = std::max(track.last_update_ms, fix.timestamp_ms);
  return UpdateResult{out, UpdateOutcome::Accepted, d2};
}

double tilt_compensated_heading(const ImuSample& imu) {
  const double g = imu.accel.norm();
  const double b = imu.mag.norm();
  if (!(g > 1.0)) throw Error(ErrorCode::Unobservable, "gravity not observable");
  if (!(b > 5.0)) throw Error(ErrorCode::Unobservable, "magnetic field too weak");

  const Vec3 up = imu.accel / g;
  const Vec3 horizontal = imu.mag - imu.mag.dot(up) * up;
  if (horizontal.norm() < 1e-9 * b) throw Error(ErrorCode::Unobservable, "field parallel to gravity");
  const Vec3 north = horizontal.normalized();
  const Vec3 east = north.cross(up);  // up x north is west

  // Body x axis is forward; heading is its angle from north toward east.
  double heading = std::atan2(east.x(), north.x());
  if (heading >= std::numbers::pi) heading -= 2.0 * std::numbers::pi;
  return heading;
}

}  // namespace stagetrack
