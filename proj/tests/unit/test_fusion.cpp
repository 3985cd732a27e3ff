#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "stagetrack/error.hpp"
#include "stagetrack/fusion.hpp"
#include "stagetrack/rng.hpp"

using namespace stagetrack;

namespace {

PositionFix fix_at(const Vec3& p, double var) {
  PositionFix f;
  f.position = p;
  f.covariance = Mat3::Identity() * var;
  return f;
}

TrackState scalar_track(double pos_var) {
  TrackState t;
  t.covariance = Mat6::Zero();
  t.covariance.topLeftCorner<3, 3>() = Mat3::Identity() * pos_var;
  return t;
}

ImuSample level(const Vec3& mag) {
  ImuSample s;
  s.accel = Vec3{0, 0, 9.81};
  s.mag = mag;
  return s;
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

double wrap(double a) {
  while (a >= std::numbers::pi) a -= 2 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2 * std::numbers::pi;
  return a;
}

}  // namespace

TEST_CASE("predict") {
  FilterParams p;
  TrackState t;
  t.position = Vec3::Zero();
  t.velocity = Vec3{1, 0, 0};
  t.covariance = Mat6::Identity() * 0.3;

  const TrackState same = predict(t, 0.0, std::nullopt, p);
  CHECK(same.position == t.position);
  CHECK(same.velocity == t.velocity);
  CHECK(same.covariance == t.covariance);

  const TrackState two = predict(t, 2.0, std::nullopt, p);
  CHECK((two.position - Vec3{2, 0, 0}).norm() < 1e-12);

  const TrackState acc = predict(t, 2.0, Vec3{0.5, 0, 0}, p);
  CHECK((acc.position - Vec3{3, 0, 0}).norm() < 1e-12);
  CHECK((acc.velocity - Vec3{2, 0, 0}).norm() < 1e-12);

  CHECK_THROWS_AS(predict(t, -0.1, std::nullopt, p), Error);
}

TEST_CASE("scalar covariance propagation") {
  // q dt^3 / 3 = 0.5 with dt = 1 -> q = 1.5
  FilterParams p;
  p.q_accel = 1.5;
  const TrackState t = predict(scalar_track(1.0), 1.0, std::nullopt, p);
  CHECK(t.covariance(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(t.covariance(3, 3) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(t.covariance(0, 3) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("scalar Kalman update") {
  FilterParams p;
  p.r_pos = 1e-6;
  TrackState t = scalar_track(1.0);
  t.position = Vec3{1, 0, 0};
  const UpdateResult r = update_position(t, fix_at(Vec3{2, 0, 0}, 1.0), p);
  CHECK(r.accepted());
  CHECK(r.track.position.x() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.track.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.mahalanobis2 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("r_pos floor on fix variance") {
  FilterParams p;
  p.r_pos = 1.0;
  TrackState t = scalar_track(1.0);
  t.position = Vec3{1, 0, 0};
  const UpdateResult r = update_position(t, fix_at(Vec3{2, 0, 0}, 1e-4), p);
  CHECK(r.track.position.x() == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("identical fix leaves the position") {
  FilterParams p;
  TrackState t = init_track(fix_at(Vec3{3, 4, 0.2}, 0.05), p);
  const UpdateResult r = update_position(t, fix_at(Vec3{3, 4, 0.2}, 1e-8), p);
  CHECK(r.accepted());
  CHECK((r.track.position - Vec3{3, 4, 0.2}).norm() < 1e-9);
}

TEST_CASE("gate rejects a 10 m jump and resets after the configured count") {
  FilterParams p;
  TrackState t = init_track(fix_at(Vec3{3, 4, 0.2}, 0.01), p);
  for (int i = 0; i < 200; ++i) {
    t = predict(t, 1.0 / 30, std::nullopt, p);
    t = update_position(t, fix_at(Vec3{3, 4, 0.2}, 0.0025), p).track;
  }
  REQUIRE(t.covariance.topLeftCorner<3, 3>().trace() < 0.01);

  const TrackState before = t;
  const UpdateResult r = update_position(t, fix_at(Vec3{13, 4, 0.2}, 0.0025), p);
  CHECK(r.outcome == UpdateOutcome::Rejected);
  CHECK(r.mahalanobis2 > 1000 * p.gate_chi2);
  CHECK(r.track.position == before.position);
  CHECK(r.track.covariance == before.covariance);
  CHECK(r.track.consecutive_rejects == 1);

  TrackState cur = r.track;
  for (int k = 2; k < p.reject_reset; ++k) {
    const UpdateResult rk = update_position(cur, fix_at(Vec3{13, 4, 0.2}, 0.0025), p);
    CHECK(rk.outcome == UpdateOutcome::Rejected);
    cur = rk.track;
  }
  const UpdateResult reset = update_position(cur, fix_at(Vec3{13, 4, 0.2}, 0.0025), p);
  CHECK(reset.outcome == UpdateOutcome::Reset);
  CHECK((reset.track.position - Vec3{13, 4, 0.2}).norm() < 1e-12);
  CHECK(reset.track.consecutive_rejects == 0);
}

TEST_CASE("singular innovation covariance") {
  FilterParams p;
  p.r_pos = 1e-300;
  TrackState t = scalar_track(0.0);
  t.covariance.setZero();
  const UpdateResult r = update_position(t, fix_at(Vec3{0, 0, 0}, 0.0), p);
  CHECK(r.outcome == UpdateOutcome::NumericalBreakdown);
}

TEST_CASE("covariance stays symmetric PSD") {
  FilterParams p;
  Rng rng(17);
  TrackState t = init_track(fix_at(Vec3{5, 5, 0.2}, 0.1), p);
  for (int i = 0; i < 10000; ++i) {
    const double dt = rng.uniform() * 0.1;
    std::optional<Vec3> a;
    if (rng.uniform() < 0.5) a = Vec3{rng.normal(), rng.normal(), rng.normal()};
    t = predict(t, dt, a, p);
    Mat3 cov = Mat3::Zero();
    cov.diagonal() << 0.01 + rng.uniform() * 0.2, 0.01 + rng.uniform() * 0.2, 1e-4;
    const Vec3 z = t.position + Vec3{rng.normal() * 0.3, rng.normal() * 0.3, 0};
    t = update_position(t, fix_at(Vec3::Zero(), 0), p).track;  // occasional outliers
    PositionFix f = fix_at(z, 0);
    f.covariance = cov;
    t = update_position(t, f, p).track;
    CHECK((t.covariance - t.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat6> es(t.covariance);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("stationary steady state is tighter than the fixes") {
  FilterParams p;
  p.q_accel = 0.05;
  const double R = 0.0625;
  TrackState t = init_track(fix_at(Vec3{2, 2, 0.2}, R), p);
  for (int i = 0; i < 600; ++i) {
    t = predict(t, 1.0 / 30, std::nullopt, p);
    t = update_position(t, fix_at(Vec3{2, 2, 0.2}, R), p).track;
  }
  CHECK(t.covariance(0, 0) < R);
  CHECK(t.covariance(1, 1) < R);
}

TEST_CASE("heading") {
  CHECK(std::abs(tilt_compensated_heading(level(Vec3{30, 0, -20}))) < 1e-6);
  // body y (left) points north: the nose points east
  CHECK(tilt_compensated_heading(level(Vec3{0, 30, -20})) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
  CHECK(tilt_compensated_heading(level(Vec3{0, -30, -20})) ==
        doctest::Approx(-std::numbers::pi / 2).epsilon(1e-9));
  // due south maps to -pi (range is [-pi, pi))
  CHECK(tilt_compensated_heading(level(Vec3{-30, 0, -20})) == doctest::Approx(-std::numbers::pi).epsilon(1e-12));

  const Vec3 g{0, 0, 9.81};
  const Vec3 m{30, 0, -20};
  for (double yaw : {0.0, 0.4, -1.2, 2.5}) {
    const double level_h = tilt_compensated_heading(level(rot_z(-yaw) * m));
    // world->body for a device pitched 30 deg (and rolled 10 deg): both vectors rotate together
    const Mat3 body = (rot_z(yaw) * rot_y(std::numbers::pi / 6) * rot_x(0.17)).transpose();
    ImuSample s;
    s.accel = body * g;
    s.mag = body * m;
    CHECK(std::abs(wrap(tilt_compensated_heading(s) - level_h)) < 1e-6);
    CHECK(std::abs(wrap(level_h + yaw)) < 1e-9);
  }

  CHECK_THROWS_AS(tilt_compensated_heading(level(Vec3{1, 0, -1})), Error);
  ImuSample ff = level(Vec3{30, 0, -20});
  ff.accel = Vec3{0, 0, 0.5};
  CHECK_THROWS_AS(tilt_compensated_heading(ff), Error);
  CHECK_THROWS_AS(tilt_compensated_heading(level(Vec3{0, 0, -40})), Error);
}

TEST_CASE("heading shifts by an applied yaw") {
  // body-to-world orientation B; sensors read B^T times world vectors.
  // A counter-clockwise yaw (seen from above) turns the nose away from east,
  // so heading (east positive) moves by -yaw.
  Rng rng(8);
  const Vec3 g{0, 0, 9.81};
  const Vec3 m{25, 7, -30};
  auto sense = [&](const Mat3& B) {
    ImuSample s;
    s.accel = B.transpose() * g;
    s.mag = B.transpose() * m;
    return s;
  };
  for (int i = 0; i < 200; ++i) {
    const Mat3 tilt = rot_x(rng.normal() * 0.3) * rot_y(rng.normal() * 0.3);
    const double yaw = (rng.uniform() - 0.5) * 6;
    const double h0 = tilt_compensated_heading(sense(tilt));
    const double h1 = tilt_compensated_heading(sense(rot_z(yaw) * tilt));
    CHECK(std::abs(wrap(h1 - h0 + yaw)) < 1e-9);
  }
}
