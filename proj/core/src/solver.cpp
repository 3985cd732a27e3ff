#include "stagetrack/solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "stagetrack/error.hpp"

namespace stagetrack {
namespace {

constexpr double kMinRcond = 1e-12;

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

bool well_conditioned(const MatX& normal) {
  Eigen::SelfAdjointEigenSolver<MatX> eig(normal);
  const auto& ev = eig.eigenvalues();
  return ev.maxCoeff() > 0.0 && ev.minCoeff() / ev.maxCoeff() >= kMinRcond;
}

struct Problem {
  std::span<const RangeObservation> ranges;
  bool planar;
  double height;

  int dims() const { return planar ? 2 : 3; }

  Vec3 point(const VecX& x) const {
    return planar ? Vec3{x(0), x(1), height} : Vec3{x(0), x(1), x(2)};
  }

  // Whitened residuals and Jacobian of the residuals wrt x.
  void linearize(const VecX& x, VecX& r, MatX& j) const {
    const Vec3 p = point(x);
    const int m = static_cast<int>(ranges.size());
    r.resize(m);
    j.resize(m, dims());
    for (int i = 0; i < m; ++i) {
      const RangeObservation& o = ranges[i];
      const Vec3 diff = p - o.anchor;
      const double d = diff.norm();
      r(i) = (o.distance - d) / o.sigma;
      const Vec3 grad = d > 0.0 ? Vec3(-diff / d) : Vec3::Zero();
      for (int k = 0; k < dims(); ++k) j(i, k) = grad(k) / o.sigma;
    }
  }

  double cost(const VecX& x) const {
    const Vec3 p = point(x);
    double c = 0.0;
    for (const RangeObservation& o : ranges) {
      const double e = (o.distance - (p - o.anchor).norm()) / o.sigma;
      c += e * e;
    }
    return c;
  }
};

// Differences each range equation against the first:
//   2 (a_i - a_0) . p = |a_i|^2 - |a_0|^2 - (d_i^2 - d_0^2)
// In planar mode slant ranges are first reduced to horizontal ranges at the
// fixed height. In 3D, coplanar anchors leave z unobservable in the linear
// system; x, y are solved in-plane and z is placed below the anchor plane.
VecX closed_form(const Problem& pb) {
  const auto& rs = pb.ranges;
  const int m = static_cast<int>(rs.size());
  auto horiz_sq = [&](int i) {
    const double dz = rs[i].anchor.z() - pb.height;
    return std::max(0.0, rs[i].distance * rs[i].distance - dz * dz);
  };

  if (!pb.planar) {
    MatX a(m - 1, 3);
    VecX b(m - 1);
    const Vec3& a0 = rs[0].anchor;
    for (int i = 1; i < m; ++i) {
      const Vec3& ai = rs[i].anchor;
      a.row(i - 1) = 2.0 * (ai - a0).transpose();
      b(i - 1) = ai.squaredNorm() - a0.squaredNorm() -
                 (rs[i].distance * rs[i].distance - rs[0].distance * rs[0].distance);
    }
    const MatX normal = a.transpose() * a;
    if (well_conditioned(normal)) return normal.ldlt().solve(a.transpose() * b);
  }

  MatX a(m - 1, 2);
  VecX b(m - 1);
  const Eigen::Vector2d a0 = rs[0].anchor.head<2>();
  const double h0 = pb.planar ? horiz_sq(0) : 0.0;
  for (int i = 1; i < m; ++i) {
    const Eigen::Vector2d ai = rs[i].anchor.head<2>();
    a.row(i - 1) = 2.0 * (ai - a0).transpose();
    if (pb.planar) {
      b(i - 1) = ai.squaredNorm() - a0.squaredNorm() - (horiz_sq(i) - h0);
    } else {
      // Equal anchor heights: the z terms cancel in the differenced equations.
      b(i - 1) = ai.squaredNorm() - a0.squaredNorm() -
                 (rs[i].distance * rs[i].distance - rs[0].distance * rs[0].distance);
    }
  }
  const MatX normal = a.transpose() * a;
  if (!well_conditioned(normal)) {
    throw Error(ErrorCode::DegenerateGeometry, "anchors are collinear in the horizontal plane");
  }
  const Eigen::Vector2d xy = normal.ldlt().solve(a.transpose() * b);
  if (pb.planar) return xy;

  double z_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const double hz = (xy - rs[i].anchor.head<2>()).squaredNorm();
    z_sum += rs[i].anchor.z() - std::sqrt(std::max(0.0, rs[i].distance * rs[i].distance - hz));
  }
  VecX x(3);
  x << xy(0), xy(1), z_sum / m;
  return x;
}

}  // namespace

std::vector<double> residuals(const Vec3& position, std::span<const RangeObservation> ranges) {
  std::vector<double> out;
  out.reserve(ranges.size());
  for (const RangeObservation& o : ranges) out.push_back(o.distance - (position - o.anchor).norm());
  return out;
}

PositionFix multilaterate(std::span<const RangeObservation> ranges, const SolveOptions& opts,
                          std::optional<Vec3> prior) {
  const bool planar = opts.mode == SolveMode::Planar;
  const std::size_t need = planar ? 3 : 4;
  if (ranges.size() < need) {
    throw Error(ErrorCode::InsufficientAnchors,
                std::to_string(ranges.size()) + " ranges, need " + std::to_string(need));
  }
  if (opts.max_iterations < 1 || !(opts.convergence_step > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "bad solve options");
  }
  for (const RangeObservation& o : ranges) {
    if (!(o.sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "range sigma must be > 0");
  }

  const Problem pb{ranges, planar, opts.fixed_height};
  const int n = pb.dims();

  VecX x(n);
  if (prior) {
    x(0) = prior->x();
    x(1) = prior->y();
    if (!planar) x(2) = prior->z();
  } else {
    x = closed_form(pb);
  }

  VecX r;
  MatX j;
  double cost = pb.cost(x);
  double lambda = opts.damping_init;
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    pb.linearize(x, r, j);
    const MatX normal = j.transpose() * j;
    if (!well_conditioned(normal)) throw Error(ErrorCode::DegenerateGeometry, "singular normal matrix");
    // Residual r = d - |p - a|, so the Gauss-Newton step solves N dx = -J^T r.
    const VecX g = -(j.transpose() * r);
    MatX damped = normal;
    damped.diagonal() *= (1.0 + lambda);
    const VecX step = damped.ldlt().solve(g);
    const VecX candidate = x + step;
    const double candidate_cost = pb.cost(candidate);
    if (candidate_cost <= cost) {
      x = candidate;
      cost = candidate_cost;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (step.norm() < opts.convergence_step) {
        converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= 10.0;
      if (step.norm() < opts.convergence_step) {
        converged = true;
        ++it;
        break;
      }
    }
  }

  pb.linearize(x, r, j);
  const MatX normal = j.transpose() * j;
  if (!well_conditioned(normal)) throw Error(ErrorCode::DegenerateGeometry, "singular normal matrix");
  const MatX inv = normal.ldlt().solve(MatX::Identity(n, n));

  const int m = static_cast<int>(ranges.size());
  const double dof = static_cast<double>(m - n);
  const double scale = dof > 0.0 ? std::max(1.0, r.squaredNorm() / dof) : 1.0;

  PositionFix fix;
  fix.position = pb.point(x);
  fix.covariance.setZero();
  fix.covariance.topLeftCorner(n, n) = 0.5 * (inv + inv.transpose()) * scale;
  double sq = 0.0;
  for (double e : residuals(fix.position, ranges)) sq += e * e;
  fix.residual_rms = std::sqrt(sq / m);
  fix.n_anchors = m;
  fix.mode = opts.mode;
  fix.converged = converged;
  fix.iterations = it;
  return fix;
}

}  // namespace stagetrack
