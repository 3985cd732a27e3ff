#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stagetrack/types.hpp"

namespace stagetrack {

struct RangeObservation {
  Vec3 anchor = Vec3::Zero();
  double distance = 0.0;
  double sigma = 0.1;
};

struct SolveOptions {
  SolveMode mode = SolveMode::Planar;
  double fixed_height = 0.2;  // planar mode only
  int max_iterations = 25;
  double convergence_step = 1e-6;
  double damping_init = 1e-3;
};

struct PositionFix {
  Vec3 position = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();  // m^2; z row/column is zero in planar mode
  double residual_rms = 0.0;
  int n_anchors = 0;
  std::int64_t timestamp_ms = 0;
  SolveMode mode = SolveMode::Planar;
  bool converged = true;  // false: best iterate after max_iterations (NoConvergence)
  int iterations = 0;
};

/// Element i = distance_i - |position - anchor_i|.
std::vector<double> residuals(const Vec3& position, std::span<const RangeObservation> ranges);

/// Weighted multilateration.
///
/// The start point is `prior` when given, else a closed-form linear solve
/// obtained by differencing the range equations against the first one. The
/// estimate is refined by damped Gauss-Newton on (d_i - |p - a_i|) / sigma_i.
/// Covariance is the inverse weighted normal matrix scaled by the residual
/// variance factor, floored at 1.
///
/// Throws Error{InsufficientAnchors} and Error{DegenerateGeometry}. A solve
/// that exhausts max_iterations is returned with converged = false.
PositionFix multilaterate(std::span<const RangeObservation> ranges, const SolveOptions& opts,
                          std::optional<Vec3> prior = std::nullopt);

}  // namespace stagetrack
