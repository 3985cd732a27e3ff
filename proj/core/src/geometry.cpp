#include "stagetrack/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "stagetrack/error.hpp"
#include "stagetrack/stage.hpp"

namespace stagetrack {
namespace {

constexpr double kOverheadNorm = 1e-6;
constexpr double kCoincident = 1e-12;
// Reciprocal condition number below which the normal matrix counts as singular.
constexpr double kMinRcond = 1e-10;

template <int N>
Eigen::Matrix<double, N, N> invert_normal(const Eigen::Matrix<double, N, N>& normal) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(normal);
  const auto& ev = eig.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() / ev.maxCoeff() < kMinRcond) {
    throw Error(ErrorCode::DegenerateGeometry, "normal matrix is singular");
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

DopResult dop(std::span<const Vec3> anchors, const Vec3& point, SolveMode mode) {
  const std::size_t need = mode == SolveMode::Planar ? 3 : 4;
  if (anchors.size() < need) {
    throw Error(ErrorCode::InsufficientAnchors, "dop needs " + std::to_string(need) + " anchors");
  }

  if (mode == SolveMode::Planar) {
    Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
    for (const Vec3& a : anchors) {
      const Vec3 los = a - point;
      const double n = los.norm();
      if (n < kCoincident) throw Error(ErrorCode::CoincidentPoint, "point coincides with an anchor");
      const Eigen::Vector2d h = los.head<2>() / n;
      const double hn = h.norm();
      if (hn < kOverheadNorm) throw Error(ErrorCode::DegenerateGeometry, "anchor overhead");
      const Eigen::Vector2d u = h / hn;
      normal += u * u.transpose();
    }
    const Eigen::Matrix2d q = invert_normal<2>(normal);
    const double hdop = std::sqrt(q.trace());
    return DopResult{hdop, std::nullopt, hdop};
  }

  Mat3 normal = Mat3::Zero();
  for (const Vec3& a : anchors) {
    const Vec3 los = a - point;
    const double n = los.norm();
    if (n < kCoincident) throw Error(ErrorCode::CoincidentPoint, "point coincides with an anchor");
    const Vec3 u = los / n;
    normal += u * u.transpose();
  }
  const Mat3 q = invert_normal<3>(normal);
  return DopResult{std::sqrt(q(0, 0) + q(1, 1)), std::sqrt(q(2, 2)), std::sqrt(q.trace())};
}

Vec3 CoverageGrid::center(int ix, int iy, double width, double depth, double height) const {
  const double x0 = ix * cell_size;
  const double y0 = iy * cell_size;
  const double x1 = std::min(x0 + cell_size, width);
  const double y1 = std::min(y0 + cell_size, depth);
  return Vec3{0.5 * (x0 + x1), 0.5 * (y0 + y1), height};
}

CoverageGrid coverage_map(const StageConfig& stage, const CoverageOptions& opts) {
  if (!(opts.cell_size > 0.0)) throw Error(ErrorCode::InvalidConfig, "cell_size must be > 0");
  if (opts.min_anchors < 3) throw Error(ErrorCode::InvalidConfig, "min_anchors must be >= 3");
  if (!(stage.width > 0.0 && stage.depth > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "stage dimensions must be > 0");
  }

  CoverageGrid grid;
  grid.cell_size = opts.cell_size;
  grid.nx = static_cast<int>(std::ceil(stage.width / opts.cell_size - 1e-9));
  grid.ny = static_cast<int>(std::ceil(stage.depth / opts.cell_size - 1e-9));
  grid.cells.resize(static_cast<std::size_t>(grid.nx) * grid.ny);

  std::size_t covered = 0;
  std::vector<Vec3> in_range;
  in_range.reserve(stage.anchors.size());
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Vec3 c = grid.center(ix, iy, stage.width, stage.depth, opts.eval_height);
      in_range.clear();
      for (const Anchor& a : stage.anchors) {
        if ((a.position - c).norm() <= a.max_range) in_range.push_back(a.position);
      }
      CoverageCell& cell = grid.cells[static_cast<std::size_t>(iy) * grid.nx + ix];
      cell.anchors_in_range = static_cast<int>(in_range.size());
      if (cell.anchors_in_range >= 3) {
        try {
          cell.hdop = dop(in_range, c, SolveMode::Planar).hdop;
        } catch (const Error&) {
          cell.hdop.reset();
        }
      }
      cell.covered = cell.anchors_in_range >= opts.min_anchors && cell.hdop &&
                     *cell.hdop <= opts.hdop_max;
      if (cell.covered) ++covered;
    }
  }
  grid.covered_fraction = grid.cells.empty()
                              ? 0.0
                              : static_cast<double>(covered) / static_cast<double>(grid.cells.size());
  return grid;
}

}  // namespace stagetrack
