#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stagetrack/types.hpp"

namespace stagetrack {

struct StageConfig;

struct DopResult {
  double hdop = 0.0;
  std::optional<double> vdop;  // absent in planar mode
  double gdop = 0.0;
};

/// Dilution of precision for ranging (no clock term) from `point` to each anchor.
///
/// Rows of the geometry matrix are unit line-of-sight vectors. In planar mode
/// the xy part of each 3D LOS vector is renormalized in-plane before use, so
/// anchor height only matters when an anchor is (nearly) overhead.
///
/// Throws Error{DegenerateGeometry} when the normal matrix is singular or an
/// anchor sits overhead, Error{CoincidentPoint} when point equals an anchor,
/// Error{InsufficientAnchors} when fewer than 3 (planar) / 4 (full3d) anchors.
DopResult dop(std::span<const Vec3> anchors, const Vec3& point, SolveMode mode);

struct CoverageCell {
  int anchors_in_range = 0;
  std::optional<double> hdop;
  bool covered = false;
};

struct CoverageOptions {
  double cell_size = 0.25;
  double hdop_max = 6.0;
  int min_anchors = 3;
  double eval_height = 0.2;
};

struct CoverageGrid {
  double cell_size = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<CoverageCell> cells;  // row-major in y: index = iy * nx + ix
  double covered_fraction = 0.0;

  const CoverageCell& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
  /// Cell center, clamped into the stage rectangle for partial edge cells.
  Vec3 center(int ix, int iy, double width, double depth, double height) const;
};

/// Grid coverage over the stage rectangle. A cell is covered when at least
/// `min_anchors` anchors are within max_range of its center and the planar
/// HDOP over those anchors is at most `hdop_max`. Geometry failures mark the
/// cell uncovered rather than aborting.
CoverageGrid coverage_map(const StageConfig& stage, const CoverageOptions& opts);

}  // namespace stagetrack
