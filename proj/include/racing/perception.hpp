#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "racing/lidar.hpp"
#include "racing/track.hpp"

namespace racing {

struct CropConfig {
  double x_min = -10.0;  // m, look-back for blind spots
  double x_max = 100.0;  // m
  double lane_reject_halfwidth = 1.25;  // m, beyond this a point is no lane's
};

/// Decimated world-frame copies of the three base lane centerlines, used for
/// nearest-lane classification.
struct SparseLaneSet {
  std::array<std::vector<Vec2>, 3> polylines;
  int stride = 1;
};

/// Per-lane point counts for the current and immediately preceding scan.
struct LaneOccupancy {
  std::array<int, 3> counts{0, 0, 0};
  std::array<int, 3> prev{0, 0, 0};
  double stamp = -1.0;
};

/// classify() output: counts per base lane plus the points rejected as walls
/// or clutter. counts[0]+counts[1]+counts[2]+discarded partitions the input.
struct ClassifiedCounts {
  std::array<int, 3> counts{0, 0, 0};
  int discarded = 0;
};

/// Keeps points with x_min <= x <= x_max (ego frame); lateral rejection is
/// the classifier's job.
PointCloud crop(const PointCloud& cloud, const CropConfig& config);

/// Every stride-th waypoint of each lane, loop preserved.
SparseLaneSet make_sparse(const std::array<Lane, 3>& lanes, int stride);

/// Per-point lane assignment by euclidean distance to the nearest point on
/// each sparse centerline polyline; -1 when even the nearest lane is farther
/// than reject_halfwidth. Ties go to the lower index.
std::vector<int8_t> classify_points(const PointCloud& cropped, const Pose2& ego_pose,
                                    const SparseLaneSet& sparse, double reject_halfwidth);

ClassifiedCounts classify(const PointCloud& cropped, const Pose2& ego_pose,
                          const SparseLaneSet& sparse, double reject_halfwidth);

/// Rolls the occupancy window: prev <- counts, counts <- fresh. The stamp
/// must strictly increase.
LaneOccupancy update_occupancy(const LaneOccupancy& state, const std::array<int, 3>& counts,
                               double stamp);

}  // namespace racing
