#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "racing/geometry.hpp"

namespace racing {

/// Closed race track centerline with per-sample drivable half-widths.
/// Indexing is cyclic; samples are approximately equispaced in arc length.
struct TrackModel {
  std::vector<Vec2> centerline;
  std::vector<double> half_width_left;
  std::vector<double> half_width_right;
  double spacing = 2.0;  // nominal arc-length step [m]

  size_t size() const { return centerline.size(); }
  const Vec2& at(long i) const;
  double perimeter() const;
  double min_half_width() const;
};

enum class LaneId : int { Inner = 0, Center = 1, Outer = 2, Optimized = 3 };

inline const char* lane_name(LaneId id) {
  switch (id) {
    case LaneId::Inner: return "inner";
    case LaneId::Center: return "center";
    case LaneId::Outer: return "outer";
    default: return "optimized";
  }
}

struct LaneWaypoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;       // rad, direction of travel
  double curvature = 0.0;     // 1/m, positive for left turns
  double target_speed = 10.0; // m/s
};

/// Closed drivable waypoint loop. `cum_arc` holds cumulative arc length with
/// cum_arc[i] the distance from waypoint 0 to waypoint i and cum_arc[size()]
/// the loop length.
struct Lane {
  LaneId id = LaneId::Center;
  std::vector<LaneWaypoint> waypoints;
  std::vector<double> cum_arc;

  size_t size() const { return waypoints.size(); }
  const LaneWaypoint& at(long i) const;
  Vec2 position(long i) const;
  double length() const { return cum_arc.empty() ? 0.0 : cum_arc.back(); }
  /// Arc step from waypoint i to the next (cyclic).
  double step(long i) const;
};

struct Projection {
  size_t index = 0;       // nearest waypoint, ties resolved to the lower index
  double distance = 0.0;  // euclidean distance to that waypoint
  double lateral = 0.0;   // signed offset, positive left of the lane heading
};

/// Stadium oval: two straights joined by semicircular turns, driven
/// counter-clockwise. straight_length may be zero (plain circle).
TrackModel generate_oval(double straight_length, double turn_radius, double track_width,
                         double spacing);

/// Reads a centerline CSV (`x_m,y_m,w_tr_right_m,w_tr_left_m`, '#' comments)
/// and resamples it to the mean input spacing.
TrackModel load_centerline(const std::string& path);

/// Displaces every centerline sample along its left normal by `offset` and
/// rebuilds an equispaced lane. Positive offsets move toward the inside of a
/// counter-clockwise track.
Lane lane_offset(const TrackModel& track, double offset, double spacing,
                 LaneId id = LaneId::Center);

/// Nearest-waypoint projection of a point onto a lane.
Projection project(const Lane& lane, const Vec2& point);

/// Signed curvature per waypoint from the circumscribed circle of each
/// consecutive waypoint triple. Collinear triples give zero.
std::vector<double> curvature_profile(const Lane& lane);

/// Continuous arc coordinate of `point` on the lane: nearest-vertex search
/// refined by projection onto the two adjacent segments.
/// Returns {arc in [0, length), euclidean distance to the projected point}.
std::pair<double, double> arc_project(const Lane& lane, const Vec2& point);

/// Interpolated pose on the lane at arc coordinate s (wrapped into the loop).
LaneWaypoint waypoint_at_arc(const Lane& lane, double s);

/// Builds a closed lane from positions, recomputing headings and curvatures.
/// Speeds are left at the LaneWaypoint default. With `resample` the points
/// are first redistributed uniformly at `spacing`; inputs that are already
/// near-uniform (lane offsets, optimizer output) skip that step, since chord
/// interpolation would perturb points off the true geometry and contaminate
/// the curvature estimate.
Lane build_lane(LaneId id, const std::vector<Vec2>& closed_positions, double spacing,
                bool resample = true);

/// The three base lanes at offsets {+w/3, 0, -w/3} of the local half-width.
std::array<Lane, 3> build_base_lanes(const TrackModel& track);

/// Track boundary polylines (left wall, right wall), closed, world frame.
std::array<std::vector<Vec2>, 2> track_walls(const TrackModel& track);

/// Uniform arc-length resampling of a closed polyline.
std::vector<Vec2> resample_closed(const std::vector<Vec2>& points, double spacing);

double polyline_length(const std::vector<Vec2>& points, bool closed);

/// Lane CSV: header `x_m,y_m,heading_rad,kappa_1pm,v_mps`.
void save_lane_csv(const Lane& lane, const std::string& path);
Lane load_lane_csv(const std::string& path, LaneId id);

}  // namespace racing
