#include "racing/perception.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace racing {

PointCloud crop(const PointCloud& cloud, const CropConfig& config) {
  if (config.x_min >= config.x_max || config.lane_reject_halfwidth <= 0.0)
    throw std::invalid_argument("crop: invalid config");
  PointCloud out;
  out.stamp = cloud.stamp;
  out.points.reserve(cloud.points.size());
  for (const Vec2& p : cloud.points)
    if (p.x >= config.x_min && p.x <= config.x_max) out.points.push_back(p);
  return out;
}

SparseLaneSet make_sparse(const std::array<Lane, 3>& lanes, int stride) {
  if (stride < 1) throw std::invalid_argument("make_sparse: stride must be >= 1");
  SparseLaneSet sparse;
  sparse.stride = stride;
  for (size_t l = 0; l < 3; ++l) {
    const Lane& lane = lanes[l];
    auto& poly = sparse.polylines[l];
    poly.reserve(lane.size() / static_cast<size_t>(stride) + 1);
    for (size_t i = 0; i < lane.size(); i += static_cast<size_t>(stride))
      poly.push_back(lane.position(static_cast<long>(i)));
    if (poly.empty()) throw std::invalid_argument("make_sparse: empty lane");
  }
  return sparse;
}

namespace {

// Flat float copies of the closed sparse polylines (segment form) keep the
// distance kernel tight enough for the scan-period budget.
struct FlatLane {
  std::vector<float> ax, ay, ex, ey, inv_len2;
};

FlatLane flatten(const std::vector<Vec2>& poly) {
  FlatLane f;
  const size_t n = poly.size();
  f.ax.resize(n);
  f.ay.resize(n);
  f.ex.resize(n);
  f.ey.resize(n);
  f.inv_len2.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2 e = poly[(i + 1) % n] - a;
    f.ax[i] = static_cast<float>(a.x);
    f.ay[i] = static_cast<float>(a.y);
    f.ex[i] = static_cast<float>(e.x);
    f.ey[i] = static_cast<float>(e.y);
    const float len2 = static_cast<float>(e.squared_norm());
    f.inv_len2[i] = len2 > 0.0f ? 1.0f / len2 : 0.0f;
  }
  return f;
}

// Min squared distance from (px, py) to any segment of the closed polyline.
float min_dist2(const FlatLane& f, float px, float py) {
  float best = std::numeric_limits<float>::max();
  const size_t n = f.ax.size();
  for (size_t i = 0; i < n; ++i) {
    const float rx = px - f.ax[i];
    const float ry = py - f.ay[i];
    float t = (rx * f.ex[i] + ry * f.ey[i]) * f.inv_len2[i];
    t = t < 0.0f ? 0.0f : (t > 1.0f ? 1.0f : t);
    const float dx = rx - t * f.ex[i];
    const float dy = ry - t * f.ey[i];
    const float d2 = dx * dx + dy * dy;
    best = d2 < best ? d2 : best;
  }
  return best;
}

}  // namespace

std::vector<int8_t> classify_points(const PointCloud& cropped, const Pose2& ego_pose,
                                    const SparseLaneSet& sparse, double reject_halfwidth) {
  if (reject_halfwidth <= 0.0) throw std::invalid_argument("classify: bad reject halfwidth");

  std::array<FlatLane, 3> flat;
  for (size_t l = 0; l < 3; ++l) flat[l] = flatten(sparse.polylines[l]);

  const float reject2 = static_cast<float>(reject_halfwidth * reject_halfwidth);
  std::vector<int8_t> assignment(cropped.points.size(), -1);
  for (size_t k = 0; k < cropped.points.size(); ++k) {
    const Vec2 world = ego_pose.to_world(cropped.points[k]);
    const float px = static_cast<float>(world.x);
    const float py = static_cast<float>(world.y);
    int8_t best_lane = -1;
    float best = std::numeric_limits<float>::max();
    for (int8_t l = 0; l < 3; ++l) {
      const float d2 = min_dist2(flat[static_cast<size_t>(l)], px, py);
      if (d2 < best) {  // strict: ties keep the lower lane index
        best = d2;
        best_lane = l;
      }
    }
    if (best <= reject2) assignment[k] = best_lane;
  }
  return assignment;
}

ClassifiedCounts classify(const PointCloud& cropped, const Pose2& ego_pose,
                          const SparseLaneSet& sparse, double reject_halfwidth) {
  ClassifiedCounts out;
  for (int8_t a : classify_points(cropped, ego_pose, sparse, reject_halfwidth)) {
    if (a < 0)
      ++out.discarded;
    else
      ++out.counts[static_cast<size_t>(a)];
  }
  return out;
}

LaneOccupancy update_occupancy(const LaneOccupancy& state, const std::array<int, 3>& counts,
                               double stamp) {
  if (stamp <= state.stamp)
    throw std::invalid_argument("update_occupancy: stamp must strictly increase");
  LaneOccupancy next;
  next.prev = state.counts;
  next.counts = counts;
  next.stamp = stamp;
  return next;
}

}  // namespace racing
