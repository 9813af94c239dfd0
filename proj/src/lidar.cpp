#include "racing/lidar.hpp"

#include <cmath>
#include <stdexcept>

namespace racing {

namespace detail {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double gaussian_from_key(uint64_t key) {
  const uint64_t a = splitmix64(key);
  const uint64_t b = splitmix64(key ^ 0xDEADBEEFCAFEF00DULL);
  // 53-bit uniforms in (0, 1]; u1 stays away from zero for the log.
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

PointCloud scan(const Pose2& ego_pose, const std::vector<OrientedBox>& npc_boxes,
                const std::vector<std::vector<Vec2>>& wall_polylines, const LidarConfig& config,
                uint64_t scan_index, double stamp) {
  if (config.beam_count < 36 || config.fov <= 0.0 || config.fov > 2.0 * kPi + 1e-9 ||
      config.max_range <= 0.0 || config.rate_hz <= 0.0)
    throw std::invalid_argument("lidar scan: invalid config");

  // Gather candidate segments once per scan.
  struct Segment {
    Vec2 a, b;
  };
  std::vector<Segment> segments;
  segments.reserve(npc_boxes.size() * 4 + 256);
  for (const OrientedBox& box : npc_boxes) {
    const auto c = box.corners();
    for (int i = 0; i < 4; ++i) segments.push_back({c[i], c[(i + 1) % 4]});
  }
  // Wall segments are prefiltered by a coarse range check.
  const double reach = config.max_range + 5.0 * config.noise_sigma;
  for (const auto& wall : wall_polylines) {
    const size_t n = wall.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& a = wall[i];
      const Vec2& b = wall[(i + 1) % n];
      const double seg_len = (b - a).norm();
      if ((a - ego_pose.pos).norm() > reach + seg_len) continue;
      segments.push_back({a, b});
    }
  }

  PointCloud cloud;
  cloud.stamp = stamp;
  cloud.points.reserve(static_cast<size_t>(config.beam_count) / 2);

  const double sigma = config.noise_sigma;
  for (int beam = 0; beam < config.beam_count; ++beam) {
    const double rel = -config.fov / 2.0 +
                       config.fov * (static_cast<double>(beam) + 0.5) /
                           static_cast<double>(config.beam_count);
    const double ang = ego_pose.yaw + rel;
    const Vec2 dir{std::cos(ang), std::sin(ang)};

    double best = config.max_range + 1.0;
    for (const Segment& s : segments) {
      double t;
      if (ray_segment_hit(ego_pose.pos, dir, s.a, s.b, t) && t < best) best = t;
    }
    if (best > config.max_range) continue;

    double range = best;
    if (sigma > 0.0) {
      uint64_t key = config.seed;
      key = detail::splitmix64(key ^ (0x9E3779B97F4A7C15ULL * (scan_index + 1)));
      key = detail::splitmix64(key ^ (0xC2B2AE3D27D4EB4FULL * (static_cast<uint64_t>(beam) + 1)));
      const double g = std::clamp(detail::gaussian_from_key(key), -5.0, 5.0);
      range = std::max(range + sigma * g, 1e-6);
    }
    cloud.points.push_back({range * std::cos(rel), range * std::sin(rel)});
  }
  return cloud;
}

}  // namespace racing
