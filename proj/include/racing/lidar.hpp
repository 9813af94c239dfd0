#pragma once

#include <cstdint>
#include <vector>

#include "racing/geometry.hpp"

namespace racing {

struct LidarConfig {
  int beam_count = 720;
  double fov = 2.0 * kPi;   // rad, centered on the vehicle heading
  double max_range = 120.0; // m
  double rate_hz = 10.0;
  double noise_sigma = 0.02; // m, per-beam gaussian range noise
  uint64_t seed = 0;
};

/// Planar returns in the sensor (ego) frame: x forward, y left.
struct PointCloud {
  std::vector<Vec2> points;
  double stamp = 0.0;
};

namespace detail {
uint64_t splitmix64(uint64_t x);
/// Standard normal deviate derived from a single 64-bit key; reproducible
/// across platforms.
double gaussian_from_key(uint64_t key);
}  // namespace detail

/// Casts beam_count rays spanning `fov` around the ego heading and keeps the
/// first hit per beam within max_range (no return otherwise). Range noise is
/// keyed on (seed, scan_index, beam index) so identical inputs give identical
/// clouds; noise is truncated at 5 sigma.
PointCloud scan(const Pose2& ego_pose, const std::vector<OrientedBox>& npc_boxes,
                const std::vector<std::vector<Vec2>>& wall_polylines, const LidarConfig& config,
                uint64_t scan_index, double stamp);

}  // namespace racing
