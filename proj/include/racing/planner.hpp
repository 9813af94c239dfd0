#pragma once

#include <string>
#include <vector>

#include "racing/perception.hpp"
#include "racing/track.hpp"

namespace racing {

/// Occupancy hysteresis: a lane is occupied above theta_o and empty below
/// theta_e; counts in between are neither.
struct Thresholds {
  int theta_o = 9;
  int theta_e = 3;
};

enum class PlannerMode { LaneFollow, Optimized };

struct Decision {
  enum class Kind { Stay, Switch, EngageOptimized, Brake };
  Kind kind = Kind::Stay;
  int target = -1;           // lane id for Switch
  bool during_pause = false; // Brake issued while the switch lockout is active
};

std::string decision_label(const Decision& d);

struct PlannerState {
  PlannerMode mode = PlannerMode::LaneFollow;
  int current_lane = 2;      // effective base lane (0..2)
  double pause_until = 0.0;  // s, no Switch/Engage before this time
  int clear_streak = 0;      // consecutive scans with every lane empty
  Decision last_decision;
};

struct PlannerParams {
  double pause_s = 10.0;
  int engage_streak = 5;
  double brake_factor = 0.6;
  double v_min_follow = 15.0;  // m/s
  bool disable_switching = false;
};

struct DecideResult {
  PlannerState state;
  Decision decision;
};

/// One planner step per scan. Pure in (state, occ, thresholds, now, params).
///
/// Rule order: the pause lockout first (state never changes while paused,
/// though an occupied current lane still yields a Brake for speed scaling);
/// then optimized-lane engagement after `engage_streak` all-clear scans; then
/// the lane-switch evaluation. A switch from lane s to target t requires
/// l_s > theta_o, l_t < theta_e and the previous scan's l_t < theta_e; a
/// two-lane move across the center additionally requires l_center < theta_o.
/// From the center lane both neighbors are candidates (smaller count wins,
/// ties prefer Inner); otherwise Center is tried before the far lane. While
/// in Optimized mode the same rule runs on the effective lane, falling back
/// to lane following when that lane becomes occupied. The all-clear streak
/// accrues during pause as well; only decisions are gated.
DecideResult decide(const PlannerState& state, const LaneOccupancy& occ,
                    const Thresholds& thresholds, double now,
                    const PlannerParams& params = {});

/// Which base lane the vehicle geometrically occupies (nearest projection,
/// ties to the lower index).
int effective_lane(const Pose2& ego_pose, const std::array<Lane, 3>& lanes);

/// Cyclic waypoint slice starting just ahead of the ego projection and
/// covering at least horizon_length of arc.
std::vector<LaneWaypoint> publish_trajectory(const Lane& active, const Vec2& ego_position,
                                             double horizon_length);

/// Scales segment target speeds for a Brake decision: v -> max(v * factor,
/// v_min_follow), never above the original speed.
std::vector<LaneWaypoint> brake_reference(std::vector<LaneWaypoint> segment,
                                          const PlannerParams& params);

}  // namespace racing
