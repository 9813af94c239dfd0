#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "racing/scenario.hpp"
#include "racing/trace.hpp"

namespace racing {

inline constexpr double kCarLength = 5.0;        // m
inline constexpr double kCarWidth = 1.9;         // m
inline constexpr double kCollisionPenalty = 5.0; // s per contact episode

struct CollisionEvent {
  double time = 0.0;
  int npc_index = -1;
  double penalty = kCollisionPenalty;
};

struct RaceResult {
  double raw_lap_time = 0.0;
  std::vector<CollisionEvent> collisions;
  double total_time = 0.0;  // raw + penalty per collision
  int overtakes_completed = 0;
  double peak_speed = 0.0;
  double mean_speed = 0.0;
  bool finished = false;
  std::string abort_reason;  // nonempty when the simulation blew up
};

struct StageTimings {
  double perception_mean_ms = 0.0, perception_max_ms = 0.0;
  double mpc_mean_ms = 0.0, mpc_max_ms = 0.0;
  long perception_calls = 0, mpc_calls = 0;
};

/// Everything derived from the scenario before the first tick: track, the
/// three velocity-profiled base lanes, the optimized raceline, walls, and the
/// sparse classification polylines.
struct RaceSetup {
  TrackModel track;
  std::array<Lane, 3> lanes;
  Lane optimized;
  Lane centerline;  // offset-0 lane used for progress accounting
  std::array<std::vector<Vec2>, 2> walls;
  SparseLaneSet sparse;
  double lane_reject_halfwidth = 1.25;
  bool raceline_converged = true;
};

struct RaceOutcome {
  RaceResult result;
  Trace trace;
  StageTimings timings;
};

/// Unwraps centerline arc progress across the start/finish seam, one
/// instance per agent.
class ArcTracker {
 public:
  double update(const Lane& centerline, const Vec2& position);
  double value() const { return unwrapped_; }
  double last_projection_distance() const { return last_dist_; }

 private:
  bool initialized_ = false;
  double last_raw_ = 0.0;
  double unwrapped_ = 0.0;
  double last_dist_ = 0.0;
};

RaceSetup build_setup(const Scenario& scenario);

/// Pure-pursuit steering toward a lookahead point on the assigned lane
/// (lookahead max(5 m, 0.6 s * v)) plus proportional speed control.
ControlCommand npc_controller(const VehicleState& state, const Lane& lane, double target_speed,
                              const MpcConfig& vehicle);

/// One opponent physics step on its assigned lane.
VehicleState step_npc(const VehicleState& state, const Lane& lane, double target_speed, double dt,
                      const MpcConfig& vehicle);

/// Edge-triggered ego-vs-opponent contact detection. `in_contact` carries the
/// overlap state between calls so an episode is reported once.
std::vector<CollisionEvent> check_collisions(const VehicleState& ego,
                                             const std::vector<VehicleState>& npcs,
                                             std::vector<bool>& in_contact, double time);

/// Runs the full fixed-step race. Deterministic for a fixed scenario.
RaceOutcome run_race(const Scenario& scenario);
RaceOutcome run_race(const Scenario& scenario, const RaceSetup& setup);

}  // namespace racing
