#pragma once

#include <string>
#include <vector>

#include "racing/planner.hpp"

namespace racing {

/// One row per agent per physics tick. Scan fields (decision, l0..l2) are
/// only present on the ego row of ticks where the perception pipeline fired;
/// cost only where the controller fired.
struct TraceRow {
  double t = 0.0;
  std::string agent;  // "ego", "npc0", ...
  double x = 0.0, y = 0.0, yaw = 0.0, v = 0.0;
  int lane = -1;          // ego: planner's effective lane before the decision
  std::string decision;   // empty off scan ticks
  int l0 = 0, l1 = 0, l2 = 0;
  bool has_scan = false;
  double accel = 0.0, delta_cmd = 0.0;
  double cost = 0.0;
  bool has_control = false;
};

/// Replay parameters embedded as '#' comments at the top of the trace CSV so
/// a trace file is self-contained.
struct TraceMeta {
  Thresholds thresholds;
  PlannerParams planner;
  int start_lane = 2;
  double physics_hz = 100.0, control_hz = 50.0, lidar_hz = 10.0;
  double perimeter = 0.0;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRow> rows;
};

void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

/// Per-scan planner snapshot reconstructed from a trace.
struct ReplayScan {
  size_t row_index = 0;
  double t = 0.0;
  PlannerMode mode_after = PlannerMode::LaneFollow;
  int lane_after = 2;   // effective lane after the decision
  bool optimized_path = false;  // tracking the optimized raceline after this scan
};

struct ReplayResult {
  std::vector<std::string> violations;
  std::vector<ReplayScan> scans;
  bool ok() const { return violations.empty(); }
};

/// Re-runs the switching state machine over the logged scan stream and
/// checks the decision column, the switch preconditions against the logged
/// occupancy, and the switch/engage lockout spacing.
ReplayResult replay_trace(const Trace& trace);

}  // namespace racing
