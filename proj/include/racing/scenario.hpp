#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "racing/lidar.hpp"
#include "racing/mpc.hpp"
#include "racing/perception.hpp"
#include "racing/planner.hpp"
#include "racing/raceline.hpp"

namespace racing {

/// Bad scenario files and inconsistent configs raise this; the CLI maps it
/// to its config-error exit status.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrackSpec {
  enum class Type { Oval, Csv };
  Type type = Type::Oval;
  double straight_length = 300.0;
  double turn_radius = 100.0;
  double track_width = 15.0;
  double spacing = 2.0;
  std::string csv_path;
};

struct ScriptedLaneChange {
  double time = 0.0;
  int lane = 1;
};

struct NpcSpec {
  int lane = 2;
  double target_speed = 30.0;
  double start_arc = 100.0;
  std::vector<ScriptedLaneChange> lane_changes;
};

struct EgoSpec {
  double start_arc = 0.0;
  int lane = 2;  // Outer
  double start_speed = 25.0;
};

struct Rates {
  double physics_hz = 100.0;
  double control_hz = 50.0;
  double lidar_hz = 10.0;
};

struct PerceptionConfig {
  double x_min = -10.0;
  double x_max = 100.0;
  double lane_reject_halfwidth = 0.0;  // <= 0: half the inter-lane spacing
  int sparse_stride = 4;
};

struct RacelineConfig {
  double car_half_width = 0.95;
  int iterations = 2000;
};

struct Scenario {
  TrackSpec track;
  std::vector<NpcSpec> npcs;
  EgoSpec ego;
  Rates rates;
  uint64_t seed = 42;
  Thresholds thresholds;
  MpcConfig mpc;
  LidarConfig lidar;
  SpeedLimits limits;
  PlannerParams planner;
  PerceptionConfig perception;
  RacelineConfig raceline;
  double publish_horizon_m = 90.0;
  bool inject_latency = false;
  double max_sim_time = 120.0;
};

/// The stock 5-opponent race used throughout: staggered opponents ahead of
/// the ego, slowest at the front of the field.
Scenario default_scenario();

/// Strict parser: unknown keys anywhere in the document are rejected.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace racing
