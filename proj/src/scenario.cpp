#include "racing/scenario.hpp"

#include <fstream>

namespace racing {

using nlohmann::json;

namespace {

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& ctx) {
  if (!j.is_object()) throw ConfigError("scenario: " + ctx + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("scenario: unknown key '" + item.key() + "' in " + ctx);
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

TrackSpec parse_track(const json& j) {
  expect_keys(j, {"type", "straight_length", "turn_radius", "track_width", "spacing", "csv_path"},
              "track");
  TrackSpec t;
  std::string type = "oval";
  get_to(j, "type", type);
  if (type == "oval")
    t.type = TrackSpec::Type::Oval;
  else if (type == "csv")
    t.type = TrackSpec::Type::Csv;
  else
    throw ConfigError("scenario: track.type must be 'oval' or 'csv'");
  get_to(j, "straight_length", t.straight_length);
  get_to(j, "turn_radius", t.turn_radius);
  get_to(j, "track_width", t.track_width);
  get_to(j, "spacing", t.spacing);
  get_to(j, "csv_path", t.csv_path);
  if (t.type == TrackSpec::Type::Csv && t.csv_path.empty())
    throw ConfigError("scenario: track.csv_path required for csv tracks");
  return t;
}

NpcSpec parse_npc(const json& j, size_t idx) {
  const std::string ctx = "npcs[" + std::to_string(idx) + "]";
  expect_keys(j, {"lane", "target_speed", "start_arc", "lane_changes"}, ctx);
  NpcSpec n;
  get_to(j, "lane", n.lane);
  get_to(j, "target_speed", n.target_speed);
  get_to(j, "start_arc", n.start_arc);
  if (n.lane < 0 || n.lane > 2) throw ConfigError("scenario: " + ctx + ".lane must be 0..2");
  if (n.target_speed <= 0.0) throw ConfigError("scenario: " + ctx + ".target_speed must be > 0");
  if (j.contains("lane_changes")) {
    for (const auto& c : j.at("lane_changes")) {
      expect_keys(c, {"time", "lane"}, ctx + ".lane_changes[]");
      ScriptedLaneChange ch;
      get_to(c, "time", ch.time);
      get_to(c, "lane", ch.lane);
      if (ch.lane < 0 || ch.lane > 2)
        throw ConfigError("scenario: " + ctx + " scripted lane must be 0..2");
      n.lane_changes.push_back(ch);
    }
  }
  return n;
}

}  // namespace

// Opponent layout tuned against the stock track: inner/center cars sit where
// the optimized line passes them on the outside of the straights, the outer
// car where the apex cut clears it mid-turn, and the one same-line conflict
// (npc3 on the inner lane near the first apex) lands after the post-engage
// lockout expires so the planner can switch around it.
Scenario default_scenario() {
  Scenario s;
  s.npcs = {
      {0, 20.0, 120.0, {}},
      {1, 20.0, 150.0, {}},
      {2, 22.0, 210.0, {}},
      {0, 20.0, 275.0, {}},
      {1, 22.0, 500.0, {}},
  };
  s.ego.start_speed = 30.0;
  return s;
}

Scenario scenario_from_json(const json& j) {
  expect_keys(j,
              {"track", "npcs", "ego", "rates", "seed", "thresholds", "mpc", "lidar", "limits",
               "planner", "perception", "raceline", "publish_horizon_m", "inject_latency",
               "max_sim_time"},
              "document");
  Scenario s;
  s.npcs.clear();

  if (j.contains("track")) s.track = parse_track(j.at("track"));
  if (j.contains("npcs")) {
    if (!j.at("npcs").is_array()) throw ConfigError("scenario: npcs must be an array");
    size_t idx = 0;
    for (const auto& n : j.at("npcs")) s.npcs.push_back(parse_npc(n, idx++));
  }
  if (j.contains("ego")) {
    const auto& e = j.at("ego");
    expect_keys(e, {"start_arc", "lane", "start_speed"}, "ego");
    get_to(e, "start_arc", s.ego.start_arc);
    get_to(e, "lane", s.ego.lane);
    get_to(e, "start_speed", s.ego.start_speed);
    if (s.ego.lane < 0 || s.ego.lane > 2) throw ConfigError("scenario: ego.lane must be 0..2");
  }
  if (j.contains("rates")) {
    const auto& r = j.at("rates");
    expect_keys(r, {"physics_hz", "control_hz", "lidar_hz"}, "rates");
    get_to(r, "physics_hz", s.rates.physics_hz);
    get_to(r, "control_hz", s.rates.control_hz);
    get_to(r, "lidar_hz", s.rates.lidar_hz);
    if (s.rates.physics_hz <= 0.0 || s.rates.control_hz <= 0.0 || s.rates.lidar_hz <= 0.0)
      throw ConfigError("scenario: rates must be positive");
    if (s.rates.physics_hz < s.rates.control_hz || s.rates.control_hz < s.rates.lidar_hz)
      throw ConfigError("scenario: need physics_hz >= control_hz >= lidar_hz");
  }
  get_to(j, "seed", s.seed);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    expect_keys(t, {"theta_o", "theta_e"}, "thresholds");
    get_to(t, "theta_o", s.thresholds.theta_o);
    get_to(t, "theta_e", s.thresholds.theta_e);
    if (s.thresholds.theta_e <= 0 || s.thresholds.theta_e > s.thresholds.theta_o)
      throw ConfigError("scenario: need 0 < theta_e <= theta_o");
  }
  if (j.contains("mpc")) {
    const auto& m = j.at("mpc");
    expect_keys(m,
                {"horizon", "dt", "w_pos", "w_yaw", "w_v", "w_accel", "w_delta", "w_accel_rate",
                 "w_delta_rate", "a_cmd_max", "delta_max", "delta_rate_max", "v_max",
                 "wheelbase"},
                "mpc");
    get_to(m, "horizon", s.mpc.horizon);
    get_to(m, "dt", s.mpc.dt);
    get_to(m, "w_pos", s.mpc.w_pos);
    get_to(m, "w_yaw", s.mpc.w_yaw);
    get_to(m, "w_v", s.mpc.w_v);
    get_to(m, "w_accel", s.mpc.w_accel);
    get_to(m, "w_delta", s.mpc.w_delta);
    get_to(m, "w_accel_rate", s.mpc.w_accel_rate);
    get_to(m, "w_delta_rate", s.mpc.w_delta_rate);
    get_to(m, "a_cmd_max", s.mpc.a_cmd_max);
    get_to(m, "delta_max", s.mpc.delta_max);
    get_to(m, "delta_rate_max", s.mpc.delta_rate_max);
    get_to(m, "v_max", s.mpc.v_max);
    get_to(m, "wheelbase", s.mpc.wheelbase);
    if (s.mpc.horizon < 2 || s.mpc.dt <= 0.0)
      throw ConfigError("scenario: mpc horizon/dt out of range");
    if (s.mpc.w_pos < 0 || s.mpc.w_yaw < 0 || s.mpc.w_v < 0 ||
        s.mpc.w_pos + s.mpc.w_yaw + s.mpc.w_v <= 0.0)
      throw ConfigError("scenario: mpc weights must be nonnegative with a positive sum");
  }
  if (j.contains("lidar")) {
    const auto& l = j.at("lidar");
    expect_keys(l, {"beam_count", "fov", "max_range", "rate_hz", "noise_sigma", "seed"}, "lidar");
    get_to(l, "beam_count", s.lidar.beam_count);
    get_to(l, "fov", s.lidar.fov);
    get_to(l, "max_range", s.lidar.max_range);
    get_to(l, "rate_hz", s.lidar.rate_hz);
    get_to(l, "noise_sigma", s.lidar.noise_sigma);
    get_to(l, "seed", s.lidar.seed);
    if (s.lidar.beam_count < 36 || s.lidar.fov <= 0.0 || s.lidar.max_range <= 0.0)
      throw ConfigError("scenario: lidar config out of range");
  }
  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    expect_keys(l, {"v_cap", "a_lat_max", "a_accel_max", "a_brake_max"}, "limits");
    get_to(l, "v_cap", s.limits.v_cap);
    get_to(l, "a_lat_max", s.limits.a_lat_max);
    get_to(l, "a_accel_max", s.limits.a_accel_max);
    get_to(l, "a_brake_max", s.limits.a_brake_max);
    if (s.limits.v_cap <= 0 || s.limits.a_lat_max <= 0 || s.limits.a_accel_max <= 0 ||
        s.limits.a_brake_max <= 0)
      throw ConfigError("scenario: limits must be positive");
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    expect_keys(p, {"pause_s", "engage_streak", "brake_factor", "v_min_follow",
                    "disable_switching"},
                "planner");
    get_to(p, "pause_s", s.planner.pause_s);
    get_to(p, "engage_streak", s.planner.engage_streak);
    get_to(p, "brake_factor", s.planner.brake_factor);
    get_to(p, "v_min_follow", s.planner.v_min_follow);
    get_to(p, "disable_switching", s.planner.disable_switching);
  }
  if (j.contains("perception")) {
    const auto& p = j.at("perception");
    expect_keys(p, {"x_min", "x_max", "lane_reject_halfwidth", "sparse_stride"}, "perception");
    get_to(p, "x_min", s.perception.x_min);
    get_to(p, "x_max", s.perception.x_max);
    get_to(p, "lane_reject_halfwidth", s.perception.lane_reject_halfwidth);
    get_to(p, "sparse_stride", s.perception.sparse_stride);
    if (p.contains("x_min") || p.contains("x_max")) {
      if (s.perception.x_min >= s.perception.x_max)
        throw ConfigError("scenario: perception.x_min must be below x_max");
    }
    if (s.perception.sparse_stride < 1)
      throw ConfigError("scenario: perception.sparse_stride must be >= 1");
  }
  if (j.contains("raceline")) {
    const auto& r = j.at("raceline");
    expect_keys(r, {"car_half_width", "iterations"}, "raceline");
    get_to(r, "car_half_width", s.raceline.car_half_width);
    get_to(r, "iterations", s.raceline.iterations);
    if (s.raceline.iterations < 1) throw ConfigError("scenario: raceline.iterations must be >= 1");
  }
  get_to(j, "publish_horizon_m", s.publish_horizon_m);
  get_to(j, "inject_latency", s.inject_latency);
  get_to(j, "max_sim_time", s.max_sim_time);
  if (s.publish_horizon_m <= 0.0) throw ConfigError("scenario: publish_horizon_m must be > 0");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: JSON parse failure: ") + e.what());
  }
  return scenario_from_json(j);
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["track"] = {{"type", s.track.type == TrackSpec::Type::Oval ? "oval" : "csv"},
                {"straight_length", s.track.straight_length},
                {"turn_radius", s.track.turn_radius},
                {"track_width", s.track.track_width},
                {"spacing", s.track.spacing}};
  if (s.track.type == TrackSpec::Type::Csv) j["track"]["csv_path"] = s.track.csv_path;
  j["npcs"] = json::array();
  for (const NpcSpec& n : s.npcs) {
    json jn = {{"lane", n.lane}, {"target_speed", n.target_speed}, {"start_arc", n.start_arc}};
    if (!n.lane_changes.empty()) {
      jn["lane_changes"] = json::array();
      for (const auto& c : n.lane_changes)
        jn["lane_changes"].push_back({{"time", c.time}, {"lane", c.lane}});
    }
    j["npcs"].push_back(jn);
  }
  j["ego"] = {{"start_arc", s.ego.start_arc}, {"lane", s.ego.lane},
              {"start_speed", s.ego.start_speed}};
  j["rates"] = {{"physics_hz", s.rates.physics_hz},
                {"control_hz", s.rates.control_hz},
                {"lidar_hz", s.rates.lidar_hz}};
  j["seed"] = s.seed;
  j["thresholds"] = {{"theta_o", s.thresholds.theta_o}, {"theta_e", s.thresholds.theta_e}};
  j["mpc"] = {{"horizon", s.mpc.horizon},       {"dt", s.mpc.dt},
              {"w_pos", s.mpc.w_pos},           {"w_yaw", s.mpc.w_yaw},
              {"w_v", s.mpc.w_v},               {"w_accel", s.mpc.w_accel},
              {"w_delta", s.mpc.w_delta},       {"w_accel_rate", s.mpc.w_accel_rate},
              {"w_delta_rate", s.mpc.w_delta_rate}, {"a_cmd_max", s.mpc.a_cmd_max},
              {"delta_max", s.mpc.delta_max},   {"delta_rate_max", s.mpc.delta_rate_max},
              {"v_max", s.mpc.v_max},           {"wheelbase", s.mpc.wheelbase}};
  j["lidar"] = {{"beam_count", s.lidar.beam_count}, {"fov", s.lidar.fov},
                {"max_range", s.lidar.max_range},   {"rate_hz", s.lidar.rate_hz},
                {"noise_sigma", s.lidar.noise_sigma}, {"seed", s.lidar.seed}};
  j["limits"] = {{"v_cap", s.limits.v_cap},
                 {"a_lat_max", s.limits.a_lat_max},
                 {"a_accel_max", s.limits.a_accel_max},
                 {"a_brake_max", s.limits.a_brake_max}};
  j["planner"] = {{"pause_s", s.planner.pause_s},
                  {"engage_streak", s.planner.engage_streak},
                  {"brake_factor", s.planner.brake_factor},
                  {"v_min_follow", s.planner.v_min_follow},
                  {"disable_switching", s.planner.disable_switching}};
  j["perception"] = {{"x_min", s.perception.x_min},
                     {"x_max", s.perception.x_max},
                     {"lane_reject_halfwidth", s.perception.lane_reject_halfwidth},
                     {"sparse_stride", s.perception.sparse_stride}};
  j["raceline"] = {{"car_half_width", s.raceline.car_half_width},
                   {"iterations", s.raceline.iterations}};
  j["publish_horizon_m"] = s.publish_horizon_m;
  j["inject_latency"] = s.inject_latency;
  j["max_sim_time"] = s.max_sim_time;
  return j;
}

}  // namespace racing
