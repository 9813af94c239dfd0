#include "racing/sim.hpp"

#include <chrono>
#include <cmath>

namespace racing {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

OrientedBox car_box(const VehicleState& s) {
  return {{{s.x, s.y}, s.yaw}, kCarLength, kCarWidth};
}

bool state_finite(const VehicleState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.yaw) && std::isfinite(s.v);
}

struct TimingAccumulator {
  double sum = 0.0, max = 0.0;
  long calls = 0;
  void add(double ms) {
    sum += ms;
    max = std::max(max, ms);
    ++calls;
  }
  double mean() const { return calls > 0 ? sum / static_cast<double>(calls) : 0.0; }
};

}  // namespace

double ArcTracker::update(const Lane& centerline, const Vec2& position) {
  const auto [arc, dist] = arc_project(centerline, position);
  last_dist_ = dist;
  if (!initialized_) {
    initialized_ = true;
    last_raw_ = arc;
    unwrapped_ = arc;
    return unwrapped_;
  }
  const double total = centerline.length();
  double delta = arc - last_raw_;
  if (delta > total / 2.0) delta -= total;
  if (delta < -total / 2.0) delta += total;
  last_raw_ = arc;
  unwrapped_ += delta;
  return unwrapped_;
}

RaceSetup build_setup(const Scenario& sc) {
  RaceSetup setup;
  if (sc.track.type == TrackSpec::Type::Oval)
    setup.track = generate_oval(sc.track.straight_length, sc.track.turn_radius,
                                sc.track.track_width, sc.track.spacing);
  else
    setup.track = load_centerline(sc.track.csv_path);

  setup.lanes = build_base_lanes(setup.track);
  for (Lane& lane : setup.lanes) lane = velocity_profile(lane, sc.limits);
  setup.centerline = lane_offset(setup.track, 0.0, setup.track.spacing, LaneId::Center);

  RacelineProblem pb = make_raceline_problem(setup.track, sc.raceline.car_half_width);
  pb.iterations = sc.raceline.iterations;
  RacelineResult rr = optimize_min_curvature(pb);
  setup.optimized = velocity_profile(rr.lane, sc.limits);
  setup.raceline_converged = rr.converged;

  setup.walls = track_walls(setup.track);
  setup.sparse = make_sparse(setup.lanes, sc.perception.sparse_stride);
  setup.lane_reject_halfwidth = sc.perception.lane_reject_halfwidth > 0.0
                                    ? sc.perception.lane_reject_halfwidth
                                    : setup.track.min_half_width() / 3.0 / 2.0;
  return setup;
}

ControlCommand npc_controller(const VehicleState& state, const Lane& lane, double target_speed,
                              const MpcConfig& vehicle) {
  const Pose2 pose{{state.x, state.y}, state.yaw};
  const auto [s, dist] = arc_project(lane, pose.pos);
  const double lookahead = std::max(5.0, 0.6 * state.v);
  const LaneWaypoint target = waypoint_at_arc(lane, s + lookahead);
  const Vec2 local = pose.to_local({target.x, target.y});
  const double alpha = std::atan2(local.y, local.x);

  ControlCommand cmd;
  cmd.delta_cmd = std::clamp(std::atan(2.0 * vehicle.wheelbase * std::sin(alpha) / lookahead),
                             -vehicle.delta_max, vehicle.delta_max);
  cmd.accel = std::clamp(1.5 * (target_speed - state.v), -6.0, 6.0);
  return cmd;
}

VehicleState step_npc(const VehicleState& state, const Lane& lane, double target_speed, double dt,
                      const MpcConfig& vehicle) {
  return step_vehicle(state, npc_controller(state, lane, target_speed, vehicle), dt, vehicle);
}

std::vector<CollisionEvent> check_collisions(const VehicleState& ego,
                                             const std::vector<VehicleState>& npcs,
                                             std::vector<bool>& in_contact, double time) {
  in_contact.resize(npcs.size(), false);
  std::vector<CollisionEvent> events;
  const OrientedBox ego_box = car_box(ego);
  for (size_t i = 0; i < npcs.size(); ++i) {
    const bool overlap = boxes_overlap(ego_box, car_box(npcs[i]));
    if (overlap && !in_contact[i]) events.push_back({time, static_cast<int>(i)});
    in_contact[i] = overlap;
  }
  return events;
}

RaceOutcome run_race(const Scenario& scenario) {
  return run_race(scenario, build_setup(scenario));
}

RaceOutcome run_race(const Scenario& sc, const RaceSetup& setup) {
  for (const NpcSpec& npc : sc.npcs)
    if (npc.start_arc <= sc.ego.start_arc)
      throw ConfigError("scenario: ego must start behind every opponent");

  RaceOutcome out;
  const double perimeter = setup.centerline.length();
  out.trace.meta.thresholds = sc.thresholds;
  out.trace.meta.planner = sc.planner;
  out.trace.meta.start_lane = sc.ego.lane;
  out.trace.meta.physics_hz = sc.rates.physics_hz;
  out.trace.meta.control_hz = sc.rates.control_hz;
  out.trace.meta.lidar_hz = sc.rates.lidar_hz;
  out.trace.meta.perimeter = perimeter;

  // Agents.
  const LaneWaypoint ego_wp = waypoint_at_arc(setup.lanes[static_cast<size_t>(sc.ego.lane)],
                                              sc.ego.start_arc);
  VehicleState ego{ego_wp.x, ego_wp.y, ego_wp.heading, sc.ego.start_speed, 0.0};

  struct Npc {
    VehicleState state;
    int assigned_lane;
    double target_speed;
    std::vector<ScriptedLaneChange> pending;
    ArcTracker progress;
  };
  std::vector<Npc> npcs;
  for (const NpcSpec& spec : sc.npcs) {
    const LaneWaypoint wp = waypoint_at_arc(setup.lanes[static_cast<size_t>(spec.lane)],
                                            spec.start_arc);
    Npc npc{{wp.x, wp.y, wp.heading, spec.target_speed, 0.0}, spec.lane, spec.target_speed,
            spec.lane_changes, {}};
    npcs.push_back(std::move(npc));
  }

  // Pipeline state.
  PlannerState planner_state;
  planner_state.current_lane = sc.ego.lane;
  LaneOccupancy occupancy;
  LidarConfig lidar_cfg = sc.lidar;
  lidar_cfg.seed = sc.seed;
  lidar_cfg.rate_hz = sc.rates.lidar_hz;
  CropConfig crop_cfg{sc.perception.x_min, sc.perception.x_max, setup.lane_reject_halfwidth};

  auto active_lane = [&](const PlannerState& st) -> const Lane& {
    return st.mode == PlannerMode::Optimized ? setup.optimized
                                             : setup.lanes[static_cast<size_t>(st.current_lane)];
  };

  std::vector<LaneWaypoint> published =
      publish_trajectory(active_lane(planner_state), {ego.x, ego.y}, sc.publish_horizon_m);
  std::vector<LaneWaypoint> pending_segment;
  long pending_tick = -1;

  ControlCommand ego_cmd;
  double last_cost = 0.0;

  ArcTracker ego_progress;
  ego_progress.update(setup.centerline, {ego.x, ego.y});
  for (Npc& npc : npcs) npc.progress.update(setup.centerline, {npc.state.x, npc.state.y});

  std::vector<bool> in_contact(npcs.size(), false);
  std::vector<VehicleState> npc_states(npcs.size());
  const std::vector<std::vector<Vec2>> wall_list{setup.walls[0], setup.walls[1]};
  TimingAccumulator perception_ms, mpc_ms;

  const double dt = 1.0 / sc.rates.physics_hz;
  long lidar_k = 1, control_k = 1;
  long tick = 0;
  double peak_speed = ego.v, speed_sum = ego.v;
  long speed_samples = 1;

  RaceResult& result = out.result;
  const double start_progress = ego_progress.value();

  while (true) {
    const double t = static_cast<double>(tick) * dt;

    // Perception + planning at the scan rate.
    bool scan_fired = false;
    std::string decision_str;
    std::array<int, 3> scan_counts{0, 0, 0};
    int scan_lane = planner_state.current_lane;
    if (t >= static_cast<double>(lidar_k) / sc.rates.lidar_hz - 1e-9) {
      const Pose2 ego_pose{{ego.x, ego.y}, ego.yaw};
      std::vector<OrientedBox> boxes;
      boxes.reserve(npcs.size());
      for (const Npc& npc : npcs) boxes.push_back(car_box(npc.state));

      const PointCloud cloud = scan(ego_pose, boxes, wall_list, lidar_cfg,
                                    static_cast<uint64_t>(lidar_k - 1), t);
      const auto t0 = Clock::now();
      const PointCloud cropped = crop(cloud, crop_cfg);
      const ClassifiedCounts counts =
          classify(cropped, ego_pose, setup.sparse, crop_cfg.lane_reject_halfwidth);
      perception_ms.add(ms_since(t0));

      occupancy = update_occupancy(occupancy, counts.counts, t);
      if (planner_state.mode == PlannerMode::Optimized)
        planner_state.current_lane = effective_lane(ego_pose, setup.lanes);
      scan_lane = planner_state.current_lane;

      const DecideResult res = decide(planner_state, occupancy, sc.thresholds, t, sc.planner);
      planner_state = res.state;

      std::vector<LaneWaypoint> segment =
          publish_trajectory(active_lane(planner_state), ego_pose.pos, sc.publish_horizon_m);
      if (res.decision.kind == Decision::Kind::Brake) segment = brake_reference(segment, sc.planner);
      if (sc.inject_latency) {
        pending_segment = std::move(segment);
        pending_tick = tick;
      } else {
        published = std::move(segment);
      }

      scan_fired = true;
      decision_str = decision_label(res.decision);
      scan_counts = occupancy.counts;
      ++lidar_k;
    }

    // Control at the command rate.
    bool control_fired = false;
    if (t >= static_cast<double>(control_k) / sc.rates.control_hz - 1e-9) {
      if (sc.inject_latency && pending_tick >= 0 && pending_tick < tick) {
        published = std::move(pending_segment);
        pending_tick = -1;
      }
      const auto t0 = Clock::now();
      const MpcSolution sol = solve(ego, published, sc.mpc);
      mpc_ms.add(ms_since(t0));
      if (sol.ok) {
        ego_cmd = sol.command;
        last_cost = sol.cost;
      }
      control_fired = true;
      ++control_k;
    }

    // Trace rows at time t, before integrating.
    {
      TraceRow row;
      row.t = t;
      row.agent = "ego";
      row.x = ego.x;
      row.y = ego.y;
      row.yaw = ego.yaw;
      row.v = ego.v;
      row.lane = scan_lane;
      row.decision = decision_str;
      row.has_scan = scan_fired;
      if (scan_fired) {
        row.l0 = scan_counts[0];
        row.l1 = scan_counts[1];
        row.l2 = scan_counts[2];
      }
      row.accel = ego_cmd.accel;
      row.delta_cmd = ego_cmd.delta_cmd;
      row.has_control = control_fired;
      if (control_fired) row.cost = last_cost;
      out.trace.rows.push_back(std::move(row));
      for (size_t i = 0; i < npcs.size(); ++i) {
        TraceRow nrow;
        nrow.t = t;
        nrow.agent = "npc" + std::to_string(i);
        nrow.x = npcs[i].state.x;
        nrow.y = npcs[i].state.y;
        nrow.yaw = npcs[i].state.yaw;
        nrow.v = npcs[i].state.v;
        nrow.lane = npcs[i].assigned_lane;
        out.trace.rows.push_back(std::move(nrow));
      }
    }

    // Integrate to t + dt.
    ego = step_vehicle(ego, ego_cmd, dt, sc.mpc);
    for (Npc& npc : npcs) {
      while (!npc.pending.empty() && t >= npc.pending.front().time) {
        npc.assigned_lane = npc.pending.front().lane;
        npc.pending.erase(npc.pending.begin());
      }
      npc.state = step_npc(npc.state, setup.lanes[static_cast<size_t>(npc.assigned_lane)],
                           npc.target_speed, dt, sc.mpc);
    }
    ++tick;
    const double t_next = static_cast<double>(tick) * dt;

    if (!state_finite(ego)) {
      result.abort_reason = "non-finite ego state at t=" + std::to_string(t_next);
      break;
    }

    const double progress = ego_progress.update(setup.centerline, {ego.x, ego.y});
    const double track_width = 2.0 * setup.track.min_half_width();
    if (ego_progress.last_projection_distance() >= 2.0 * track_width) {
      result.abort_reason = "ego left the track at t=" + std::to_string(t_next);
      break;
    }
    for (Npc& npc : npcs) npc.progress.update(setup.centerline, {npc.state.x, npc.state.y});

    for (size_t i = 0; i < npcs.size(); ++i) npc_states[i] = npcs[i].state;
    for (const CollisionEvent& ev : check_collisions(ego, npc_states, in_contact, t_next))
      result.collisions.push_back(ev);

    peak_speed = std::max(peak_speed, ego.v);
    speed_sum += ego.v;
    ++speed_samples;

    if (progress - start_progress >= perimeter) {
      result.finished = true;
      result.raw_lap_time = t_next;
      break;
    }
    if (t_next > sc.max_sim_time) break;
  }

  if (!result.finished && result.abort_reason.empty())
    result.raw_lap_time = static_cast<double>(tick) * dt;
  result.total_time =
      result.raw_lap_time + kCollisionPenalty * static_cast<double>(result.collisions.size());
  result.peak_speed = peak_speed;
  result.mean_speed = speed_sum / static_cast<double>(speed_samples);
  for (const Npc& npc : npcs)
    if (npc.progress.value() < ego_progress.value()) ++result.overtakes_completed;

  out.timings.perception_mean_ms = perception_ms.mean();
  out.timings.perception_max_ms = perception_ms.max;
  out.timings.perception_calls = perception_ms.calls;
  out.timings.mpc_mean_ms = mpc_ms.mean();
  out.timings.mpc_max_ms = mpc_ms.max;
  out.timings.mpc_calls = mpc_ms.calls;
  return out;
}

}  // namespace racing
