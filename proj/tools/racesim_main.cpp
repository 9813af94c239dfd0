#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "racing/sim.hpp"
#include "racing/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_build_lanes(const racing::TrackSpec& track_spec, const std::string& out_dir,
                    const racing::SpeedLimits& limits, double car_half_width, int iterations,
                    double alpha_max_override) {
  racing::TrackModel track;
  if (track_spec.type == racing::TrackSpec::Type::Oval)
    track = racing::generate_oval(track_spec.straight_length, track_spec.turn_radius,
                                  track_spec.track_width, track_spec.spacing);
  else
    track = racing::load_centerline(track_spec.csv_path);

  auto lanes = racing::build_base_lanes(track);
  for (racing::Lane& lane : lanes) lane = racing::velocity_profile(lane, limits);

  racing::RacelineProblem pb = racing::make_raceline_problem(track, car_half_width);
  pb.iterations = iterations;
  if (alpha_max_override >= 0.0)
    for (double& a : pb.alpha_max) a = std::min(a, alpha_max_override);
  racing::RacelineResult rr = racing::optimize_min_curvature(pb);
  const racing::Lane optimized = racing::velocity_profile(rr.lane, limits);
  if (!rr.converged)
    std::cerr << "warning: raceline optimizer hit the iteration budget before converging\n";

  fs::create_directories(out_dir);
  racing::save_lane_csv(lanes[0], out_dir + "/inner.csv");
  racing::save_lane_csv(lanes[1], out_dir + "/center.csv");
  racing::save_lane_csv(lanes[2], out_dir + "/outer.csv");
  racing::save_lane_csv(optimized, out_dir + "/optimized.csv");
  std::cout << "wrote 4 lane files to " << out_dir << "\n";
  return 0;
}

int cmd_race(const std::string& scenario_path, const std::string& out_dir, long seed_override,
             bool want_svg, bool inject_latency) {
  racing::Scenario scenario =
      scenario_path.empty() ? racing::default_scenario() : racing::load_scenario(scenario_path);
  if (seed_override >= 0) scenario.seed = static_cast<uint64_t>(seed_override);
  if (inject_latency) scenario.inject_latency = true;

  fs::create_directories(out_dir);
  const racing::RaceSetup setup = racing::build_setup(scenario);
  const racing::RaceOutcome outcome = racing::run_race(scenario, setup);
  const racing::RaceResult& r = outcome.result;

  const std::string trace_path = out_dir + "/trace.csv";
  racing::write_trace_csv(outcome.trace, trace_path);

  std::string svg_path;
  if (want_svg && !outcome.trace.rows.empty()) {
    svg_path = out_dir + "/race.svg";
    const std::array<racing::Lane, 4> lanes{setup.lanes[0], setup.lanes[1], setup.lanes[2],
                                            setup.optimized};
    racing::plot_trace(outcome.trace, lanes, svg_path);
  }

  json report;
  report["finished"] = r.finished;
  report["raw_lap_time_s"] = r.raw_lap_time;
  report["total_time_s"] = r.total_time;
  report["overtakes_completed"] = r.overtakes_completed;
  report["peak_speed_mps"] = r.peak_speed;
  report["mean_speed_mps"] = r.mean_speed;
  report["collisions"] = json::array();
  for (const racing::CollisionEvent& c : r.collisions)
    report["collisions"].push_back({{"time_s", c.time}, {"npc", c.npc_index},
                                    {"penalty_s", c.penalty}});
  report["abort_reason"] = r.abort_reason;
  report["raceline_converged"] = setup.raceline_converged;
  report["timing"] = {{"perception_mean_ms", outcome.timings.perception_mean_ms},
                      {"perception_max_ms", outcome.timings.perception_max_ms},
                      {"perception_calls", outcome.timings.perception_calls},
                      {"mpc_mean_ms", outcome.timings.mpc_mean_ms},
                      {"mpc_max_ms", outcome.timings.mpc_max_ms},
                      {"mpc_calls", outcome.timings.mpc_calls}};
  report["config"] = racing::scenario_to_json(scenario);
  report["artifacts"] = {{"trace", trace_path}};
  if (!svg_path.empty()) report["artifacts"]["svg"] = svg_path;

  std::ofstream rep(out_dir + "/report.json");
  rep << report.dump(2) << "\n";
  rep.close();

  std::cout << (r.finished ? "finished" : "did not finish") << ": raw " << r.raw_lap_time
            << " s, total " << r.total_time << " s, overtakes " << r.overtakes_completed
            << ", collisions " << r.collisions.size() << ", peak " << r.peak_speed
            << " m/s, mean " << r.mean_speed << " m/s\n";

  if (!r.abort_reason.empty()) {
    std::cerr << "simulation aborted: " << r.abort_reason << "\n";
    return 3;
  }
  return (r.finished && r.collisions.empty()) ? 0 : 1;
}

int cmd_plot(const std::string& trace_path, const std::string& lanes_dir,
             const std::string& out_path) {
  const racing::Trace trace = racing::read_trace_csv(trace_path);
  if (trace.rows.empty()) throw std::runtime_error("plot: trace has no rows");
  const std::array<racing::Lane, 4> lanes{
      racing::load_lane_csv(lanes_dir + "/inner.csv", racing::LaneId::Inner),
      racing::load_lane_csv(lanes_dir + "/center.csv", racing::LaneId::Center),
      racing::load_lane_csv(lanes_dir + "/outer.csv", racing::LaneId::Outer),
      racing::load_lane_csv(lanes_dir + "/optimized.csv", racing::LaneId::Optimized)};
  const racing::PlotStats stats = racing::plot_trace(trace, lanes, out_path);
  std::cout << "max_lateral_error_m=" << stats.max_lateral_error
            << " settled_max_lateral_error_m=" << stats.max_lateral_error_settled
            << " switch_markers=" << stats.switch_markers
            << " engage_markers=" << stats.engage_markers
            << " brake_markers=" << stats.brake_markers << "\n";
  return 0;
}

int cmd_verify_trace(const std::string& trace_path) {
  const racing::Trace trace = racing::read_trace_csv(trace_path);
  const racing::ReplayResult replay = racing::replay_trace(trace);
  for (const std::string& v : replay.violations) std::cerr << "violation: " << v << "\n";
  std::cout << (replay.ok() ? "trace ok" : "trace has violations") << " ("
            << replay.scans.size() << " scans replayed)\n";
  return replay.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D multi-agent racing stack: lane perception, switching planner, MPC tracking"};
  app.require_subcommand(1);

  // build-lanes
  auto* bl = app.add_subcommand("build-lanes", "Generate lane and raceline CSV files");
  racing::TrackSpec bl_track;
  std::string bl_csv, bl_out = "lanes";
  racing::SpeedLimits bl_limits;
  double bl_chw = 0.95, bl_alpha_max = -1.0;
  int bl_iters = 2000;
  bl->add_option("--straight", bl_track.straight_length, "Oval straight length [m]");
  bl->add_option("--radius", bl_track.turn_radius, "Oval turn radius [m]");
  bl->add_option("--width", bl_track.track_width, "Track width [m]");
  bl->add_option("--spacing", bl_track.spacing, "Waypoint spacing [m]");
  bl->add_option("--track", bl_csv, "Centerline CSV instead of the oval");
  bl->add_option("--out", bl_out, "Output directory");
  bl->add_option("--v-cap", bl_limits.v_cap, "Speed cap [m/s]");
  bl->add_option("--a-lat", bl_limits.a_lat_max, "Lateral acceleration limit [m/s^2]");
  bl->add_option("--a-accel", bl_limits.a_accel_max, "Acceleration limit [m/s^2]");
  bl->add_option("--a-brake", bl_limits.a_brake_max, "Braking limit [m/s^2]");
  bl->add_option("--car-half-width", bl_chw, "Raceline clearance [m]");
  bl->add_option("--iterations", bl_iters, "Raceline optimizer iterations");
  bl->add_option("--alpha-max", bl_alpha_max, "Uniform cap on the raceline lateral bound [m]");

  // race
  auto* rc = app.add_subcommand("race", "Run a race scenario");
  std::string rc_scenario, rc_out = "out";
  long rc_seed = -1;
  bool rc_svg = false, rc_latency = false;
  rc->add_option("scenario", rc_scenario, "Scenario JSON (omit for the built-in default)");
  rc->add_option("--out", rc_out, "Output directory");
  rc->add_option("--seed", rc_seed, "Override the scenario seed");
  rc->add_flag("--svg", rc_svg, "Also render race.svg");
  rc->add_flag("--inject-latency", rc_latency, "Delay planner output by one control tick");

  // plot
  auto* pl = app.add_subcommand("plot", "Render a trace to SVG");
  std::string pl_trace, pl_lanes = "lanes", pl_out = "race.svg";
  pl->add_option("--trace", pl_trace, "Trace CSV")->required();
  pl->add_option("--lanes", pl_lanes, "Directory with the 4 lane CSVs");
  pl->add_option("--out", pl_out, "Output SVG path");

  // verify-trace (maintenance command, hidden from the listing)
  auto* vt = app.add_subcommand("verify-trace", "Replay a trace and check its invariants");
  vt->group("");
  std::string vt_trace;
  vt->add_option("trace", vt_trace, "Trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bl->parsed()) {
      if (!bl_csv.empty()) {
        bl_track.type = racing::TrackSpec::Type::Csv;
        bl_track.csv_path = bl_csv;
      }
      return cmd_build_lanes(bl_track, bl_out, bl_limits, bl_chw, bl_iters, bl_alpha_max);
    }
    if (rc->parsed()) return cmd_race(rc_scenario, rc_out, rc_seed, rc_svg, rc_latency);
    if (pl->parsed()) return cmd_plot(pl_trace, pl_lanes, pl_out);
    if (vt->parsed()) return cmd_verify_trace(vt_trace);
  } catch (const racing::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
