// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end runs live here rather than in the unit tests.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "planner_oracle.hpp"
#include "racing/sim.hpp"
#include "racing/svg.hpp"

using namespace racing;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::vector<std::string> failures;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <typename T>
  void close(T actual, T expected, T tol, const std::string& what) {
    if (!(std::abs(actual - expected) <= tol)) {
      std::ostringstream ss;
      ss << what << " (actual " << actual << ", expected " << expected << " +- " << tol << ")";
      failures.push_back(ss.str());
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("racesim_accept_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shared across criteria so the track and raceline build once.
struct Shared {
  Scenario scenario = default_scenario();
  RaceSetup setup;
  bool default_race_ran = false;
  RaceOutcome default_outcome;

  const RaceOutcome& default_race() {
    if (!default_race_ran) {
      default_outcome = run_race(scenario, setup);
      default_race_ran = true;
    }
    return default_outcome;
  }
};

Shared shared;

// ---- criterion 1 -----------------------------------------------------------

void end_to_end(Check& c) {
  const auto wall0 = std::chrono::steady_clock::now();
  const RaceOutcome& outcome = shared.default_race();

  Scenario baseline_sc = shared.scenario;
  baseline_sc.planner.disable_switching = true;
  const RaceOutcome baseline = run_race(baseline_sc, shared.setup);
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  c.require(outcome.result.abort_reason.empty(), "default race aborted");
  c.require(outcome.result.finished, "default race did not finish a lap");
  c.require(outcome.result.collisions.empty(),
            "default race had " + std::to_string(outcome.result.collisions.size()) +
                " collisions");
  c.require(outcome.result.overtakes_completed == 5,
            "overtakes " + std::to_string(outcome.result.overtakes_completed) + " != 5");
  c.require(baseline.result.finished, "baseline race did not finish");
  c.require(outcome.result.total_time <= 0.97 * baseline.result.total_time,
            "lane switching saves < 3% (stack " + std::to_string(outcome.result.total_time) +
                " s vs baseline " + std::to_string(baseline.result.total_time) + " s)");
  c.require(wall_s < 60.0, "runtime " + std::to_string(wall_s) + " s exceeds 60 s");
}

// ---- criterion 2 -----------------------------------------------------------

void perception_budget(Check& c) {
  SparseLaneSet sparse = make_sparse(shared.setup.lanes, 4);
  for (const auto& poly : sparse.polylines)
    c.require(poly.size() <= 200, "sparse lane exceeds 200 points");

  const LaneWaypoint ego_wp = waypoint_at_arc(shared.setup.lanes[2], 10.0);
  const Pose2 ego{{ego_wp.x, ego_wp.y}, ego_wp.heading};

  std::mt19937 rng(123);
  std::uniform_real_distribution<double> x(-10.0, 100.0), y(-40.0, 40.0);
  PointCloud cloud;
  cloud.points.reserve(20000);
  for (int i = 0; i < 20000; ++i) cloud.points.push_back({x(rng), y(rng)});

  long sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int call = 0; call < 100; ++call) {
    const ClassifiedCounts counts = classify(cloud, ego, sparse, 1.25);
    sink += counts.counts[0] + counts.discarded;
  }
  if (sink < 0) std::printf("unreachable %ld\n", sink);
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const double mean_ms = total_ms / 100.0;
  c.require(mean_ms < 20.0,
            "classify mean " + std::to_string(mean_ms) + " ms per call exceeds 20 ms");
}

// ---- criterion 3 -----------------------------------------------------------

long truth_table_mismatches() {
  const Thresholds th{9, 3};
  const PlannerParams pp;
  const std::array<int, 5> levels{0, th.theta_e - 1, th.theta_e, th.theta_o, th.theta_o + 1};
  const std::array<std::array<int, 3>, 2> prev_extremes{
      std::array<int, 3>{0, 0, 0},
      std::array<int, 3>{th.theta_o + 1, th.theta_o + 1, th.theta_o + 1}};
  long mismatches = 0;
  for (int a : levels)
    for (int b : levels)
      for (int l2v : levels)
        for (const auto& prev : prev_extremes)
          for (int lane = 0; lane < 3; ++lane)
            for (int mode = 0; mode < 2; ++mode)
              for (int streak : {0, 4}) {
                PlannerState st;
                st.mode = mode == 0 ? PlannerMode::LaneFollow : PlannerMode::Optimized;
                st.current_lane = lane;
                st.clear_streak = streak;
                LaneOccupancy occ;
                occ.counts = {a, b, l2v};
                occ.prev = prev;
                occ.stamp = 100.0;
                const DecideResult impl = decide(st, occ, th, 100.0, pp);
                const oracle::Outcome want = oracle::decide(st, occ, th, 100.0, pp);
                if (decision_label(impl.decision) != want.label ||
                    impl.state.current_lane != want.state.current_lane ||
                    impl.state.mode != want.state.mode ||
                    impl.state.clear_streak != want.state.clear_streak)
                  ++mismatches;
              }
  return mismatches;
}

void switch_rule_oracle(Check& c) {
  const long mismatches = truth_table_mismatches();
  c.require(mismatches == 0, std::to_string(mismatches) + " truth-table mismatches");
}

// ---- criterion 4 -----------------------------------------------------------

void pause_invariant(Check& c) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Scenario sc = shared.scenario;
    sc.seed = seed;
    const RaceOutcome outcome = run_race(sc, shared.setup);
    c.require(outcome.result.abort_reason.empty(),
              "seed " + std::to_string(seed) + " aborted: " + outcome.result.abort_reason);
    const ReplayResult replay = replay_trace(outcome.trace);
    for (const std::string& v : replay.violations)
      c.require(false, "seed " + std::to_string(seed) + ": " + v);
  }
}

// ---- criterion 5 -----------------------------------------------------------

void engage_timing(Check& c) {
  Scenario sc = shared.scenario;
  sc.npcs.clear();
  sc.ego.start_speed = 45.0;
  const RaceOutcome outcome = run_race(sc, shared.setup);

  double engage_t = -1.0;
  int transitions_before = 0;
  for (const TraceRow& r : outcome.trace.rows) {
    if (r.agent != "ego" || !r.has_scan) continue;
    if (r.decision == "Engage") {
      engage_t = r.t;
      break;
    }
    if (r.decision.rfind("Switch", 0) == 0) ++transitions_before;
  }
  c.require(engage_t >= 0.0, "no engage in the opponent-free race");
  c.close(engage_t, 0.5, 1e-9, "engage time");
  c.require(transitions_before == 0, "a switch happened before the engage");
}

// ---- criterion 6 -----------------------------------------------------------

void linearization_accuracy(Check& c) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> yaw(-3.0, 3.0), v(1.0, 45.0), delta(-0.3, 0.3),
      accel(-8.0, 8.0), pos(-100.0, 100.0);
  const double dt = 0.06, L = 3.0, h = 1e-7;

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector4d z0{pos(rng), pos(rng), yaw(rng), v(rng)};
    const double a = accel(rng), d = delta(rng);
    Eigen::Matrix4d A;
    Eigen::Matrix<double, 4, 2> B;
    linearize({z0[0], z0[1], z0[2], z0[3], 0.0}, {a, d}, dt, L, A, B);
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d zp = z0, zm = z0;
      zp[j] += h;
      zm[j] -= h;
      const Eigen::Vector4d col =
          (dynamics_nominal(zp, a, d, dt, L) - dynamics_nominal(zm, a, d, dt, L)) / (2.0 * h);
      for (int i = 0; i < 4; ++i)
        worst = std::max(worst, std::abs(A(i, j) - col[i]) / std::max(1.0, std::abs(col[i])));
    }
    const Eigen::Vector4d da =
        (dynamics_nominal(z0, a + h, d, dt, L) - dynamics_nominal(z0, a - h, d, dt, L)) /
        (2.0 * h);
    const Eigen::Vector4d dd =
        (dynamics_nominal(z0, a, d + h, dt, L) - dynamics_nominal(z0, a, d - h, dt, L)) /
        (2.0 * h);
    for (int i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(B(i, 0) - da[i]) / std::max(1.0, std::abs(da[i])));
      worst = std::max(worst, std::abs(B(i, 1) - dd[i]) / std::max(1.0, std::abs(dd[i])));
    }
  }
  c.require(worst < 1e-4, "finite-difference deviation " + std::to_string(worst));

  // Convergence order under perturbation halving.
  const Eigen::Vector4d z0{2.0, -1.0, 0.4, 25.0};
  const double a0 = 1.5, d0 = 0.05;
  Eigen::Matrix4d A;
  Eigen::Matrix<double, 4, 2> B;
  linearize({z0[0], z0[1], z0[2], z0[3], 0.0}, {a0, d0}, dt, L, A, B);
  const Eigen::Vector4d f0 = dynamics_nominal(z0, a0, d0, dt, L);
  const Eigen::Vector4d dz_dir = Eigen::Vector4d{0.3, -0.2, 0.1, 0.5}.normalized();
  const Eigen::Vector2d du_dir = Eigen::Vector2d{0.7, 0.1}.normalized();
  double prev = -1.0, order_sum = 0.0;
  int n = 0;
  for (double eps = 0.1; eps > 1e-3; eps /= 2.0) {
    const Eigen::Vector4d dz = eps * dz_dir;
    const Eigen::Vector2d du = eps * du_dir;
    const double err =
        (dynamics_nominal(z0 + dz, a0 + du[0], d0 + du[1], dt, L) - (f0 + A * dz + B * du))
            .norm();
    if (prev > 0.0 && err > 1e-14) {
      order_sum += std::log2(prev / err);
      ++n;
    }
    prev = err;
  }
  c.require(n >= 4 && order_sum / n >= 1.9,
            "linearization order " + std::to_string(n > 0 ? order_sum / n : 0.0) + " below 1.9");
}

// ---- criterion 7 -----------------------------------------------------------

void mpc_tracking(Check& c) {
  MpcConfig cfg;

  // Straight line, 1 m offset, 30 m/s.
  {
    VehicleState state{0.0, 1.0, 0.0, 30.0, 0.0};
    double err_3s = 1.0;
    for (int tick = 0; tick < 300; ++tick) {
      std::vector<LaneWaypoint> seg;
      for (double x = state.x - 4.0; x <= state.x + 110.0; x += 2.0)
        seg.push_back({x, 0.0, 0.0, 0.0, 30.0});
      const MpcSolution sol = solve(state, seg, cfg);
      if (!sol.ok) {
        c.require(false, "straight-line solve failed");
        return;
      }
      state = step_vehicle(state, sol.command, 0.01, cfg);
      if (tick == 299) err_3s = std::abs(state.y);
    }
    c.require(err_3s < 0.05,
              "straight-line error " + std::to_string(err_3s) + " m after 3 s");
  }

  // 200 m circle at 30 m/s: steady-state lateral error.
  {
    const double R = 200.0;
    std::vector<Vec2> circle_pts;
    for (int i = 0; i < 628; ++i) {
      const double a = 2.0 * kPi * i / 628.0;
      circle_pts.push_back({R * std::sin(a), R - R * std::cos(a)});  // starts at origin heading +x
    }
    Lane circle = build_lane(LaneId::Center, circle_pts, 2.0);
    for (LaneWaypoint& w : circle.waypoints) w.target_speed = 30.0;

    VehicleState state{0.0, 0.0, 0.0, 30.0, 0.0};
    double steady_err = 0.0;
    for (int tick = 0; tick < 2000; ++tick) {  // 20 s
      if (tick % 2 == 0) {
        const auto seg = publish_trajectory(circle, {state.x, state.y}, 90.0);
        const MpcSolution sol = solve(state, seg, cfg);
        if (!sol.ok) {
          c.require(false, "circle solve failed");
          return;
        }
        state = step_vehicle(state, sol.command, 0.01, cfg);
      } else {
        const auto seg = publish_trajectory(circle, {state.x, state.y}, 90.0);
        state = step_vehicle(state, solve(state, seg, cfg).command, 0.01, cfg);
      }
      if (tick >= 1000) {
        const double err = std::abs(std::hypot(state.x, state.y - R) - R);
        steady_err = std::max(steady_err, err);
      }
    }
    c.require(steady_err < 0.3,
              "circle steady-state error " + std::to_string(steady_err) + " m");
  }
}

// ---- criterion 8 -----------------------------------------------------------

void raceline_annulus(Check& c) {
  const TrackModel track = generate_oval(0.0, 100.0, 15.0, 2.0);
  RacelineProblem pb = make_raceline_problem(track, 0.95);
  for (double& a : pb.alpha_max) a = 5.0;
  const RacelineResult rr = optimize_min_curvature(pb);

  double worst = 0.0;
  for (size_t i = 0; i < rr.lane.size(); ++i)
    worst = std::max(worst, std::abs(std::abs(rr.lane.at(static_cast<long>(i)).curvature) -
                                     1.0 / 105.0) *
                                105.0);
  c.require(worst < 0.02, "annulus curvature off by " + std::to_string(worst * 100.0) + "%");

  const Lane center = lane_offset(track, 0.0, 2.0);
  c.require(total_squared_curvature(rr.lane) < total_squared_curvature(center),
            "raceline total squared curvature not below the centerline");
}

// ---- criterion 9 -----------------------------------------------------------

void velocity_profile_checks(Check& c) {
  SpeedLimits limits;
  std::array<const Lane*, 4> lanes{&shared.setup.lanes[0], &shared.setup.lanes[1],
                                   &shared.setup.lanes[2], &shared.setup.optimized};
  for (const Lane* lane : lanes) {
    const long n = static_cast<long>(lane->size());
    for (long i = 0; i < n; ++i) {
      const double v0 = lane->at(i).target_speed;
      const double v1 = lane->at(i + 1).target_speed;
      const double ds = lane->step(i);
      const double k = std::abs(lane->at(i).curvature);
      if (k > 1e-9)
        c.require(v0 <= std::sqrt(limits.a_lat_max / k) + 1e-9, "curvature cap violated");
      c.require(v1 * v1 <= v0 * v0 + 2.0 * limits.a_accel_max * ds + 1e-6,
                "forward acceleration bound violated");
      c.require(v0 * v0 <= v1 * v1 + 2.0 * limits.a_brake_max * ds + 1e-6,
                "backward braking bound violated");
    }
    const Lane again = velocity_profile(*lane, limits);
    for (size_t i = 0; i < lane->size(); ++i)
      c.require(std::abs(again.waypoints[i].target_speed - lane->waypoints[i].target_speed) <
                    1e-9,
                "profile is not idempotent");
    if (!c.failures.empty()) return;  // avoid flooding
  }
}

// ---- criterion 10 ----------------------------------------------------------

void penalty_arithmetic(Check& c) {
  for (int k = 1; k <= 3; ++k) {
    Scenario sc = shared.scenario;
    sc.npcs.clear();
    for (int i = 0; i < k; ++i) {
      NpcSpec blocker;
      blocker.lane = 2;
      blocker.target_speed = 1.0;
      blocker.start_arc = 150.0 + 220.0 * i;
      sc.npcs.push_back(blocker);
    }
    sc.planner.disable_switching = true;
    sc.ego.start_speed = 40.0;
    const RaceOutcome outcome = run_race(sc, shared.setup);
    c.require(outcome.result.finished, "blocker race k=" + std::to_string(k) + " did not finish");
    c.require(static_cast<int>(outcome.result.collisions.size()) == k,
              "k=" + std::to_string(k) + ": " +
                  std::to_string(outcome.result.collisions.size()) + " collisions");
    c.require(outcome.result.total_time ==
                  outcome.result.raw_lap_time + kCollisionPenalty * k,
              "k=" + std::to_string(k) + ": penalty arithmetic violated");
  }
}

// ---- criterion 11 ----------------------------------------------------------

void determinism(Check& c) {
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  const fs::path dir_c = fresh_dir("det_c");
  const std::string scenario_file = std::string(RACESIM_SOURCE_DIR) + "/scenarios/default.json";

  const std::string base = std::string(RACESIM_BIN) + " race " + scenario_file;
  const int code_a =
      std::system((base + " --out " + dir_a.string() + " > /dev/null 2>&1").c_str());
  const int code_b =
      std::system((base + " --out " + dir_b.string() + " > /dev/null 2>&1").c_str());
  const int code_c = std::system(
      (base + " --seed 43 --out " + dir_c.string() + " > /dev/null 2>&1").c_str());
  c.require(WIFEXITED(code_a) && WEXITSTATUS(code_a) == 0, "race run A failed");
  c.require(WIFEXITED(code_b) && WEXITSTATUS(code_b) == 0, "race run B failed");
  c.require(WIFEXITED(code_c), "race run with seed 43 crashed");

  const std::string ta = slurp(dir_a / "trace.csv");
  const std::string tb = slurp(dir_b / "trace.csv");
  const std::string tc = slurp(dir_c / "trace.csv");
  c.require(!ta.empty(), "trace A is empty");
  c.require(ta == tb, "same-seed traces are not byte-identical");
  c.require(ta != tc, "seed change did not alter the trace");

  c.require(truth_table_mismatches() == 0, "truth table depends on something besides inputs");
}

// ---- criterion 12 ----------------------------------------------------------

void lidar_geometry(Check& c) {
  LidarConfig cfg;
  cfg.noise_sigma = 0.0;

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pos(-40.0, 40.0), yaw(-kPi, kPi);
  auto edge_dist = [](const Vec2& p, const OrientedBox& box) {
    const auto corners = box.corners();
    double best = 1e18;
    for (int i = 0; i < 4; ++i)
      best = std::min(best,
                      std::sqrt(point_segment_dist2(p, corners[i], corners[(i + 1) % 4])));
    return best;
  };

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<OrientedBox> boxes;
    for (int b = 0; b < 5; ++b) boxes.push_back({{{pos(rng), pos(rng)}, yaw(rng)}, 5.0, 1.9});
    std::vector<Vec2> wall;
    for (int i = 0; i <= 20; ++i) wall.push_back({-60.0 + 6.0 * i, 45.0});
    const Pose2 ego{{0.2 * pos(rng), 0.2 * pos(rng)}, yaw(rng)};
    const PointCloud cloud = scan(ego, boxes, {wall}, cfg, static_cast<uint64_t>(trial), 0.0);
    for (const Vec2& local : cloud.points) {
      const Vec2 world = ego.to_world(local);
      double best = 1e18;
      for (size_t i = 0; i + 1 < wall.size(); ++i)
        best = std::min(best, std::sqrt(point_segment_dist2(world, wall[i], wall[i + 1])));
      for (const OrientedBox& b : boxes) best = std::min(best, edge_dist(world, b));
      if (best >= 1e-9) {
        c.require(false, "zero-noise return " + std::to_string(best) + " m off geometry");
        return;
      }
    }
  }

  const OrientedBox front{{{20.0, 0.0}, 0.0}, 5.0, 1.9};
  const OrientedBox hidden{{{40.0, 0.0}, 0.0}, 5.0, 1.9};
  const PointCloud cloud = scan({{0, 0}, 0.0}, {front, hidden}, {}, cfg, 0, 0.0);
  int on_hidden = 0;
  for (const Vec2& p : cloud.points)
    if (edge_dist(p, hidden) < 1e-6) ++on_hidden;
  c.require(on_hidden == 0,
            std::to_string(on_hidden) + " returns from a fully occluded vehicle");
}

// ---- criterion 13 ----------------------------------------------------------

void speed_regime(Check& c) {
  const RaceOutcome& outcome = shared.default_race();
  c.require(outcome.result.peak_speed > 45.0,
            "peak speed " + std::to_string(outcome.result.peak_speed) + " m/s below 45");

  double ideal_time = 0.0;
  const Lane& opt = shared.setup.optimized;
  for (long i = 0; i < static_cast<long>(opt.size()); ++i)
    ideal_time += opt.step(i) / opt.at(i).target_speed;
  const double ideal_mean = opt.length() / ideal_time;
  c.require(outcome.result.mean_speed > 0.8 * ideal_mean,
            "mean speed " + std::to_string(outcome.result.mean_speed) + " m/s below 0.8 x " +
                std::to_string(ideal_mean));
}

}  // namespace

int main() {
  shared.setup = build_setup(shared.scenario);

  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "end-to-end race: 5 clean overtakes, 3% faster than no-switching", end_to_end},
      {2, "perception budget: classify 20k points in < 20 ms", perception_budget},
      {3, "switch rule matches the brute-force truth table", switch_rule_oracle},
      {4, "pause lockout holds over 20 randomized-seed races", pause_invariant},
      {5, "optimized-lane engage on exactly the 5th clear scan", engage_timing},
      {6, "mpc linearization matches finite differences at order 2", linearization_accuracy},
      {7, "mpc tracking: straight recovery and circle steady state", mpc_tracking},
      {8, "raceline annulus optimum within 2% of 1/105", raceline_annulus},
      {9, "velocity profile bounds and idempotence", velocity_profile_checks},
      {10, "collision penalty arithmetic, k = 1..3", penalty_arithmetic},
      {11, "byte-identical traces per seed, noise-only seed effects", determinism},
      {12, "lidar returns on geometry, occlusion blocks hidden cars", lidar_geometry},
      {13, "speed regime: peak above 45 m/s, mean near the raceline ideal", speed_regime},
  };

  int failed = 0;
  for (const Criterion& cr : criteria) {
    Check check;
    try {
      cr.fn(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    if (check.failures.empty()) {
      std::printf("criterion %2d: PASS  %s\n", cr.id, cr.name);
    } else {
      ++failed;
      std::printf("criterion %2d: FAIL  %s\n", cr.id, cr.name);
      for (const std::string& f : check.failures)
        std::printf("              - %s\n", f.c_str());
    }
    std::fflush(stdout);
  }
  if (failed > 0) std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
