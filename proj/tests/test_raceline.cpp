#include <doctest.h>

#include <cmath>
#include <random>

#include "racing/raceline.hpp"

using namespace racing;

TEST_SUITE_BEGIN("raceline");

TEST_CASE("annulus: optimum is the largest inscribed circle") {
  const TrackModel track = generate_oval(0.0, 100.0, 15.0, 2.0);
  RacelineProblem pb = make_raceline_problem(track, 0.95);
  for (double& a : pb.alpha_max) a = 5.0;

  const RacelineResult rr = optimize_min_curvature(pb);
  CHECK(rr.converged);

  // Radius 105 everywhere, so curvature 1/105 within 2 percent.
  for (size_t i = 0; i < rr.lane.size(); ++i) {
    const double k = std::abs(rr.lane.at(static_cast<long>(i)).curvature);
    CHECK(k == doctest::Approx(1.0 / 105.0).epsilon(0.02));
    CHECK(rr.lane.position(static_cast<long>(i)).norm() == doctest::Approx(105.0).epsilon(0.005));
  }

  const Lane center = lane_offset(track, 0.0, 2.0);
  CHECK(total_squared_curvature(rr.lane) < total_squared_curvature(center));
}

TEST_CASE("fully constrained problem returns the centerline") {
  const TrackModel track = generate_oval(300.0, 100.0, 15.0, 2.0);
  RacelineProblem pb = make_raceline_problem(track, 0.95);
  for (double& a : pb.alpha_max) a = 0.0;
  const RacelineResult rr = optimize_min_curvature(pb);
  const Lane center = lane_offset(track, 0.0, 2.0);
  REQUIRE(rr.lane.size() == center.size());
  for (size_t i = 0; i < center.size(); ++i)
    CHECK((rr.lane.position(static_cast<long>(i)) - center.position(static_cast<long>(i))).norm() <
          1e-12);
}

TEST_CASE("objective never increases across iterations") {
  const TrackModel track = generate_oval(300.0, 100.0, 15.0, 2.0);
  const RacelineProblem pb = make_raceline_problem(track, 0.95);
  const RacelineResult rr = optimize_min_curvature(pb);
  REQUIRE(rr.objective_history.size() > 2);
  for (size_t i = 1; i < rr.objective_history.size(); ++i)
    CHECK(rr.objective_history[i] <= rr.objective_history[i - 1] + 1e-15);
  CHECK(rr.objective_history.back() < rr.objective_history.front());
}

TEST_CASE("stadium raceline cuts in at the apex and out on the straights") {
  const double L = 300.0, R = 100.0;
  const TrackModel track = generate_oval(L, R, 15.0, 2.0);
  const RacelineProblem pb = make_raceline_problem(track, 0.95);
  const RacelineResult rr = optimize_min_curvature(pb);
  const Lane center = lane_offset(track, 0.0, 2.0);

  // Signed lateral offset from the centerline: positive is toward the turn
  // centers on this counter-clockwise track.
  auto lateral_at = [&](const Vec2& query) {
    double best = 1e18;
    double lateral = 0.0;
    for (size_t i = 0; i < rr.lane.size(); ++i) {
      const double d = (rr.lane.position(static_cast<long>(i)) - query).squared_norm();
      if (d < best) {
        best = d;
        lateral = project(center, rr.lane.position(static_cast<long>(i))).lateral;
      }
    }
    return lateral;
  };

  const double apex_right = lateral_at({L / 2.0 + R, 0.0});
  const double apex_left = lateral_at({-L / 2.0 - R, 0.0});
  const double mid_bottom = lateral_at({0.0, -R});
  const double mid_top = lateral_at({0.0, R});
  CHECK(apex_right > 2.0);
  CHECK(apex_left > 2.0);
  CHECK(mid_bottom < -2.0);
  CHECK(mid_top < -2.0);

  // Feasibility: the line stays inside the track minus the car half-width.
  for (size_t i = 0; i < rr.lane.size(); ++i) {
    const Projection p = project(center, rr.lane.position(static_cast<long>(i)));
    CHECK(std::abs(p.lateral) <= 7.5 - 0.95 + 0.15);
  }

  CHECK(total_squared_curvature(rr.lane) < total_squared_curvature(center));
}

TEST_CASE("analytic gradient matches central differences") {
  const TrackModel track = generate_oval(0.0, 40.0, 15.0, 2.0);
  const size_t n = track.size();
  std::vector<Vec2> center = track.centerline;
  std::vector<Vec2> normals(n);
  for (size_t i = 0; i < n; ++i)
    normals[i] = (track.at(static_cast<long>(i) + 1) - track.at(static_cast<long>(i) - 1))
                     .normalized()
                     .perp();

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> alpha(n);
  for (double& a : alpha) a = dist(rng);

  const std::vector<double> grad = detail::raceline_gradient(center, normals, alpha);
  const double h = 1e-6;
  for (size_t j = 0; j < n; j += 7) {
    std::vector<double> ap = alpha, am = alpha;
    ap[j] += h;
    am[j] -= h;
    const double fd = (detail::raceline_objective(center, normals, ap) -
                       detail::raceline_objective(center, normals, am)) /
                      (2.0 * h);
    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("velocity profile on a straight-heavy track hits the cap") {
  const double L = 300.0, R = 100.0;
  const TrackModel track = generate_oval(L, R, 15.0, 2.0);
  const Lane lane = lane_offset(track, 0.0, 2.0);
  SpeedLimits limits;  // v_cap 50, a_lat 12, a_accel 6, a_brake 10
  const Lane profiled = velocity_profile(lane, limits);

  for (size_t i = 0; i < profiled.size(); ++i) {
    const LaneWaypoint& w = profiled.waypoints[i];
    const Vec2 p{w.x, w.y};
    if (std::abs(p.x) < 20.0) CHECK(w.target_speed == doctest::Approx(50.0));  // mid-straight
    if (std::abs(p.x) > L / 2.0 + 20.0)
      CHECK(w.target_speed == doctest::Approx(std::sqrt(12.0 * 100.0)).epsilon(0.02));
  }
}

TEST_CASE("velocity profile closed form on a circle") {
  const TrackModel track = generate_oval(0.0, 100.0, 15.0, 2.0);
  const Lane lane = lane_offset(track, 0.0, 2.0);
  SpeedLimits limits;
  const Lane profiled = velocity_profile(lane, limits);
  for (const LaneWaypoint& w : profiled.waypoints)
    CHECK(w.target_speed == doctest::Approx(std::sqrt(1200.0)).epsilon(0.005));
}

TEST_CASE("velocity profile satisfies both acceleration bounds and is idempotent") {
  const TrackModel track = generate_oval(300.0, 100.0, 15.0, 2.0);
  SpeedLimits limits;
  const Lane profiled = velocity_profile(lane_offset(track, 0.0, 2.0), limits);

  const long n = static_cast<long>(profiled.size());
  for (long i = 0; i < n; ++i) {
    const double v0 = profiled.at(i).target_speed;
    const double v1 = profiled.at(i + 1).target_speed;
    const double ds = profiled.step(i);
    CHECK(v1 * v1 <= v0 * v0 + 2.0 * limits.a_accel_max * ds + 1e-6);
    CHECK(v0 * v0 <= v1 * v1 + 2.0 * limits.a_brake_max * ds + 1e-6);
    const double k = std::abs(profiled.at(i).curvature);
    if (k > 1e-9) CHECK(v0 <= std::sqrt(limits.a_lat_max / k) + 1e-9);
    CHECK(v0 <= limits.v_cap + 1e-12);
  }

  const Lane again = velocity_profile(profiled, limits);
  for (size_t i = 0; i < profiled.size(); ++i)
    CHECK(again.waypoints[i].target_speed ==
          doctest::Approx(profiled.waypoints[i].target_speed).epsilon(1e-12));
}

TEST_SUITE_END();
