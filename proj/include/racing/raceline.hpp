#pragma once

#include <vector>

#include "racing/track.hpp"

namespace racing {

/// Curvature-minimization problem over per-sample lateral offsets from the
/// track centerline. alpha_max bounds the offset symmetrically at each
/// sample and must leave room for half a car width.
struct RacelineProblem {
  TrackModel track;
  std::vector<double> alpha_max;
  double car_half_width = 0.95;
  int iterations = 2000;
  double step_size = 1.0;  // initial backtracking step
};

/// Fills alpha_max from the track widths minus the car half-width.
RacelineProblem make_raceline_problem(const TrackModel& track, double car_half_width = 0.95);

struct RacelineResult {
  Lane lane;                             // id = Optimized
  bool converged = false;
  int iterations_used = 0;
  std::vector<double> objective_history; // one entry per accepted iterate
};

/// Minimizes the total squared curvature of the offset path. Each iteration
/// linearizes the curvature, takes a Gauss-Newton descent direction (sparse
/// normal equations, no external solver), projects exactly onto the box and
/// backtracks on an Armijo condition; plain projected gradient is the
/// fallback direction. `converged` is false when the iteration budget ran
/// out with a significant projected gradient left.
RacelineResult optimize_min_curvature(const RacelineProblem& problem);

struct SpeedLimits {
  double v_cap = 50.0;        // m/s
  double a_lat_max = 12.0;    // m/s^2
  double a_accel_max = 6.0;   // m/s^2
  double a_brake_max = 10.0;  // m/s^2
};

/// Curvature-capped speed per waypoint, v = min(v_cap, sqrt(a_lat/|kappa|)),
/// relaxed by cyclic forward (acceleration) and backward (braking) passes
/// until the profile reaches a fixed point. Idempotent.
Lane velocity_profile(const Lane& lane, const SpeedLimits& limits);

/// Sum of kappa^2 * ds over the closed lane; the optimizer's figure of merit.
double total_squared_curvature(const Lane& lane);

namespace detail {
/// Objective and gradient of the offset-path squared-curvature sum, exposed
/// for derivative checks. `normals` are the unit left normals at each
/// centerline sample.
double raceline_objective(const std::vector<Vec2>& center, const std::vector<Vec2>& normals,
                          const std::vector<double>& alpha);
std::vector<double> raceline_gradient(const std::vector<Vec2>& center,
                                      const std::vector<Vec2>& normals,
                                      const std::vector<double>& alpha);
}  // namespace detail

}  // namespace racing
