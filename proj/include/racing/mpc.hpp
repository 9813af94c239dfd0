#pragma once

#include <Eigen/Dense>
#include <vector>

#include "racing/track.hpp"

namespace racing {

/// Kinematic bicycle state. yaw is kept in (-pi, pi]; delta is the steering
/// angle currently applied at the front axle.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double v = 0.0;
  double delta = 0.0;
};

struct ControlCommand {
  double accel = 0.0;      // m/s^2
  double delta_cmd = 0.0;  // rad
};

struct MpcConfig {
  int horizon = 25;
  double dt = 0.06;  // s, 1.5 s lookahead at the default horizon

  // Tracking weights: position/heading backed off from a precision-parking
  // baseline, longitudinal speed brought way up for racing.
  double w_pos = 0.75;
  double w_yaw = 0.75;
  double w_v = 1.0;
  double w_accel = 0.1;
  double w_delta = 0.5;
  // Input-rate weights keep the plan within what the steering slew can
  // actually deliver; without them the solution bangs the wheel on the
  // blending-free lane-switch steps and the loop falls apart.
  double w_accel_rate = 0.0;
  double w_delta_rate = 300.0;

  double a_cmd_max = 10.0;      // m/s^2
  double delta_max = 0.35;      // rad
  double delta_rate_max = 0.8;  // rad/s
  double v_max = 55.0;          // m/s
  double wheelbase = 3.0;       // m
};

/// Plant step: steering slews toward delta_cmd (at most delta_rate_max * dt
/// per step, applied at the start of the step), then one RK4 step of the
/// bicycle model. yaw is re-wrapped and v clamped to [0, v_max].
VehicleState step_vehicle(const VehicleState& state, const ControlCommand& command, double dt,
                          const MpcConfig& config);

/// Prediction model used inside the controller: same RK4 bicycle step but
/// with the steering angle as a direct input and no wrapping or clamping.
/// State order [x, y, yaw, v].
Eigen::Vector4d dynamics_nominal(const Eigen::Vector4d& z, double accel, double delta, double dt,
                                 double wheelbase);

/// Exact discrete-time jacobians of dynamics_nominal at a reference point,
/// chain-ruled through the RK4 stages. Requires |delta| < pi/2.
void linearize(const VehicleState& ref_state, const ControlCommand& ref_command, double dt,
               double wheelbase, Eigen::Matrix4d& A, Eigen::Matrix<double, 4, 2>& B);

/// Reference-tracking QP data, linearized about a resampled reference.
/// Error dynamics e_{k+1} = A_k e_k + B_k du_k + d_k with u_k = u_ref_k + du_k.
struct MpcProblem {
  std::vector<Eigen::Matrix4d> A;
  std::vector<Eigen::Matrix<double, 4, 2>> B;
  std::vector<Eigen::Vector4d> d;
  std::vector<Eigen::Vector4d> z_ref;  // size N+1, yaw unwrapped along horizon
  std::vector<Eigen::Vector2d> u_ref;  // size N
  Eigen::Vector4d e0;
  Eigen::Matrix4d Q;
  Eigen::Matrix2d R;       // on the absolute input
  Eigen::Matrix2d S;       // on the input rate u_k - u_{k-1}
  Eigen::Vector2d u_prev;  // input "before" the horizon: profile accel, current steering
};

struct MpcSolution {
  ControlCommand command;              // first input, clamped to limits
  ControlCommand unclamped;            // first input before clamping
  std::vector<VehicleState> predicted; // N+1 states, yaw wrapped for output
  std::vector<Eigen::Vector2d> inputs; // optimal u_k over the horizon
  double cost = 0.0;
  bool ok = false;
};

/// Resamples the reference segment by predicted travel distance (v_ref * dt
/// per step) starting from the projection of `state` onto the segment.
/// Returns false when the segment cannot support a horizon.
bool build_problem(const VehicleState& state, const std::vector<LaneWaypoint>& segment,
                   const MpcConfig& config, MpcProblem& out);

/// Solves the unconstrained tracking QP by a backward Riccati sweep over the
/// time-varying linearization (state augmented internally with the previous
/// input to carry the rate penalty) and rolls the optimal inputs forward.
/// Only the first command is clamped to actuator limits.
MpcSolution solve(const VehicleState& state, const std::vector<LaneWaypoint>& segment,
                  const MpcConfig& config);

}  // namespace racing
