#include "racing/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace racing {

namespace {

Eigen::Vector4d bicycle_rhs(const Eigen::Vector4d& z, double accel, double delta, double L) {
  return {z[3] * std::cos(z[2]), z[3] * std::sin(z[2]), z[3] * std::tan(delta) / L, accel};
}

Eigen::Matrix4d rhs_jac_state(const Eigen::Vector4d& z, double delta, double L) {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 2) = -z[3] * std::sin(z[2]);
  j(0, 3) = std::cos(z[2]);
  j(1, 2) = z[3] * std::cos(z[2]);
  j(1, 3) = std::sin(z[2]);
  j(2, 3) = std::tan(delta) / L;
  return j;
}

Eigen::Matrix<double, 4, 2> rhs_jac_input(const Eigen::Vector4d& z, double delta, double L) {
  Eigen::Matrix<double, 4, 2> j = Eigen::Matrix<double, 4, 2>::Zero();
  const double c = std::cos(delta);
  j(2, 1) = z[3] / (L * c * c);
  j(3, 0) = 1.0;
  return j;
}

// Linear interpolation over an open waypoint polyline at arc coordinate s.
LaneWaypoint interp_segment(const std::vector<LaneWaypoint>& seg, const std::vector<double>& cum,
                            double s) {
  s = std::clamp(s, 0.0, cum.back());
  size_t i = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
  i = std::clamp<size_t>(i, 1, cum.size() - 1) - 1;
  const double len = cum[i + 1] - cum[i];
  const double u = len > 0.0 ? (s - cum[i]) / len : 0.0;
  const LaneWaypoint& a = seg[i];
  const LaneWaypoint& b = seg[i + 1];
  LaneWaypoint out;
  out.x = a.x + (b.x - a.x) * u;
  out.y = a.y + (b.y - a.y) * u;
  out.heading = a.heading + wrap_angle(b.heading - a.heading) * u;
  out.curvature = a.curvature + (b.curvature - a.curvature) * u;
  out.target_speed = a.target_speed + (b.target_speed - a.target_speed) * u;
  return out;
}

}  // namespace

Eigen::Vector4d dynamics_nominal(const Eigen::Vector4d& z, double accel, double delta, double dt,
                                 double L) {
  const Eigen::Vector4d k1 = bicycle_rhs(z, accel, delta, L);
  const Eigen::Vector4d k2 = bicycle_rhs(z + 0.5 * dt * k1, accel, delta, L);
  const Eigen::Vector4d k3 = bicycle_rhs(z + 0.5 * dt * k2, accel, delta, L);
  const Eigen::Vector4d k4 = bicycle_rhs(z + dt * k3, accel, delta, L);
  return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

VehicleState step_vehicle(const VehicleState& state, const ControlCommand& command, double dt,
                          const MpcConfig& config) {
  if (dt <= 0.0) throw std::invalid_argument("step_vehicle: dt must be positive");
  const double target = std::clamp(command.delta_cmd, -config.delta_max, config.delta_max);
  const double max_step = config.delta_rate_max * dt;
  const double delta = state.delta + std::clamp(target - state.delta, -max_step, max_step);
  const double accel = std::clamp(command.accel, -config.a_cmd_max, config.a_cmd_max);

  const Eigen::Vector4d z =
      dynamics_nominal({state.x, state.y, state.yaw, state.v}, accel, delta, dt, config.wheelbase);
  VehicleState out;
  out.x = z[0];
  out.y = z[1];
  out.yaw = wrap_angle(z[2]);
  out.v = std::clamp(z[3], 0.0, config.v_max);
  out.delta = delta;
  return out;
}

void linearize(const VehicleState& ref_state, const ControlCommand& ref_command, double dt,
               double L, Eigen::Matrix4d& A, Eigen::Matrix<double, 4, 2>& B) {
  const double delta = ref_command.delta_cmd;
  if (std::abs(delta) >= kPi / 2.0)
    throw std::invalid_argument("linearize: steering reference at or beyond pi/2");

  const Eigen::Vector4d z0{ref_state.x, ref_state.y, ref_state.yaw, ref_state.v};
  const double a = ref_command.accel;

  const Eigen::Vector4d k1 = bicycle_rhs(z0, a, delta, L);
  const Eigen::Vector4d z2 = z0 + 0.5 * dt * k1;
  const Eigen::Vector4d k2 = bicycle_rhs(z2, a, delta, L);
  const Eigen::Vector4d z3 = z0 + 0.5 * dt * k2;
  const Eigen::Vector4d k3 = bicycle_rhs(z3, a, delta, L);
  const Eigen::Vector4d z4 = z0 + dt * k3;

  const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
  const Eigen::Matrix4d J1 = rhs_jac_state(z0, delta, L);
  const Eigen::Matrix4d J2 = rhs_jac_state(z2, delta, L);
  const Eigen::Matrix4d J3 = rhs_jac_state(z3, delta, L);
  const Eigen::Matrix4d J4 = rhs_jac_state(z4, delta, L);

  const Eigen::Matrix4d dk1 = J1;
  const Eigen::Matrix4d dk2 = J2 * (I + 0.5 * dt * dk1);
  const Eigen::Matrix4d dk3 = J3 * (I + 0.5 * dt * dk2);
  const Eigen::Matrix4d dk4 = J4 * (I + dt * dk3);
  A = I + dt / 6.0 * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);

  using Mat42 = Eigen::Matrix<double, 4, 2>;
  const Mat42 G1 = rhs_jac_input(z0, delta, L);
  const Mat42 G2 = rhs_jac_input(z2, delta, L);
  const Mat42 G3 = rhs_jac_input(z3, delta, L);
  const Mat42 G4 = rhs_jac_input(z4, delta, L);

  const Mat42 dk1u = G1;
  const Mat42 dk2u = G2 + 0.5 * dt * J2 * dk1u;
  const Mat42 dk3u = G3 + 0.5 * dt * J3 * dk2u;
  const Mat42 dk4u = G4 + dt * J4 * dk3u;
  B = dt / 6.0 * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
}

bool build_problem(const VehicleState& state, const std::vector<LaneWaypoint>& segment,
                   const MpcConfig& config, MpcProblem& out) {
  const int N = config.horizon;
  if (N < 2 || config.dt <= 0.0) throw std::invalid_argument("mpc: bad horizon config");
  if (segment.size() < 2) return false;

  std::vector<double> cum(segment.size(), 0.0);
  for (size_t i = 1; i < segment.size(); ++i) {
    const Vec2 a{segment[i - 1].x, segment[i - 1].y};
    const Vec2 b{segment[i].x, segment[i].y};
    cum[i] = cum[i - 1] + (b - a).norm();
  }
  if (cum.back() < 1e-6) return false;

  // Project the current position onto the segment polyline.
  double s0 = 0.0;
  double best_d2 = std::numeric_limits<double>::max();
  const Vec2 pos{state.x, state.y};
  for (size_t i = 0; i + 1 < segment.size(); ++i) {
    const Vec2 a{segment[i].x, segment[i].y};
    const Vec2 b{segment[i + 1].x, segment[i + 1].y};
    const Vec2 e = b - a;
    const double len2 = e.squared_norm();
    if (len2 <= 0.0) continue;
    const double u = std::clamp((pos - a).dot(e) / len2, 0.0, 1.0);
    const double d2 = (pos - (a + e * u)).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      s0 = cum[i] + u * std::sqrt(len2);
    }
  }

  // Resample by predicted travel distance at reference speed.
  out.z_ref.resize(static_cast<size_t>(N) + 1);
  out.u_ref.resize(static_cast<size_t>(N));
  std::vector<double> arcs(static_cast<size_t>(N) + 1);
  std::vector<LaneWaypoint> refs(static_cast<size_t>(N) + 1);
  double s = s0;
  for (int k = 0; k <= N; ++k) {
    refs[static_cast<size_t>(k)] = interp_segment(segment, cum, s);
    arcs[static_cast<size_t>(k)] = s;
    s = std::min(s + std::max(refs[static_cast<size_t>(k)].target_speed, 1.0) * config.dt,
                 cum.back());
  }

  // Wrap each reference yaw into (-pi, pi] first (so 2*pi-shifted inputs
  // collapse to the same representation), then unwrap along the horizon.
  double yaw_prev = wrap_angle(refs[0].heading);
  for (int k = 0; k <= N; ++k) {
    const double wrapped = wrap_angle(refs[static_cast<size_t>(k)].heading);
    const double unwrapped = yaw_prev + wrap_angle(wrapped - yaw_prev);
    out.z_ref[static_cast<size_t>(k)] << refs[static_cast<size_t>(k)].x,
        refs[static_cast<size_t>(k)].y, unwrapped, refs[static_cast<size_t>(k)].target_speed;
    yaw_prev = unwrapped;
  }

  out.A.resize(static_cast<size_t>(N));
  out.B.resize(static_cast<size_t>(N));
  out.d.resize(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    const auto& zr = out.z_ref[static_cast<size_t>(k)];
    const double accel_ref =
        (out.z_ref[static_cast<size_t>(k) + 1][3] - zr[3]) / config.dt;
    const double delta_ref =
        std::atan(config.wheelbase * refs[static_cast<size_t>(k)].curvature);
    out.u_ref[static_cast<size_t>(k)] << accel_ref, delta_ref;

    VehicleState ref_state{zr[0], zr[1], zr[2], zr[3], delta_ref};
    linearize(ref_state, {accel_ref, delta_ref}, config.dt, config.wheelbase,
              out.A[static_cast<size_t>(k)], out.B[static_cast<size_t>(k)]);
    out.d[static_cast<size_t>(k)] =
        dynamics_nominal(zr, accel_ref, delta_ref, config.dt, config.wheelbase) -
        out.z_ref[static_cast<size_t>(k) + 1];
  }

  out.e0 << state.x - out.z_ref[0][0], state.y - out.z_ref[0][1],
      wrap_angle(state.yaw - out.z_ref[0][2]), state.v - out.z_ref[0][3];
  out.Q = Eigen::Vector4d(config.w_pos, config.w_pos, config.w_yaw, config.w_v).asDiagonal();
  out.R = Eigen::Vector2d(config.w_accel, config.w_delta).asDiagonal();
  out.S = Eigen::Vector2d(config.w_accel_rate, config.w_delta_rate).asDiagonal();
  out.u_prev << out.u_ref[0][0], state.delta;
  return true;
}

MpcSolution solve(const VehicleState& state, const std::vector<LaneWaypoint>& segment,
                  const MpcConfig& config) {
  MpcSolution sol;
  MpcProblem pb;
  if (!build_problem(state, segment, config, pb)) return sol;  // ok = false: hold previous

  const size_t N = pb.u_ref.size();

  // Backward Riccati sweep over the augmented state [e; u_prev], with the
  // absolute input as the decision variable. Stage cost:
  //   e_k^T Q e_k (k >= 1) + u_k^T R u_k + (u_k - u_{k-1})^T S (u_k - u_{k-1})
  // which expands into blockwise Q~, R + S and a cross term between u and the
  // carried previous input.
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Mat62 = Eigen::Matrix<double, 6, 2>;
  using Mat26 = Eigen::Matrix<double, 2, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  std::vector<Mat26> K(N);
  std::vector<Eigen::Vector2d> kff(N);

  Mat6 P = Mat6::Zero();
  P.topLeftCorner<4, 4>() = pb.Q;  // terminal state cost only
  Vec6 q = Vec6::Zero();
  const Eigen::Matrix2d r_total = pb.R + pb.S;

  for (size_t k = N; k-- > 0;) {
    Mat6 At = Mat6::Zero();
    At.topLeftCorner<4, 4>() = pb.A[k];
    Mat62 Bt = Mat62::Zero();
    Bt.topLeftCorner<4, 2>() = pb.B[k];
    Bt.bottomLeftCorner<2, 2>() = Eigen::Matrix2d::Identity();
    Vec6 dt = Vec6::Zero();
    dt.head<4>() = pb.d[k] - pb.B[k] * pb.u_ref[k];

    Mat6 Qt = Mat6::Zero();
    if (k >= 1) Qt.topLeftCorner<4, 4>() = pb.Q;
    Qt.bottomRightCorner<2, 2>() = pb.S;
    Mat62 Nt = Mat62::Zero();
    Nt.bottomLeftCorner<2, 2>() = -pb.S;

    const Eigen::Matrix2d H = r_total + Bt.transpose() * P * Bt;
    const Mat26 G = Nt.transpose() + Bt.transpose() * P * At;
    const Eigen::Vector2d g0 = Bt.transpose() * (P * dt + q);
    const Eigen::Matrix2d Hinv = H.inverse();
    K[k] = -Hinv * G;
    kff[k] = -Hinv * g0;
    const Mat6 P_new = Qt + At.transpose() * P * At - G.transpose() * Hinv * G;
    q = At.transpose() * (q + P * dt) - G.transpose() * Hinv * g0;
    P = 0.5 * (P_new + P_new.transpose());  // keep symmetric
  }

  // Forward rollout of the optimal affine policy on the linear model.
  sol.inputs.resize(N);
  sol.predicted.resize(N + 1);
  std::vector<Eigen::Vector4d> e(N + 1);
  e[0] = pb.e0;
  Eigen::Vector2d u_prev = pb.u_prev;
  double cost = 0.0;
  for (size_t k = 0; k < N; ++k) {
    Vec6 xt;
    xt << e[k], u_prev;
    const Eigen::Vector2d u = K[k] * xt + kff[k];
    sol.inputs[k] = u;
    e[k + 1] = pb.A[k] * e[k] + pb.B[k] * (u - pb.u_ref[k]) + pb.d[k];
    cost += u.dot(pb.R * u);
    cost += (u - u_prev).dot(pb.S * (u - u_prev));
    cost += e[k + 1].dot(pb.Q * e[k + 1]);
    u_prev = u;
  }
  sol.cost = cost;

  for (size_t k = 0; k <= N; ++k) {
    const Eigen::Vector4d z = pb.z_ref[k] + e[k];
    sol.predicted[k] = {z[0], z[1], wrap_angle(z[2]), z[3],
                        k == 0 ? state.delta : sol.inputs[k - 1][1]};
  }

  sol.unclamped = {sol.inputs[0][0], sol.inputs[0][1]};
  sol.command.accel = std::clamp(sol.unclamped.accel, -config.a_cmd_max, config.a_cmd_max);
  sol.command.delta_cmd = std::clamp(sol.unclamped.delta_cmd, -config.delta_max, config.delta_max);
  sol.ok = true;
  return sol;
}

}  // namespace racing
