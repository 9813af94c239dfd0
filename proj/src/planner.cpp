#include "racing/planner.hpp"

#include <algorithm>
#include <stdexcept>

namespace racing {

namespace {

constexpr int kInner = 0;
constexpr int kCenter = 1;
constexpr int kOuter = 2;

bool admissible(const LaneOccupancy& occ, const Thresholds& th, int target) {
  return occ.counts[static_cast<size_t>(target)] < th.theta_e &&
         occ.prev[static_cast<size_t>(target)] < th.theta_e;
}

// Candidate targets in preference order for the current lane.
std::vector<int> candidates(int s, const LaneOccupancy& occ) {
  if (s == kCenter) {
    // Both neighbors; prefer the emptier one, Inner on ties.
    if (occ.counts[kOuter] < occ.counts[kInner]) return {kOuter, kInner};
    return {kInner, kOuter};
  }
  const int far = s == kOuter ? kInner : kOuter;
  return {kCenter, far};
}

}  // namespace

std::string decision_label(const Decision& d) {
  switch (d.kind) {
    case Decision::Kind::Stay:
      return "Stay";
    case Decision::Kind::Switch:
      switch (d.target) {
        case kInner: return "SwitchInner";
        case kCenter: return "SwitchCenter";
        default: return "SwitchOuter";
      }
    case Decision::Kind::EngageOptimized:
      return "Engage";
    case Decision::Kind::Brake:
      return d.during_pause ? "BrakePause" : "Brake";
  }
  return "Stay";
}

DecideResult decide(const PlannerState& state, const LaneOccupancy& occ,
                    const Thresholds& thresholds, double now, const PlannerParams& params) {
  if (thresholds.theta_e <= 0 || thresholds.theta_e > thresholds.theta_o)
    throw std::invalid_argument("decide: need 0 < theta_e <= theta_o");

  DecideResult out;
  out.state = state;
  PlannerState& next = out.state;

  const bool all_clear = occ.counts[0] < thresholds.theta_e &&
                         occ.counts[1] < thresholds.theta_e &&
                         occ.counts[2] < thresholds.theta_e;
  next.clear_streak = all_clear ? state.clear_streak + 1 : 0;

  const int s = state.current_lane;
  const bool current_occupied = occ.counts[static_cast<size_t>(s)] > thresholds.theta_o;

  auto finish = [&](Decision d) {
    next.last_decision = d;
    out.decision = d;
    return out;
  };

  // Pause lockout: no transitions, but an occupied lane still slows us down.
  if (now < state.pause_until) {
    if (current_occupied) return finish({Decision::Kind::Brake, -1, true});
    return finish({Decision::Kind::Stay});
  }

  if (!params.disable_switching && state.mode == PlannerMode::LaneFollow &&
      next.clear_streak >= params.engage_streak) {
    next.mode = PlannerMode::Optimized;
    next.pause_until = now + params.pause_s;
    return finish({Decision::Kind::EngageOptimized});
  }

  bool evaluate_switch = state.mode == PlannerMode::LaneFollow;
  if (state.mode == PlannerMode::Optimized) {
    if (!current_occupied) return finish({Decision::Kind::Stay});
    next.mode = PlannerMode::LaneFollow;  // fall back, then look for a switch now
    evaluate_switch = true;
  }

  if (evaluate_switch && current_occupied) {
    if (!params.disable_switching) {
      for (int t : candidates(s, occ)) {
        if (!admissible(occ, thresholds, t)) continue;
        const bool crosses_center = std::abs(t - s) == 2;
        if (crosses_center && occ.counts[kCenter] >= thresholds.theta_o) continue;
        next.current_lane = t;
        next.pause_until = now + params.pause_s;
        return finish({Decision::Kind::Switch, t});
      }
    }
    return finish({Decision::Kind::Brake});
  }

  return finish({Decision::Kind::Stay});
}

int effective_lane(const Pose2& ego_pose, const std::array<Lane, 3>& lanes) {
  int best = 0;
  double best_dist = project(lanes[0], ego_pose.pos).distance;
  for (int l = 1; l < 3; ++l) {
    const double d = project(lanes[static_cast<size_t>(l)], ego_pose.pos).distance;
    if (d < best_dist) {
      best_dist = d;
      best = l;
    }
  }
  return best;
}

std::vector<LaneWaypoint> publish_trajectory(const Lane& active, const Vec2& ego_position,
                                             double horizon_length) {
  if (horizon_length <= 0.0) throw std::invalid_argument("publish_trajectory: bad horizon");
  const Projection p = project(active, ego_position);

  std::vector<LaneWaypoint> segment;
  long i = static_cast<long>(p.index) + 1;
  segment.push_back(active.at(i));
  double arc = 0.0;
  while (arc < horizon_length) {
    arc += active.step(i);
    ++i;
    segment.push_back(active.at(i));
  }
  return segment;
}

std::vector<LaneWaypoint> brake_reference(std::vector<LaneWaypoint> segment,
                                          const PlannerParams& params) {
  for (LaneWaypoint& w : segment)
    w.target_speed = std::min(w.target_speed,
                              std::max(w.target_speed * params.brake_factor, params.v_min_follow));
  return segment;
}

}  // namespace racing
