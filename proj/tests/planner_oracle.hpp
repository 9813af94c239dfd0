#pragma once

#include <string>

#include "racing/planner.hpp"

// Brute-force transcription of the switching rules, kept deliberately
// table-like and separate from the production code path.
namespace oracle {

struct Outcome {
  std::string label;
  racing::PlannerState state;
};

inline Outcome decide(const racing::PlannerState& in, const racing::LaneOccupancy& occ,
                      const racing::Thresholds& th, double now,
                      const racing::PlannerParams& pp) {
  using racing::PlannerMode;
  racing::PlannerState st = in;
  const int l0 = occ.counts[0], l1 = occ.counts[1], l2 = occ.counts[2];
  const bool every_lane_empty = l0 < th.theta_e && l1 < th.theta_e && l2 < th.theta_e;
  st.clear_streak = every_lane_empty ? in.clear_streak + 1 : 0;

  const int s = in.current_lane;
  const int ls = occ.counts[static_cast<size_t>(s)];

  if (now < in.pause_until) return {ls > th.theta_o ? "BrakePause" : "Stay", st};

  if (in.mode == PlannerMode::LaneFollow && st.clear_streak >= pp.engage_streak &&
      !pp.disable_switching) {
    st.mode = PlannerMode::Optimized;
    st.pause_until = now + pp.pause_s;
    return {"Engage", st};
  }

  if (in.mode == PlannerMode::Optimized && ls <= th.theta_o) return {"Stay", st};
  if (in.mode == PlannerMode::Optimized) st.mode = PlannerMode::LaneFollow;

  if (ls <= th.theta_o) return {"Stay", st};
  if (pp.disable_switching) return {"Brake", st};

  const auto empty_now_and_before = [&](int lane) {
    return occ.counts[static_cast<size_t>(lane)] < th.theta_e &&
           occ.prev[static_cast<size_t>(lane)] < th.theta_e;
  };
  const auto take = [&](int lane) -> Outcome {
    st.current_lane = lane;
    st.pause_until = now + pp.pause_s;
    const char* names[3] = {"SwitchInner", "SwitchCenter", "SwitchOuter"};
    return {names[lane], st};
  };

  if (s == 1) {  // center: both neighbors, emptier first, inner on ties
    const bool inner_ok = empty_now_and_before(0);
    const bool outer_ok = empty_now_and_before(2);
    if (inner_ok && outer_ok) return take(l2 < l0 ? 2 : 0);
    if (inner_ok) return take(0);
    if (outer_ok) return take(2);
    return {"Brake", st};
  }
  const int far = s == 0 ? 2 : 0;
  if (empty_now_and_before(1)) return take(1);
  if (empty_now_and_before(far) && l1 < th.theta_o) return take(far);
  return {"Brake", st};
}

}  // namespace oracle
