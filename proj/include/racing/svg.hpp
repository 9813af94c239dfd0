#pragma once

#include <array>
#include <string>
#include <vector>

#include "racing/trace.hpp"

namespace racing {

struct PlotStats {
  double max_lateral_error = 0.0;          // over the whole run
  double max_lateral_error_settled = 0.0;  // excluding a window after path changes
  double settle_window_s = 5.0;
  int switch_markers = 0;
  int engage_markers = 0;
  int brake_markers = 0;
};

/// Renders a three-panel SVG: track map with lanes and driven paths, control
/// lateral error against the active reference path, and the decision
/// timeline. `lanes` holds inner/center/outer/optimized in that order.
PlotStats plot_trace(const Trace& trace, const std::array<Lane, 4>& lanes,
                     const std::string& out_path);

}  // namespace racing
