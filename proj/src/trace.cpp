#include "racing/trace.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace racing {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace_csv: cannot write " + path);
  const TraceMeta& m = trace.meta;
  out << "# trace v1\n";
  out << "# theta_o=" << m.thresholds.theta_o << " theta_e=" << m.thresholds.theta_e
      << " start_lane=" << m.start_lane << " pause_s=" << format_double(m.planner.pause_s)
      << " engage_streak=" << m.planner.engage_streak
      << " brake_factor=" << format_double(m.planner.brake_factor)
      << " v_min_follow=" << format_double(m.planner.v_min_follow)
      << " disable_switching=" << (m.planner.disable_switching ? 1 : 0) << "\n";
  out << "# physics_hz=" << format_double(m.physics_hz)
      << " control_hz=" << format_double(m.control_hz)
      << " lidar_hz=" << format_double(m.lidar_hz)
      << " perimeter=" << format_double(m.perimeter) << "\n";
  out << "t,agent,x,y,yaw,v,lane,decision,l0,l1,l2,accel,delta_cmd,cost\n";
  for (const TraceRow& r : trace.rows) {
    out << format_double(r.t) << ',' << r.agent << ',' << format_double(r.x) << ','
        << format_double(r.y) << ',' << format_double(r.yaw) << ',' << format_double(r.v) << ','
        << r.lane << ',' << r.decision << ',';
    if (r.has_scan)
      out << r.l0 << ',' << r.l1 << ',' << r.l2 << ',';
    else
      out << ",,,";
    out << format_double(r.accel) << ',' << format_double(r.delta_cmd) << ',';
    if (r.has_control) out << format_double(r.cost);
    out << '\n';
  }
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
  Trace trace;
  std::string line;
  bool header_seen = false;

  auto meta_value = [](const std::string& l, const char* key) -> std::string {
    const std::string token = std::string(key) + "=";
    const size_t pos = l.find(token);
    if (pos == std::string::npos) return {};
    const size_t start = pos + token.size();
    size_t end = l.find(' ', start);
    if (end == std::string::npos) end = l.size();
    return l.substr(start, end - start);
  };

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      TraceMeta& m = trace.meta;
      auto maybe = [&](const char* k) { return meta_value(line, k); };
      if (auto v = maybe("theta_o"); !v.empty()) m.thresholds.theta_o = std::stoi(v);
      if (auto v = maybe("theta_e"); !v.empty()) m.thresholds.theta_e = std::stoi(v);
      if (auto v = maybe("start_lane"); !v.empty()) m.start_lane = std::stoi(v);
      if (auto v = maybe("pause_s"); !v.empty()) m.planner.pause_s = std::stod(v);
      if (auto v = maybe("engage_streak"); !v.empty()) m.planner.engage_streak = std::stoi(v);
      if (auto v = maybe("brake_factor"); !v.empty()) m.planner.brake_factor = std::stod(v);
      if (auto v = maybe("v_min_follow"); !v.empty()) m.planner.v_min_follow = std::stod(v);
      if (auto v = maybe("disable_switching"); !v.empty())
        m.planner.disable_switching = v == "1";
      if (auto v = maybe("physics_hz"); !v.empty()) m.physics_hz = std::stod(v);
      if (auto v = maybe("control_hz"); !v.empty()) m.control_hz = std::stod(v);
      if (auto v = maybe("lidar_hz"); !v.empty()) m.lidar_hz = std::stod(v);
      if (auto v = maybe("perimeter"); !v.empty()) m.perimeter = std::stod(v);
      continue;
    }
    if (!header_seen) {
      if (line.rfind("t,agent,", 0) != 0)
        throw std::runtime_error("read_trace_csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    while (f.size() < 14) f.emplace_back();
    if (f.size() != 14) throw std::runtime_error("read_trace_csv: bad column count");

    TraceRow r;
    r.t = std::stod(f[0]);
    r.agent = f[1];
    r.x = std::stod(f[2]);
    r.y = std::stod(f[3]);
    r.yaw = std::stod(f[4]);
    r.v = std::stod(f[5]);
    r.lane = std::stoi(f[6]);
    r.decision = f[7];
    r.has_scan = !f[8].empty();
    if (r.has_scan) {
      r.l0 = std::stoi(f[8]);
      r.l1 = std::stoi(f[9]);
      r.l2 = std::stoi(f[10]);
    }
    r.accel = std::stod(f[11]);
    r.delta_cmd = std::stod(f[12]);
    r.has_control = !f[13].empty();
    if (r.has_control) r.cost = std::stod(f[13]);
    trace.rows.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("read_trace_csv: empty trace");
  return trace;
}

ReplayResult replay_trace(const Trace& trace) {
  ReplayResult out;
  const TraceMeta& meta = trace.meta;

  PlannerState state;
  state.current_lane = meta.start_lane;
  LaneOccupancy occ;
  bool optimized_path = false;
  double last_transition = -1e18;

  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    if (row.agent != "ego" || !row.has_scan) continue;

    // The race loop refreshes the effective lane from geometry each scan
    // while tracking the optimized line; adopt the logged value there.
    if (state.mode == PlannerMode::Optimized) {
      if (row.lane < 0 || row.lane > 2) {
        out.violations.push_back("row " + std::to_string(i) + ": bad lane id");
        continue;
      }
      state.current_lane = row.lane;
    } else if (row.lane != state.current_lane) {
      out.violations.push_back("row " + std::to_string(i) + ": logged lane " +
                               std::to_string(row.lane) + " != replayed lane " +
                               std::to_string(state.current_lane));
      state.current_lane = row.lane;
    }

    occ = update_occupancy(occ, {row.l0, row.l1, row.l2}, row.t);
    const int s = state.current_lane;
    const DecideResult res = decide(state, occ, meta.thresholds, row.t, meta.planner);
    const std::string expected = decision_label(res.decision);
    if (expected != row.decision)
      out.violations.push_back("row " + std::to_string(i) + ": decision '" + row.decision +
                               "' != replayed '" + expected + "'");

    const bool is_transition = res.decision.kind == Decision::Kind::Switch ||
                               res.decision.kind == Decision::Kind::EngageOptimized;
    if (is_transition) {
      if (row.t - last_transition < meta.planner.pause_s - 1e-9)
        out.violations.push_back("row " + std::to_string(i) +
                                 ": switch/engage only " +
                                 std::to_string(row.t - last_transition) +
                                 " s after the previous one");
      last_transition = row.t;
    }

    if (res.decision.kind == Decision::Kind::Switch) {
      const int t_lane = res.decision.target;
      const std::array<int, 3> l = occ.counts;
      const std::array<int, 3> lp = occ.prev;
      if (!(l[static_cast<size_t>(s)] > meta.thresholds.theta_o))
        out.violations.push_back("row " + std::to_string(i) + ": switch without occupied lane");
      if (!(l[static_cast<size_t>(t_lane)] < meta.thresholds.theta_e &&
            lp[static_cast<size_t>(t_lane)] < meta.thresholds.theta_e))
        out.violations.push_back("row " + std::to_string(i) + ": switch into non-empty lane");
      if (std::abs(t_lane - s) == 2 && !(l[1] < meta.thresholds.theta_o))
        out.violations.push_back("row " + std::to_string(i) + ": crossing an occupied center");
    }

    state = res.state;
    if (res.decision.kind == Decision::Kind::EngageOptimized) optimized_path = true;
    if (state.mode == PlannerMode::LaneFollow) optimized_path = false;

    ReplayScan scan;
    scan.row_index = i;
    scan.t = row.t;
    scan.mode_after = state.mode;
    scan.lane_after = state.current_lane;
    scan.optimized_path = optimized_path;
    out.scans.push_back(scan);
  }
  return out;
}

}  // namespace racing
