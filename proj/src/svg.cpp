#include "racing/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace racing {

namespace {

struct Viewport {
  double x0, y0, x1, y1;        // world bounds
  double px, py, pw, ph;        // panel rect in svg coordinates
  double scale = 1.0;

  void fit(double margin) {
    const double w = x1 - x0, h = y1 - y0;
    scale = std::min((pw - 2 * margin) / std::max(w, 1e-9),
                     (ph - 2 * margin) / std::max(h, 1e-9));
  }
  double sx(double x) const { return px + pw / 2.0 + (x - (x0 + x1) / 2.0) * scale; }
  double sy(double y) const { return py + ph / 2.0 - (y - (y0 + y1) / 2.0) * scale; }
};

class SvgDoc {
 public:
  SvgDoc(double w, double h) : w_(w), h_(h) {}

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width, bool closed = false, double opacity = 1.0) {
    if (pts.size() < 2) return;
    body_ << (closed ? "<polygon" : "<polyline") << " fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"" << width << "\" stroke-opacity=\"" << opacity
          << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << x << ',' << y << ' ';
    body_ << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << color
          << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color, double width) {
    body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
          << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 13.0,
            const std::string& color = "#333") {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" fill=\"" << color << "\">" << s << "</text>\n";
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("svg: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w_ << ' ' << h_
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

std::vector<std::pair<double, double>> map_points(const Viewport& vp, const Lane& lane) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(lane.size());
  for (size_t i = 0; i < lane.size(); ++i) {
    const Vec2 p = lane.position(static_cast<long>(i));
    pts.emplace_back(vp.sx(p.x), vp.sy(p.y));
  }
  return pts;
}

}  // namespace

PlotStats plot_trace(const Trace& trace, const std::array<Lane, 4>& lanes,
                     const std::string& out_path) {
  if (trace.rows.empty()) throw std::runtime_error("plot_trace: empty trace");

  PlotStats stats;
  const ReplayResult replay = replay_trace(trace);

  // Active path per ego row: start lane until the first scan, then whatever
  // the replayed state machine tracks.
  std::vector<const Lane*> active_per_row(trace.rows.size(), nullptr);
  {
    const Lane* active = &lanes[static_cast<size_t>(trace.meta.start_lane)];
    size_t scan_idx = 0;
    std::vector<double> change_times;
    const Lane* prev = active;
    for (size_t i = 0; i < trace.rows.size(); ++i) {
      while (scan_idx < replay.scans.size() && replay.scans[scan_idx].row_index <= i) {
        const ReplayScan& s = replay.scans[scan_idx];
        active = s.optimized_path ? &lanes[3] : &lanes[static_cast<size_t>(s.lane_after)];
        if (active != prev) {
          change_times.push_back(s.t);
          prev = active;
        }
        ++scan_idx;
      }
      active_per_row[i] = active;
    }

    // Lateral error vs the active path; the settled figure ignores the
    // transient right after a path change.
    for (size_t i = 0; i < trace.rows.size(); ++i) {
      const TraceRow& r = trace.rows[i];
      if (r.agent != "ego") continue;
      const double err = arc_project(*active_per_row[i], {r.x, r.y}).second;
      stats.max_lateral_error = std::max(stats.max_lateral_error, err);
      bool settling = false;
      for (double ct : change_times)
        if (r.t >= ct && r.t < ct + stats.settle_window_s) settling = true;
      if (!settling) stats.max_lateral_error_settled = std::max(stats.max_lateral_error_settled, err);
    }
  }

  const double W = 1000.0, H = 1280.0;
  SvgDoc doc(W, H);

  // Panel 1: track map.
  Viewport vp{};
  vp.x0 = vp.y0 = 1e18;
  vp.x1 = vp.y1 = -1e18;
  for (const Lane& lane : lanes)
    for (size_t i = 0; i < lane.size(); ++i) {
      const Vec2 p = lane.position(static_cast<long>(i));
      vp.x0 = std::min(vp.x0, p.x);
      vp.x1 = std::max(vp.x1, p.x);
      vp.y0 = std::min(vp.y0, p.y);
      vp.y1 = std::max(vp.y1, p.y);
    }
  vp.px = 0;
  vp.py = 20;
  vp.pw = W;
  vp.ph = 640;
  vp.fit(30.0);

  const std::array<std::string, 4> lane_colors{"#4a90d9", "#7fb069", "#d98e4a", "#b05fb0"};
  for (size_t l = 0; l < 4; ++l)
    doc.polyline(map_points(vp, lanes[l]), lane_colors[l], l == 3 ? 2.0 : 1.0, true,
                 l == 3 ? 0.9 : 0.6);

  std::map<std::string, std::vector<std::pair<double, double>>> agent_paths;
  for (const TraceRow& r : trace.rows)
    agent_paths[r.agent].emplace_back(vp.sx(r.x), vp.sy(r.y));
  for (const auto& [agent, pts] : agent_paths)
    doc.polyline(pts, agent == "ego" ? "#d43d3d" : "#888888", agent == "ego" ? 2.0 : 1.0, false,
                 agent == "ego" ? 1.0 : 0.8);
  doc.text(10, 16, "track map: lanes, optimized line, driven paths (ego red)");

  // Panel 2: lateral error vs time.
  const double t_end = trace.rows.back().t;
  double err_max = 0.05;
  std::vector<std::pair<double, double>> err_curve;
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& r = trace.rows[i];
    if (r.agent != "ego") continue;
    const double err = arc_project(*active_per_row[i], {r.x, r.y}).second;
    err_curve.emplace_back(r.t, err);
    err_max = std::max(err_max, err);
  }
  const double p2y = 700, p2h = 280, p2x = 60, p2w = W - 100;
  auto ex = [&](double t) { return p2x + t / std::max(t_end, 1e-9) * p2w; };
  auto ey = [&](double e) { return p2y + p2h - e / err_max * (p2h - 30); };
  doc.line(p2x, p2y + p2h, p2x + p2w, p2y + p2h, "#999", 1.0);
  doc.line(p2x, p2y, p2x, p2y + p2h, "#999", 1.0);
  std::vector<std::pair<double, double>> scaled;
  scaled.reserve(err_curve.size());
  for (const auto& [t, e] : err_curve) scaled.emplace_back(ex(t), ey(e));
  doc.polyline(scaled, "#d43d3d", 1.5);
  {
    std::ostringstream label;
    label.precision(3);
    label << "control lateral error [m] vs time [s], max " << stats.max_lateral_error;
    doc.text(p2x, p2y - 6, label.str());
    doc.text(p2x - 50, p2y + 12, std::to_string(err_max).substr(0, 5), 11);
    doc.text(p2x + p2w - 20, p2y + p2h + 16, std::to_string(t_end).substr(0, 5), 11);
  }

  // Panel 3: decision timeline.
  const double p3y = 1040, p3h = 200, p3x = 60, p3w = W - 100;
  doc.line(p3x, p3y + p3h - 40, p3x + p3w, p3y + p3h - 40, "#999", 1.0);
  doc.text(p3x, p3y - 6, "decisions: switch (red), engage (green), brake (orange)");
  for (const TraceRow& r : trace.rows) {
    if (r.agent != "ego" || !r.has_scan || r.decision == "Stay") continue;
    const double x = p3x + r.t / std::max(t_end, 1e-9) * p3w;
    if (r.decision.rfind("Switch", 0) == 0) {
      doc.circle(x, p3y + 40, 5, "#d43d3d");
      ++stats.switch_markers;
    } else if (r.decision == "Engage") {
      doc.circle(x, p3y + 80, 5, "#2e8b57");
      ++stats.engage_markers;
    } else {
      doc.circle(x, p3y + 120, 3, "#e8a33d");
      ++stats.brake_markers;
    }
  }
  doc.text(p3x - 50, p3y + 44, "switch", 11);
  doc.text(p3x - 50, p3y + 84, "engage", 11);
  doc.text(p3x - 50, p3y + 124, "brake", 11);

  doc.save(out_path);
  return stats;
}

}  // namespace racing
