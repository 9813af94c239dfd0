#include "racing/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace racing {

namespace {

long wrap_index(long i, long n) {
  long m = i % n;
  return m < 0 ? m + n : m;
}

// Circumscribed-circle curvature of the triple (a, b, c), signed positive
// for a left turn.
double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 bc = c - b;
  const Vec2 ac = c - a;
  const double cross = ab.cross(bc);
  const double denom = ab.norm() * bc.norm() * ac.norm();
  if (denom < 1e-12) return 0.0;
  return 2.0 * cross / denom;
}

}  // namespace

const Vec2& TrackModel::at(long i) const {
  return centerline[static_cast<size_t>(wrap_index(i, static_cast<long>(centerline.size())))];
}

double TrackModel::perimeter() const { return polyline_length(centerline, true); }

double TrackModel::min_half_width() const {
  double m = half_width_left.empty() ? 0.0 : half_width_left[0];
  for (double w : half_width_left) m = std::min(m, w);
  for (double w : half_width_right) m = std::min(m, w);
  return m;
}

const LaneWaypoint& Lane::at(long i) const {
  return waypoints[static_cast<size_t>(wrap_index(i, static_cast<long>(waypoints.size())))];
}

Vec2 Lane::position(long i) const {
  const LaneWaypoint& w = at(i);
  return {w.x, w.y};
}

double Lane::step(long i) const {
  return (position(i + 1) - position(i)).norm();
}

double polyline_length(const std::vector<Vec2>& points, bool closed) {
  double len = 0.0;
  const size_t n = points.size();
  if (n < 2) return 0.0;
  for (size_t i = 0; i + 1 < n; ++i) len += (points[i + 1] - points[i]).norm();
  if (closed) len += (points[0] - points[n - 1]).norm();
  return len;
}

std::vector<Vec2> resample_closed(const std::vector<Vec2>& points, double spacing) {
  if (points.size() < 3) throw std::invalid_argument("resample_closed: need at least 3 points");
  if (spacing <= 0.0) throw std::invalid_argument("resample_closed: spacing must be positive");

  const size_t n = points.size();
  std::vector<double> cum(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i)
    cum[i + 1] = cum[i] + (points[(i + 1) % n] - points[i]).norm();
  const double total = cum[n];
  if (total <= 0.0) throw std::invalid_argument("resample_closed: degenerate polyline");

  const size_t m = std::max<size_t>(3, static_cast<size_t>(std::llround(total / spacing)));
  const double step = total / static_cast<double>(m);

  std::vector<Vec2> out;
  out.reserve(m);
  size_t seg = 0;
  for (size_t k = 0; k < m; ++k) {
    const double s = static_cast<double>(k) * step;
    while (seg + 1 < n && cum[seg + 1] <= s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double u = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    const Vec2& a = points[seg];
    const Vec2& b = points[(seg + 1) % n];
    out.push_back(a + (b - a) * u);
  }
  return out;
}

TrackModel generate_oval(double straight_length, double turn_radius, double track_width,
                         double spacing) {
  if (straight_length < 0.0 || turn_radius <= 0.0 || track_width <= 0.0 || spacing <= 0.0)
    throw std::invalid_argument("generate_oval: non-positive geometry");
  if (spacing >= turn_radius / 4.0)
    throw std::invalid_argument("generate_oval: spacing too coarse for turn radius");

  const double L = straight_length;
  const double R = turn_radius;
  const double perimeter = 2.0 * L + 2.0 * kPi * R;
  const size_t n = std::max<size_t>(64, static_cast<size_t>(std::llround(perimeter / spacing)));

  // Arc-length parametrization, counter-clockwise, starting at the beginning
  // of the bottom straight.
  auto point_at = [&](double s) -> Vec2 {
    if (s < L) return {-L / 2.0 + s, -R};
    s -= L;
    if (s < kPi * R) {
      const double a = -kPi / 2.0 + s / R;
      return {L / 2.0 + R * std::cos(a), R * std::sin(a)};
    }
    s -= kPi * R;
    if (s < L) return {L / 2.0 - s, R};
    s -= L;
    const double a = kPi / 2.0 + s / R;
    return {-L / 2.0 + R * std::cos(a), R * std::sin(a)};
  };

  TrackModel track;
  track.spacing = perimeter / static_cast<double>(n);
  track.centerline.reserve(n);
  for (size_t i = 0; i < n; ++i)
    track.centerline.push_back(point_at(static_cast<double>(i) * perimeter / static_cast<double>(n)));
  track.half_width_left.assign(n, track_width / 2.0);
  track.half_width_right.assign(n, track_width / 2.0);
  return track;
}

TrackModel load_centerline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_centerline: cannot open " + path);

  std::string line;
  bool header_seen = false;
  std::vector<Vec2> pts;
  std::vector<double> w_right, w_left;

  auto split_csv = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) fields.push_back(item);
    return fields;
  };

  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      std::string h = line;
      h.erase(std::remove_if(h.begin(), h.end(), ::isspace), h.end());
      if (h != "x_m,y_m,w_tr_right_m,w_tr_left_m")
        throw std::runtime_error("load_centerline: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 4)
      throw std::runtime_error("load_centerline: line " + std::to_string(line_no) +
                               ": expected 4 columns, got " + std::to_string(fields.size()));
    try {
      const double x = std::stod(fields[0]);
      const double y = std::stod(fields[1]);
      const double wr = std::stod(fields[2]);
      const double wl = std::stod(fields[3]);
      if (wr <= 0.0 || wl <= 0.0)
        throw std::runtime_error("load_centerline: non-positive width at line " +
                                 std::to_string(line_no));
      pts.push_back({x, y});
      w_right.push_back(wr);
      w_left.push_back(wl);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("load_centerline: malformed number at line " +
                               std::to_string(line_no));
    }
  }
  if (!header_seen) throw std::runtime_error("load_centerline: missing header");
  if (pts.size() < 64)
    throw std::runtime_error("load_centerline: need at least 64 rows, got " +
                             std::to_string(pts.size()));

  // Drop a duplicated closing point if present.
  if ((pts.front() - pts.back()).norm() < 1e-9) {
    pts.pop_back();
    w_right.pop_back();
    w_left.pop_back();
  }

  const size_t n_in = pts.size();
  const double open_len = polyline_length(pts, false);
  const double mean_spacing = open_len / static_cast<double>(n_in - 1);
  const double gap = (pts.front() - pts.back()).norm();
  if (gap > 10.0 * mean_spacing)
    throw std::runtime_error("load_centerline: endpoint gap " + std::to_string(gap) +
                             " m, track is not a closed loop");

  TrackModel track;
  track.spacing = mean_spacing;
  track.centerline = resample_closed(pts, mean_spacing);

  // Carry widths over by nearest input sample.
  const size_t n = track.centerline.size();
  track.half_width_left.resize(n);
  track.half_width_right.resize(n);
  for (size_t i = 0; i < n; ++i) {
    size_t best = 0;
    double best_d = (track.centerline[i] - pts[0]).squared_norm();
    for (size_t j = 1; j < n_in; ++j) {
      const double d = (track.centerline[i] - pts[j]).squared_norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    track.half_width_left[i] = w_left[best];
    track.half_width_right[i] = w_right[best];
  }
  return track;
}

Lane build_lane(LaneId id, const std::vector<Vec2>& closed_positions, double spacing,
                bool resample) {
  Lane lane;
  lane.id = id;
  const std::vector<Vec2> pts =
      resample ? resample_closed(closed_positions, spacing) : closed_positions;
  const long n = static_cast<long>(pts.size());

  lane.waypoints.resize(pts.size());
  for (long i = 0; i < n; ++i) {
    const Vec2& prev = pts[wrap_index(i - 1, n)];
    const Vec2& cur = pts[static_cast<size_t>(i)];
    const Vec2& next = pts[wrap_index(i + 1, n)];
    LaneWaypoint& w = lane.waypoints[static_cast<size_t>(i)];
    w.x = cur.x;
    w.y = cur.y;
    w.heading = std::atan2(next.y - prev.y, next.x - prev.x);
    w.curvature = menger_curvature(prev, cur, next);
  }

  lane.cum_arc.resize(pts.size() + 1);
  lane.cum_arc[0] = 0.0;
  for (long i = 0; i < n; ++i)
    lane.cum_arc[static_cast<size_t>(i) + 1] =
        lane.cum_arc[static_cast<size_t>(i)] + (pts[wrap_index(i + 1, n)] - pts[static_cast<size_t>(i)]).norm();
  return lane;
}

Lane lane_offset(const TrackModel& track, double offset, double spacing, LaneId id) {
  if (std::abs(offset) >= track.min_half_width())
    throw std::invalid_argument("lane_offset: offset leaves the track");

  const long n = static_cast<long>(track.size());
  std::vector<Vec2> shifted;
  shifted.reserve(track.size());
  for (long i = 0; i < n; ++i) {
    const Vec2 tangent = (track.at(i + 1) - track.at(i - 1)).normalized();
    shifted.push_back(track.at(i) + tangent.perp() * offset);
  }
  // Offsetting stretches spacing by at most |offset * kappa|, well inside the
  // lane spacing tolerance, so the exact offset points are kept.
  return build_lane(id, shifted, spacing, false);
}

Projection project(const Lane& lane, const Vec2& point) {
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lane.size(); ++i) {
    const double d2 = (point - lane.position(static_cast<long>(i))).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.index = i;
    }
  }
  const LaneWaypoint& w = lane.at(static_cast<long>(best.index));
  const Vec2 delta = point - Vec2{w.x, w.y};
  best.distance = delta.norm();
  const Vec2 left{-std::sin(w.heading), std::cos(w.heading)};
  best.lateral = delta.dot(left);
  return best;
}

std::vector<double> curvature_profile(const Lane& lane) {
  if (lane.size() < 3) throw std::invalid_argument("curvature_profile: need at least 3 waypoints");
  std::vector<double> kappa(lane.size());
  for (size_t i = 0; i < lane.size(); ++i) kappa[i] = lane.at(static_cast<long>(i)).curvature;
  return kappa;
}

std::pair<double, double> arc_project(const Lane& lane, const Vec2& point) {
  const Projection p = project(lane, point);
  const long i = static_cast<long>(p.index);
  const long n = static_cast<long>(lane.size());

  double best_arc = lane.cum_arc[p.index];
  double best_d2 = p.distance * p.distance;

  // Refine on the segments before and after the nearest vertex.
  for (long k : {i - 1, i}) {
    const Vec2 a = lane.position(k);
    const Vec2 b = lane.position(k + 1);
    const Vec2 e = b - a;
    const double len2 = e.squared_norm();
    if (len2 <= 0.0) continue;
    const double u = std::clamp((point - a).dot(e) / len2, 0.0, 1.0);
    const Vec2 q = a + e * u;
    const double d2 = (point - q).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      const size_t ki = static_cast<size_t>(wrap_index(k, n));
      best_arc = lane.cum_arc[ki] + u * std::sqrt(len2);
    }
  }
  const double total = lane.length();
  if (best_arc >= total) best_arc -= total;
  return {best_arc, std::sqrt(best_d2)};
}

LaneWaypoint waypoint_at_arc(const Lane& lane, double s) {
  const double total = lane.length();
  s = std::fmod(s, total);
  if (s < 0.0) s += total;

  // cum_arc is sorted; binary search for the segment.
  const auto it = std::upper_bound(lane.cum_arc.begin(), lane.cum_arc.end(), s);
  const size_t i = static_cast<size_t>(std::max<long>(0, (it - lane.cum_arc.begin()) - 1));
  const double seg_len = lane.cum_arc[i + 1] - lane.cum_arc[i];
  const double u = seg_len > 0.0 ? (s - lane.cum_arc[i]) / seg_len : 0.0;

  const LaneWaypoint& a = lane.at(static_cast<long>(i));
  const LaneWaypoint& b = lane.at(static_cast<long>(i) + 1);
  LaneWaypoint out;
  out.x = a.x + (b.x - a.x) * u;
  out.y = a.y + (b.y - a.y) * u;
  out.heading = a.heading + wrap_angle(b.heading - a.heading) * u;
  out.curvature = a.curvature + (b.curvature - a.curvature) * u;
  out.target_speed = a.target_speed + (b.target_speed - a.target_speed) * u;
  return out;
}

std::array<Lane, 3> build_base_lanes(const TrackModel& track) {
  const double w = track.min_half_width();
  return {lane_offset(track, +w / 3.0, track.spacing, LaneId::Inner),
          lane_offset(track, 0.0, track.spacing, LaneId::Center),
          lane_offset(track, -w / 3.0, track.spacing, LaneId::Outer)};
}

std::array<std::vector<Vec2>, 2> track_walls(const TrackModel& track) {
  const long n = static_cast<long>(track.size());
  std::vector<Vec2> left, right;
  left.reserve(track.size());
  right.reserve(track.size());
  for (long i = 0; i < n; ++i) {
    const Vec2 normal = (track.at(i + 1) - track.at(i - 1)).normalized().perp();
    left.push_back(track.at(i) + normal * track.half_width_left[static_cast<size_t>(i)]);
    right.push_back(track.at(i) - normal * track.half_width_right[static_cast<size_t>(i)]);
  }
  return {left, right};
}

void save_lane_csv(const Lane& lane, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_lane_csv: cannot write " + path);
  out << "x_m,y_m,heading_rad,kappa_1pm,v_mps\n";
  out.precision(12);
  for (const LaneWaypoint& w : lane.waypoints)
    out << w.x << ',' << w.y << ',' << w.heading << ',' << w.curvature << ','
        << w.target_speed << '\n';
}

Lane load_lane_csv(const std::string& path, LaneId id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_lane_csv: cannot open " + path);
  std::string line;
  bool header_seen = false;
  Lane lane;
  lane.id = id;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string item;
    std::vector<double> vals;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    if (vals.size() != 5)
      throw std::runtime_error("load_lane_csv: line " + std::to_string(line_no) +
                               ": expected 5 columns");
    lane.waypoints.push_back({vals[0], vals[1], vals[2], vals[3], vals[4]});
  }
  if (lane.waypoints.size() < 3) throw std::runtime_error("load_lane_csv: too few rows");
  const long n = static_cast<long>(lane.waypoints.size());
  lane.cum_arc.resize(lane.waypoints.size() + 1);
  lane.cum_arc[0] = 0.0;
  for (long i = 0; i < n; ++i)
    lane.cum_arc[static_cast<size_t>(i) + 1] =
        lane.cum_arc[static_cast<size_t>(i)] + lane.step(i);
  return lane;
}

}  // namespace racing
