#include "racing/raceline.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racing {

namespace {

struct CurvatureWork {
  // Per-sample quantities of the offset path p_i = c_i + alpha_i * n_i,
  // differentiated with the path parameter (sample index). The curvature
  // kappa = cross(p', p'') / |p'|^3 is invariant to arc stretching, and the
  // objective weights each sample by its local arc rate |p'| so the figure
  // of merit is the path integral of kappa^2, not a per-sample count. The
  // least-squares residual is r_i = kappa_i * sqrt(|p'_i|).
  std::vector<Vec2> p, d1, d2;
  std::vector<double> cross_term, speed, kappa, residual;

  void resize(size_t n) {
    p.resize(n);
    d1.resize(n);
    d2.resize(n);
    cross_term.resize(n);
    speed.resize(n);
    kappa.resize(n);
    residual.resize(n);
  }
};

size_t wrap(size_t i, size_t n, long off) {
  const long m = (static_cast<long>(i) + off) % static_cast<long>(n);
  return static_cast<size_t>(m < 0 ? m + static_cast<long>(n) : m);
}

void evaluate(const std::vector<Vec2>& center, const std::vector<Vec2>& normals,
              const std::vector<double>& alpha, CurvatureWork& w) {
  const size_t n = center.size();
  for (size_t i = 0; i < n; ++i) w.p[i] = center[i] + normals[i] * alpha[i];
  for (size_t i = 0; i < n; ++i) {
    const Vec2& prev = w.p[wrap(i, n, -1)];
    const Vec2& next = w.p[wrap(i, n, +1)];
    w.d1[i] = (next - prev) * 0.5;
    w.d2[i] = next - w.p[i] * 2.0 + prev;
    w.speed[i] = std::max(w.d1[i].norm(), 1e-6);
    w.cross_term[i] = w.d1[i].cross(w.d2[i]);
    w.kappa[i] = w.cross_term[i] / (w.speed[i] * w.speed[i] * w.speed[i]);
    w.residual[i] = w.kappa[i] * std::sqrt(w.speed[i]);
  }
}

double objective(const CurvatureWork& w) {
  double j = 0.0;
  for (double r : w.residual) j += r * r;
  return j;
}

// d(r_i)/d(alpha_{i+off}); r_i depends only on offsets -1, 0, +1.
double residual_derivative(const std::vector<Vec2>& normals, const CurvatureWork& w, size_t i,
                           long off) {
  const size_t n = normals.size();
  const size_t j = wrap(i, n, off);
  const double s = w.speed[i];
  const double s3 = s * s * s;
  const double c = w.cross_term[i];
  const double w1 = off == 0 ? 0.0 : (off > 0 ? 0.5 : -0.5);
  const double w2 = off == 0 ? -2.0 : 1.0;
  const Vec2& nj = normals[j];
  const double dc = w1 * nj.cross(w.d2[i]) + w2 * w.d1[i].cross(nj);
  const double ds = w1 * w.d1[i].dot(nj) / s;  // d|p'|/dalpha_j
  const double dkappa = (dc * s3 - c * 3.0 * s * s * ds) / (s3 * s3);
  return dkappa * std::sqrt(s) + w.kappa[i] * 0.5 * ds / std::sqrt(s);
}

void gradient(const std::vector<Vec2>& normals, const CurvatureWork& w,
              std::vector<double>& grad) {
  const size_t n = normals.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  for (size_t i = 0; i < n; ++i)
    for (long off = -1; off <= 1; ++off)
      grad[wrap(i, n, off)] += 2.0 * w.residual[i] * residual_derivative(normals, w, i, off);
}

void project_box(std::vector<double>& alpha, const std::vector<double>& bound) {
  for (size_t i = 0; i < alpha.size(); ++i)
    alpha[i] = std::clamp(alpha[i], -bound[i], bound[i]);
}

}  // namespace

namespace detail {

double raceline_objective(const std::vector<Vec2>& center, const std::vector<Vec2>& normals,
                          const std::vector<double>& alpha) {
  CurvatureWork w;
  w.resize(center.size());
  evaluate(center, normals, alpha, w);
  return objective(w);
}

std::vector<double> raceline_gradient(const std::vector<Vec2>& center,
                                      const std::vector<Vec2>& normals,
                                      const std::vector<double>& alpha) {
  CurvatureWork w;
  w.resize(center.size());
  evaluate(center, normals, alpha, w);
  std::vector<double> grad(center.size());
  gradient(normals, w, grad);
  return grad;
}

}  // namespace detail

namespace {

void validate(const RacelineProblem& pb) {
  const size_t n = pb.track.size();
  if (n < 64) throw std::invalid_argument("raceline: track too small");
  if (pb.alpha_max.size() != n) throw std::invalid_argument("raceline: alpha_max size mismatch");
  if (pb.iterations < 1 || pb.step_size <= 0.0)
    throw std::invalid_argument("raceline: bad iteration budget or step size");
  for (size_t i = 0; i < n; ++i) {
    const double room =
        std::min(pb.track.half_width_left[i], pb.track.half_width_right[i]) - pb.car_half_width;
    if (pb.alpha_max[i] < 0.0 || pb.alpha_max[i] > room + 1e-9)
      throw std::invalid_argument("raceline: alpha_max exceeds drivable width at sample " +
                                  std::to_string(i));
  }
}

}  // namespace

RacelineProblem make_raceline_problem(const TrackModel& track, double car_half_width) {
  RacelineProblem pb;
  pb.track = track;
  pb.car_half_width = car_half_width;
  pb.alpha_max.resize(track.size());
  for (size_t i = 0; i < track.size(); ++i)
    pb.alpha_max[i] = std::max(
        0.0, std::min(track.half_width_left[i], track.half_width_right[i]) - car_half_width);
  return pb;
}

RacelineResult optimize_min_curvature(const RacelineProblem& pb) {
  validate(pb);
  const size_t n = pb.track.size();

  std::vector<Vec2> center(pb.track.centerline);
  std::vector<Vec2> normals(n);
  for (size_t i = 0; i < n; ++i) {
    const Vec2 tangent =
        (pb.track.at(static_cast<long>(i) + 1) - pb.track.at(static_cast<long>(i) - 1)).normalized();
    normals[i] = tangent.perp();
  }

  std::vector<double> alpha(n, 0.0), grad(n), cand(n), direction(n);
  CurvatureWork work, cand_work;
  work.resize(n);
  cand_work.resize(n);

  evaluate(center, normals, alpha, work);
  double j = objective(work);
  gradient(normals, work, grad);

  RacelineResult result;
  result.objective_history.push_back(j);

  constexpr double armijo_c = 1e-4;
  const auto armijo_accept = [&](double step) {
    for (size_t i = 0; i < n; ++i) cand[i] = alpha[i] + step * direction[i];
    project_box(cand, pb.alpha_max);
    evaluate(center, normals, cand, cand_work);
    const double jc = objective(cand_work);
    double directional = 0.0;
    for (size_t i = 0; i < n; ++i) directional += grad[i] * (cand[i] - alpha[i]);
    if (directional < 0.0 && jc <= j + armijo_c * directional) {
      alpha = cand;
      std::swap(work, cand_work);
      j = jc;
      gradient(normals, work, grad);
      result.objective_history.push_back(j);
      return true;
    }
    return false;
  };

  // Each outer iteration linearizes the curvature residual, solves the
  // box-constrained quadratic model with an active-set scheme (direct sparse
  // solves on the pentadiagonal normal matrix, bound coordinates held by a
  // quadratic penalty), then line-searches the true objective along that
  // in-box step. The squared-curvature landscape is far too stiff for plain
  // gradient steps: its corner-cutting modes are orders of magnitude softer
  // than the zigzag modes.
  using Sparse = Eigen::SparseMatrix<double>;
  const long ln = static_cast<long>(n);
  std::vector<Eigen::Triplet<double>> triplets;
  Sparse jac(ln, ln);
  constexpr double kPin = 1e12;
  std::vector<int> bound(n, 0);  // -1 at lo, +1 at hi, 0 free; warm-started

  int iter = 0;
  bool stalled = false;
  int tiny_steps = 0;
  for (; iter < pb.iterations && !stalled; ++iter) {
    triplets.clear();
    for (size_t i = 0; i < n; ++i)
      for (long off = -1; off <= 1; ++off)
        triplets.emplace_back(static_cast<long>(i), static_cast<long>(wrap(i, n, off)),
                              residual_derivative(normals, work, i, off));
    jac.setFromTriplets(triplets.begin(), triplets.end());
    Sparse h = Sparse(jac.transpose()) * jac;
    for (long i = 0; i < ln; ++i) h.coeffRef(i, i) += 1e-12;

    Eigen::VectorXd lin(ln), lo(ln), hi(ln);
    for (size_t i = 0; i < n; ++i) {
      lin[static_cast<long>(i)] = 0.5 * grad[i];  // J^T kappa
      lo[static_cast<long>(i)] = -pb.alpha_max[i] - alpha[i];
      hi[static_cast<long>(i)] = pb.alpha_max[i] - alpha[i];
    }

    // Active set on min 1/2 x^T H x + lin^T x, lo <= x <= hi.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ln);
    for (int round = 0; round < 60; ++round) {
      Sparse hp = h;
      Eigen::VectorXd rhs = -lin;
      for (long i = 0; i < ln; ++i)
        if (bound[static_cast<size_t>(i)] != 0) {
          hp.coeffRef(i, i) += kPin;
          rhs[i] += kPin * (bound[static_cast<size_t>(i)] < 0 ? lo[i] : hi[i]);
        }
      Eigen::SimplicialLDLT<Sparse> solver(hp);
      if (solver.info() != Eigen::Success) break;
      x = solver.solve(rhs);
      if (solver.info() != Eigen::Success) break;

      bool changed = false;
      for (long i = 0; i < ln; ++i) {  // clamp newly violating coordinates
        if (bound[static_cast<size_t>(i)] != 0) continue;
        if (x[i] < lo[i]) {
          bound[static_cast<size_t>(i)] = -1;
          changed = true;
        } else if (x[i] > hi[i]) {
          bound[static_cast<size_t>(i)] = +1;
          changed = true;
        }
      }
      if (changed) continue;

      const Eigen::VectorXd model_grad = h * x + lin;  // release wrong-sign multipliers
      for (long i = 0; i < ln; ++i) {
        if (bound[static_cast<size_t>(i)] < 0 && model_grad[i] < -1e-12) {
          bound[static_cast<size_t>(i)] = 0;
          changed = true;
        } else if (bound[static_cast<size_t>(i)] > 0 && model_grad[i] > 1e-12) {
          bound[static_cast<size_t>(i)] = 0;
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (long i = 0; i < ln; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);

    for (size_t i = 0; i < n; ++i) direction[i] = x[static_cast<long>(i)];
    bool accepted = false;
    double taken = 0.0;
    for (double step = 1.0; step > 1e-10; step *= 0.5)
      if ((accepted = armijo_accept(step))) {
        taken = step;
        break;
      }
    if (!accepted) {
      stalled = true;  // quadratic model step is no longer a descent step
      break;
    }

    // The landscape is nearly flat along the corner-cutting mode, so stop on
    // step size, not on objective decrease.
    double step_inf = 0.0;
    for (size_t i = 0; i < n; ++i) step_inf = std::max(step_inf, taken * std::abs(direction[i]));
    tiny_steps = step_inf < 1e-6 ? tiny_steps + 1 : 0;
    if (tiny_steps >= 3) {
      stalled = true;
      break;
    }
  }
  result.iterations_used = iter;

  // Projected-gradient stationarity measure.
  double stat = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double moved = std::clamp(alpha[i] - grad[i], -pb.alpha_max[i], pb.alpha_max[i]);
    stat = std::max(stat, std::abs(moved - alpha[i]));
  }
  result.converged = stalled || stat < 1e-8;

  std::vector<Vec2> pts(n);
  for (size_t i = 0; i < n; ++i) pts[i] = center[i] + normals[i] * alpha[i];
  result.lane = build_lane(LaneId::Optimized, pts, pb.track.spacing, false);
  return result;
}

Lane velocity_profile(const Lane& lane, const SpeedLimits& limits) {
  if (limits.v_cap <= 0.0 || limits.a_lat_max <= 0.0 || limits.a_accel_max <= 0.0 ||
      limits.a_brake_max <= 0.0)
    throw std::invalid_argument("velocity_profile: limits must be positive");

  Lane out = lane;
  const long n = static_cast<long>(out.size());
  std::vector<double> v(out.size());
  for (long i = 0; i < n; ++i) {
    const double k = std::abs(out.at(i).curvature);
    v[static_cast<size_t>(i)] =
        k > 1e-12 ? std::min(limits.v_cap, std::sqrt(limits.a_lat_max / k)) : limits.v_cap;
  }

  // Cyclic relaxation; every update only lowers speeds, so this terminates.
  bool changed = true;
  int rounds = 0;
  while (changed && rounds++ < 200) {
    changed = false;
    for (long i = 0; i < n; ++i) {  // forward: acceleration limit
      const size_t a = static_cast<size_t>(i);
      const size_t b = static_cast<size_t>((i + 1) % n);
      const double ds = out.step(i);
      const double cap = std::sqrt(v[a] * v[a] + 2.0 * limits.a_accel_max * ds);
      if (v[b] > cap + 1e-12) {
        v[b] = cap;
        changed = true;
      }
    }
    for (long i = n - 1; i >= 0; --i) {  // backward: braking limit
      const size_t a = static_cast<size_t>(i);
      const size_t b = static_cast<size_t>((i + 1) % n);
      const double ds = out.step(i);
      const double cap = std::sqrt(v[b] * v[b] + 2.0 * limits.a_brake_max * ds);
      if (v[a] > cap + 1e-12) {
        v[a] = cap;
        changed = true;
      }
    }
  }

  for (long i = 0; i < n; ++i) out.waypoints[static_cast<size_t>(i)].target_speed = v[static_cast<size_t>(i)];
  return out;
}

double total_squared_curvature(const Lane& lane) {
  double sum = 0.0;
  for (long i = 0; i < static_cast<long>(lane.size()); ++i) {
    const double k = lane.at(i).curvature;
    sum += k * k * lane.step(i);
  }
  return sum;
}

}  // namespace racing
