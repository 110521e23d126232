// SPDX-License-Identifier: Apache-2.0
#pragma once

// Unperturbed two-body mechanics: universal-variable propagation, element
// conversions, periapsis radius, single-revolution Lambert transfers and the
// maximum plane-change angles used to lay out plane-change slot grids.
//
// Units throughout: km, km/s, seconds; angles in KeplerianElements are degrees.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "l2d/errors.hpp"

namespace l2d {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDeg = kPi / 180.0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct EarthConstants {
  double mu = 398600.4418;       // km^3/s^2
  double radius = 6378.137;      // km
  double grazing_altitude = 100;  // km, line-of-sight clearance

  double grazing_radius() const { return radius + grazing_altitude; }
};

// Position and velocity in an Earth-centred inertial frame. The all-zero state
// is reserved as the "deorbited" sentinel.
struct StateVector {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  static StateVector deorbited() { return {}; }
  bool is_sentinel() const { return r.isZero(0.0) && v.isZero(0.0); }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.r == b.r && a.v == b.v;
  }
};

// Classical elements with the argument of latitude as the in-orbit angle.
// For e > 0 the argument of perigee is kept separately so that
// true anomaly = argument_of_latitude - arg_perigee.
struct KeplerianElements {
  double semi_major_axis = 0;       // km
  double eccentricity = 0;          // [0, 1)
  double inclination = 0;           // deg, [0, 180]
  double raan = 0;                  // deg, [0, 360)
  double argument_of_latitude = 0;  // deg, [0, 360)
  double arg_perigee = 0;           // deg, ignored when e == 0

  friend bool operator==(const KeplerianElements&,
                         const KeplerianElements&) = default;
};

namespace astro {

inline double wrap_deg(double angle) {
  double w = std::fmod(angle, 360.0);
  if (w < 0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

inline double specific_energy(const StateVector& s,
                              const EarthConstants& earth = {}) {
  return 0.5 * s.v.squaredNorm() - earth.mu / s.r.norm();
}

inline Vec3 angular_momentum(const StateVector& s) { return s.r.cross(s.v); }

inline Vec3 eccentricity_vector(const StateVector& s,
                                const EarthConstants& earth = {}) {
  const double r = s.r.norm();
  return ((s.v.squaredNorm() - earth.mu / r) * s.r - s.r.dot(s.v) * s.v) /
         earth.mu;
}

inline double circular_speed(double radius, const EarthConstants& earth = {}) {
  return std::sqrt(earth.mu / radius);
}

inline double orbital_period(double semi_major_axis,
                             const EarthConstants& earth = {}) {
  return 2.0 * kPi *
         std::sqrt(semi_major_axis * semi_major_axis * semi_major_axis /
                   earth.mu);
}

// Stumpff functions C(z), S(z).
inline double stumpff_c(double z) {
  if (z > 0.1) return (1.0 - std::cos(std::sqrt(z))) / z;
  if (z < -0.1) return (std::cosh(std::sqrt(-z)) - 1.0) / (-z);
  // Series sum_k (-z)^k / (2k+2)!
  double term = 0.5, sum = 0.5;
  for (int k = 1; k < 10; ++k) {
    term *= -z / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
    sum += term;
  }
  return sum;
}

inline double stumpff_s(double z) {
  if (z > 0.1) {
    const double sz = std::sqrt(z);
    return (sz - std::sin(sz)) / (sz * sz * sz);
  }
  if (z < -0.1) {
    const double sz = std::sqrt(-z);
    return (std::sinh(sz) - sz) / (sz * sz * sz);
  }
  // Series sum_k (-z)^k / (2k+3)!
  double term = 1.0 / 6.0, sum = term;
  for (int k = 1; k < 10; ++k) {
    term *= -z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    sum += term;
  }
  return sum;
}

// Keplerian propagation over dt >= 0 seconds with the universal-variable
// formulation; Newton iteration on the universal anomaly (tolerance 1e-12
// relative, at most 50 iterations).
inline StateVector propagate_two_body(const StateVector& state, double dt,
                                      const EarthConstants& earth = {}) {
  if (state.is_sentinel())
    throw ContractViolation("astro", "cannot propagate the deorbit sentinel");
  if (!(dt >= 0)) throw ContractViolation("astro", "negative time of flight");
  const double mu = earth.mu;
  const double sqrt_mu = std::sqrt(mu);
  const double r0 = state.r.norm();
  const Vec3 h = state.r.cross(state.v);
  if (!(r0 > 0) || h.norm() < 1e-10 * r0 * state.v.norm() || !h.allFinite())
    throw InvalidInput("astro", "degenerate orbit (zero angular momentum)");
  if (dt == 0) return state;

  const double v0_sq = state.v.squaredNorm();
  const double rv = state.r.dot(state.v);
  const double vr0 = rv / r0;
  const double alpha = 2.0 / r0 - v0_sq / mu;  // 1/a

  double t = dt;
  if (alpha > 1e-12) {
    const double period = 2.0 * kPi / (std::sqrt(mu) * std::pow(alpha, 1.5));
    t = std::fmod(dt, period);
    if (t == 0) return state;
  }

  double chi;
  if (alpha > 1e-6) {
    chi = sqrt_mu * t * alpha;
  } else if (alpha < -1e-6) {
    const double a = 1.0 / alpha;
    chi = std::sqrt(-a) *
          std::log(-2.0 * mu * alpha * t /
                   (rv + std::sqrt(-mu * a) * (1.0 - r0 * alpha)));
    if (!std::isfinite(chi)) chi = sqrt_mu * t / r0;
  } else {
    const double p = h.squaredNorm() / mu;
    const double s = 0.5 * std::atan(1.0 / (3.0 * std::sqrt(mu / (p * p * p)) * t));
    const double w = std::atan(std::cbrt(std::tan(s)));
    chi = std::sqrt(p) * 2.0 / std::tan(2.0 * w);
  }

  const double k1 = r0 * vr0 / sqrt_mu;
  const double k2 = 1.0 - alpha * r0;
  double z = 0, c = 0.5, s = 1.0 / 6.0;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    z = alpha * chi * chi;
    c = stumpff_c(z);
    s = stumpff_s(z);
    const double chi2 = chi * chi;
    const double f = k1 * chi2 * c + k2 * chi2 * chi * s + r0 * chi - sqrt_mu * t;
    const double df = k1 * chi * (1.0 - z * s) + k2 * chi2 * c + r0;
    const double step = f / df;
    chi -= step;
    if (std::abs(step) <= 1e-12 * std::max(1.0, std::abs(chi))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw InvalidInput("astro", "universal anomaly iteration did not converge");
  z = alpha * chi * chi;
  c = stumpff_c(z);
  s = stumpff_s(z);

  const double chi2 = chi * chi;
  const double f = 1.0 - chi2 / r0 * c;
  const double g = t - chi2 * chi / sqrt_mu * s;
  StateVector out;
  out.r = f * state.r + g * state.v;
  const double r = out.r.norm();
  const double fdot = sqrt_mu / (r * r0) * (alpha * chi2 * chi * s - chi);
  const double gdot = 1.0 - chi2 / r * c;
  out.v = fdot * state.r + gdot * state.v;
  return out;
}

struct Periapsis {
  double radius = 0;  // km
  double eccentricity = 0;
  bool unbound = false;  // e >= 1 (parabolic or hyperbolic)
};

// r_p = |r x v|^2 / (mu (1 + e)); stays finite for unbound orbits.
inline Periapsis periapsis(const StateVector& state,
                           const EarthConstants& earth = {}) {
  if (state.is_sentinel())
    throw ContractViolation("astro", "periapsis of the deorbit sentinel");
  const double e = eccentricity_vector(state, earth).norm();
  const double h2 = angular_momentum(state).squaredNorm();
  return {h2 / (earth.mu * (1.0 + e)), e, e >= 1.0};
}

inline double periapsis_radius(const StateVector& state,
                               const EarthConstants& earth = {}) {
  return periapsis(state, earth).radius;
}

inline StateVector elements_to_state(const KeplerianElements& el,
                                     const EarthConstants& earth = {}) {
  if (!(el.semi_major_axis > 0) || !(el.eccentricity >= 0) ||
      !(el.eccentricity < 1))
    throw InvalidInput("astro", "elements must describe a closed orbit");
  const double p = el.semi_major_axis * (1.0 - el.eccentricity * el.eccentricity);
  const double nu = (el.argument_of_latitude - el.arg_perigee) * kDeg;
  const double e = el.eccentricity;
  const double rmag = p / (1.0 + e * std::cos(nu));
  const double vfac = std::sqrt(earth.mu / p);
  const Vec3 r_pqw(rmag * std::cos(nu), rmag * std::sin(nu), 0.0);
  const Vec3 v_pqw(-vfac * std::sin(nu), vfac * (e + std::cos(nu)), 0.0);
  const Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(el.raan * kDeg, Vec3::UnitZ()) *
       Eigen::AngleAxisd(el.inclination * kDeg, Vec3::UnitX()) *
       Eigen::AngleAxisd(el.arg_perigee * kDeg, Vec3::UnitZ()))
          .toRotationMatrix();
  return {rot * r_pqw, rot * v_pqw};
}

inline KeplerianElements state_to_elements(const StateVector& s,
                                           const EarthConstants& earth = {}) {
  if (s.is_sentinel())
    throw ContractViolation("astro", "elements of the deorbit sentinel");
  const Vec3 h = angular_momentum(s);
  const double hn = h.norm();
  if (hn <= 0) throw InvalidInput("astro", "degenerate orbit");
  const Vec3 e_vec = eccentricity_vector(s, earth);
  const double e = e_vec.norm();
  KeplerianElements el;
  el.semi_major_axis = -earth.mu / (2.0 * specific_energy(s, earth));
  el.eccentricity = e;
  el.inclination = std::acos(std::clamp(h.z() / hn, -1.0, 1.0)) / kDeg;

  // Node line; for equatorial orbits the x axis stands in for it.
  Vec3 node = Vec3::UnitZ().cross(h);
  if (node.norm() < 1e-12 * hn) {
    node = Vec3::UnitX();
    el.raan = 0;
  } else {
    node.normalize();
    el.raan = wrap_deg(std::atan2(node.y(), node.x()) / kDeg);
  }
  const Vec3 h_hat = h / hn;
  const Vec3 in_plane = h_hat.cross(node);
  el.argument_of_latitude =
      wrap_deg(std::atan2(s.r.dot(in_plane), s.r.dot(node)) / kDeg);
  el.arg_perigee =
      e > 1e-12 ? wrap_deg(std::atan2(e_vec.dot(in_plane), e_vec.dot(node)) / kDeg)
                : 0.0;
  return el;
}

struct LambertSolution {
  Vec3 v_departure;
  Vec3 v_arrival;
};

// Single-revolution Lambert problem in universal variables. `prograde_normal`
// picks the transfer direction: the short way when (r1 x r2) points along it.
// Returns nullopt for collinear geometry or when the iteration fails.
inline std::optional<LambertSolution> solve_lambert(
    const Vec3& r1, const Vec3& r2, double tof, const Vec3& prograde_normal,
    const EarthConstants& earth = {}) {
  if (!(tof > 0)) return std::nullopt;
  const double mu = earth.mu;
  const double n1 = r1.norm(), n2 = r2.norm();
  const double cos_dtheta = std::clamp(r1.dot(r2) / (n1 * n2), -1.0, 1.0);
  double dtheta = std::acos(cos_dtheta);
  if (r1.cross(r2).dot(prograde_normal) < 0) dtheta = 2.0 * kPi - dtheta;
  if (dtheta < 1e-9 || std::abs(dtheta - kPi) < 1e-9 ||
      2.0 * kPi - dtheta < 1e-9)
    return std::nullopt;

  const double a_coef = std::sin(dtheta) * std::sqrt(n1 * n2 / (1.0 - std::cos(dtheta)));
  const double target = std::sqrt(mu) * tof;

  auto y_of = [&](double z) {
    return n1 + n2 + a_coef * (z * stumpff_s(z) - 1.0) / std::sqrt(stumpff_c(z));
  };
  // Scaled time of flight sqrt(mu)*t(z); -inf where y < 0 (no real orbit).
  auto time_of = [&](double z) {
    const double y = y_of(z);
    if (y < 0) return -kInf;
    const double c = stumpff_c(z);
    return std::pow(y / c, 1.5) * stumpff_s(z) + a_coef * std::sqrt(y);
  };

  const double z_max = 4.0 * kPi * kPi;
  double lo = -4.0 * kPi * kPi, hi = z_max * (1.0 - 1e-12);
  for (int k = 0; k < 60 && time_of(lo) > target; ++k) lo *= 2.0;
  if (time_of(lo) > target || time_of(hi) < target) return std::nullopt;

  // Newton steps kept inside the bracket; bisection otherwise.
  double z = std::clamp(0.0, lo, hi);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double tz = time_of(z);
    if (std::isfinite(tz) && std::abs(tz - target) <= 1e-13 * target) {
      converged = true;
      break;
    }
    if (tz < target) lo = z;
    else hi = z;
    double next = 0.5 * (lo + hi);
    const double y = y_of(z);
    if (std::isfinite(tz) && y > 0) {
      const double c = stumpff_c(z), s = stumpff_s(z);
      double dt_dz;
      if (std::abs(z) > 1e-8) {
        dt_dz = std::pow(y / c, 1.5) *
                    (1.0 / (2.0 * z) * (c - 1.5 * s / c) + 0.75 * s * s / c) +
                a_coef / 8.0 * (3.0 * s / c * std::sqrt(y) + a_coef * std::sqrt(c / y));
      } else {
        dt_dz = std::sqrt(2.0) / 40.0 * std::pow(y, 1.5) +
                a_coef / 8.0 * (std::sqrt(y) + a_coef * std::sqrt(1.0 / (2.0 * y)));
      }
      const double newton = z - (tz - target) / dt_dz;
      if (std::isfinite(newton) && newton > lo && newton < hi) next = newton;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(z))) {
      z = next;
      converged = std::abs(time_of(z) - target) <= 1e-9 * target;
      break;
    }
    z = next;
  }
  if (!converged) return std::nullopt;

  const double y = y_of(z);
  const double f = 1.0 - y / n1;
  const double g = a_coef * std::sqrt(y / mu);
  const double gdot = 1.0 - y / n2;
  return LambertSolution{(r2 - f * r1) / g, (gdot * r2 - r1) / g};
}

// Two-impulse cost of moving from `from` (at t) onto `to` (at t + tof) along a
// prograde single-revolution Lambert arc. +inf when the arc does not exist.
inline double transfer_cost(const StateVector& from, const StateVector& to,
                            double tof, const EarthConstants& earth = {}) {
  if (from.is_sentinel() || to.is_sentinel())
    throw ContractViolation("astro", "transfer involving the deorbit sentinel");
  if (!(tof > 0)) throw ContractViolation("astro", "time of flight must be positive");
  const auto arc = solve_lambert(from.r, to.r, tof, angular_momentum(from), earth);
  if (!arc) return kInf;
  return (arc->v_departure - from.v).norm() + (to.v - arc->v_arrival).norm();
}

struct AngleBound {
  double degrees = 0;
  bool saturated = false;  // argument left the inverse-trig domain
};

// Largest inclination change reachable with `dv_budget` scaled by beta:
// 2 beta asin(dv / (2 sqrt(mu / r))).
inline AngleBound max_inclination_change(double dv_budget, double orbit_radius,
                                         double beta,
                                         const EarthConstants& earth = {}) {
  if (!(dv_budget >= 0)) throw InvalidInput("astro", "dv_budget must be >= 0");
  if (!(beta > 0 && beta <= 1)) throw InvalidInput("astro", "beta must be in (0, 1]");
  if (!(orbit_radius > 0)) throw InvalidInput("astro", "orbit radius must be positive");
  const double arg = dv_budget / (2.0 * circular_speed(orbit_radius, earth));
  if (arg > 1.0) return {180.0 * beta, true};
  return {2.0 * beta * std::asin(arg) / kDeg, false};
}

// Largest RAAN change: beta acos((delta - cos^2 i) / sin^2 i), with delta in
// radians exactly as it comes out of the inclination bound.
inline AngleBound max_raan_change(double delta_rad, double inclination_deg,
                                  double beta) {
  if (!(beta > 0 && beta <= 1)) throw InvalidInput("astro", "beta must be in (0, 1]");
  const double si = std::sin(inclination_deg * kDeg);
  const double ci = std::cos(inclination_deg * kDeg);
  if (si * si < 1e-15)
    throw InvalidInput("astro", "RAAN change undefined for equatorial orbits");
  const double arg = (delta_rad - ci * ci) / (si * si);
  const double clamped = std::clamp(arg, -1.0, 1.0);
  return {beta * std::acos(clamped) / kDeg, clamped != arg};
}

}  // namespace astro
}  // namespace l2d
