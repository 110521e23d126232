// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pulsed laser ablation: fluence at range, the impulse a platform imparts on a
// debris object per time step, cooperative (vector-summed) engagements, and the
// line-of-sight / range test that gates every engagement.

#include <cmath>
#include <span>

#include "l2d/astro.hpp"
#include "l2d/errors.hpp"

namespace l2d {

struct LaserSystem {
  double u_max = 325;             // km
  double u_min = 175;             // km
  double mirror_diameter = 1.5;   // m
  double beam_quality = 2;        // M^2
  double diffraction_constant = 1.27;
  double wavelength = 355e-9;     // m
  double coupling = 100;          // N/MW, i.e. 1e-6 N s/J per unit
  double pulse_energy = 380;      // J
  double eta1 = 0.5;              // thrust-direction / shape efficiency
  double eta2 = 0.5;              // apodization / obscuration efficiency
  int pulses_per_step = 560;

  // Momentum coupling in N s/J.
  double coupling_si() const { return coupling * 1e-6; }

  void validate() const {
    if (!(u_min > 0) || !(u_min < u_max))
      throw InvalidInput("pla", "require 0 < u_min < u_max");
    if (!(mirror_diameter > 0) || !(beam_quality > 0) ||
        !(diffraction_constant > 0) || !(wavelength > 0) || !(coupling > 0) ||
        !(pulse_energy > 0) || pulses_per_step <= 0)
      throw InvalidInput("pla", "laser parameters must be strictly positive");
    if (!(eta1 > 0 && eta1 <= 1) || !(eta2 > 0 && eta2 <= 1))
      throw InvalidInput("pla", "efficiencies must lie in (0, 1]");
  }
};

namespace pla {

// Fluence on target in J/m^2 at range `range_km`.
inline double fluence(const LaserSystem& laser, double range_km) {
  if (!(range_km > 0)) throw InvalidInput("pla", "range must be positive");
  const double u = range_km * 1e3;
  const double spot = 2.0 * laser.mirror_diameter /
                      (laser.beam_quality * laser.diffraction_constant *
                       laser.wavelength * u);
  return laser.eta2 * laser.pulse_energy / kPi * spot * spot;
}

// Per-step impulse on debris (km/s), directed from the platform to the debris.
// c_m [N s/J] * fluence [J/m^2] / mu_d [kg/m^2] gives m/s per pulse.
inline Vec3 delta_v_engagement(const LaserSystem& laser, const Vec3& platform_pos,
                               const StateVector& debris, double mu_d) {
  if (!(mu_d > 0)) throw InvalidInput("pla", "surface mass density must be positive");
  const Vec3 los = debris.r - platform_pos;
  const double u = los.norm();
  if (!(u >= laser.u_min && u <= laser.u_max))
    throw InfeasibleEngagement("pla", "laser range outside [u_min, u_max]");
  const double dv_m_s = laser.pulses_per_step * laser.eta1 * laser.coupling_si() *
                        fluence(laser, u) / mu_d;
  return (dv_m_s * 1e-3) * (los / u);
}

// Instantaneous impulses: position kept, velocity gets the vector sum.
inline StateVector apply_cooperative_engagement(const StateVector& debris,
                                                std::span<const Vec3> dvs) {
  if (debris.is_sentinel())
    throw ContractViolation("pla", "engagement on deorbited debris");
  StateVector out = debris;
  for (const Vec3& dv : dvs) out.v += dv;
  return out;
}

// Line of sight above the grazing radius, and u_min <= u <= u_max.
inline bool engagement_feasible(const Vec3& platform_pos, const Vec3& debris_pos,
                                const LaserSystem& laser,
                                const EarthConstants& earth = {}) {
  const double rg = earth.grazing_radius();
  const double rp = platform_pos.norm(), rd = debris_pos.norm();
  if (!(rp > rg) || !(rd > rg)) return false;
  const double u = (debris_pos - platform_pos).norm();
  const double horizon = std::sqrt(rp * rp - rg * rg) + std::sqrt(rd * rd - rg * rg);
  return horizon - u >= 0 && u >= laser.u_min && u <= laser.u_max;
}

}  // namespace pla
}  // namespace l2d
