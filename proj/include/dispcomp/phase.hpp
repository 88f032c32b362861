#ifndef DISPCOMP_PHASE_HPP
#define DISPCOMP_PHASE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dispcomp/beam.hpp"
#include "dispcomp/constants.hpp"

namespace dispcomp {

/// A phase contribution A (u / v)^n: amplitude A is the value at v = u.
template <typename Scalar = double>
struct DispersivePhaseTerm {
  Scalar amplitude_at_mean = 0;
  int exponent = 1;
};

using PhaseTerm = DispersivePhaseTerm<double>;

template <typename Scalar>
Scalar evaluate(const DispersivePhaseTerm<Scalar>& term, const BeamModel<Scalar>& beam, Scalar v) {
  if (!(v > Scalar(0))) throw std::domain_error("evaluate: velocity must be positive");
  using std::pow;
  const Scalar ratio = beam.u() / v;
  switch (term.exponent) {
    case 0: return term.amplitude_at_mean;
    case 1: return term.amplitude_at_mean * ratio;
    case 2: return term.amplitude_at_mean * ratio * ratio;
    default: return term.amplitude_at_mean * pow(ratio, term.exponent);
  }
}

/// Three-grating geometry. Latitude in radians.
template <typename Scalar = double>
struct InterferometerGeometry {
  Scalar k_laser;
  Scalar grating_separation_L;
  Scalar latitude = 0;
  Scalar earth_rotation_rate = constants::earth_rotation_rate<Scalar>;

  /// Standing-wave diffraction: k_G = 2 k_L.
  Scalar k_grating() const { return Scalar(2) * k_laser; }

  void validate() const {
    if (!(k_laser > Scalar(0))) throw std::invalid_argument("geometry: k_laser must be positive");
    if (!(grating_separation_L > Scalar(0)))
      throw std::invalid_argument("geometry: grating separation must be positive");
    if (!(std::abs(latitude) <= constants::pi<Scalar> / Scalar(2)))
      throw std::invalid_argument("geometry: |latitude| must not exceed pi/2");
  }
};

using Geometry = InterferometerGeometry<double>;

/// Capacitor on one arm: G = int (E/U)^2 dz in 1/m, sign selects the arm.
template <typename Scalar = double>
struct CapacitorModel {
  Scalar geometry_factor_G;
  int sign = -1;

  void validate() const {
    if (!(geometry_factor_G > Scalar(0)))
      throw std::invalid_argument("capacitor: geometry factor must be positive");
    if (sign != 1 && sign != -1) throw std::invalid_argument("capacitor: sign must be +1 or -1");
  }
};

using Capacitor = CapacitorModel<double>;

/// Velocities of mirrors M1 and M3 (m/s) and the available piezo travel (m).
template <typename Scalar = double>
struct MirrorMotion {
  Scalar v1 = 0;
  Scalar v3 = 0;
  Scalar max_travel = Scalar(20e-6);
};

using Mirrors = MirrorMotion<double>;

template <typename Scalar = double>
struct PrismGeometry {
  Scalar refractive_index_n = Scalar(1.46);
};

/// Static two-exponent mixture standing in for a pair of time-dependent
/// phase shifters: one part scales as u/v, the other as (u/v)^2.
template <typename Scalar = double>
struct RobertsCounterphase {
  Scalar v1_amplitude = 0;
  Scalar v2_amplitude = 0;
};

/// Component of the Earth rotation normal to the horizontal trajectory plane.
template <typename Scalar>
Scalar omega_y(const InterferometerGeometry<Scalar>& geometry) {
  return geometry.earth_rotation_rate * std::sin(geometry.latitude);
}

/// 2 k_G Omega_y L^2 / v. Positive for the reference orientation, opposite in
/// sign to a polarizability term with CapacitorModel::sign = -1.
template <typename Scalar>
DispersivePhaseTerm<Scalar> sagnac_earth_term(const InterferometerGeometry<Scalar>& geometry,
                                              const BeamModel<Scalar>& beam) {
  const Scalar L = geometry.grating_separation_L;
  return {Scalar(2) * geometry.k_grating() * omega_y(geometry) * L * L / beam.u(), 1};
}

/// 2 pi eps0 alpha / hbar, the factor turning int E^2 dz / v into a phase.
template <typename Scalar>
Scalar stark_phase_factor(Scalar alpha) {
  return Scalar(2) * constants::pi<Scalar> * constants::epsilon0<Scalar> * alpha /
         constants::hbar<Scalar>;
}

template <typename Scalar>
DispersivePhaseTerm<Scalar> polarizability_term(const CapacitorModel<Scalar>& capacitor,
                                                Scalar alpha, Scalar voltage_U,
                                                const BeamModel<Scalar>& beam) {
  if (!(alpha > Scalar(0))) throw std::invalid_argument("polarizability_term: alpha must be positive");
  if (!std::isfinite(voltage_U)) throw std::invalid_argument("polarizability_term: voltage must be finite");
  const Scalar field_integral = capacitor.geometry_factor_G * voltage_U * voltage_U;
  return {Scalar(capacitor.sign) * stark_phase_factor(alpha) * field_integral / beam.u(), 1};
}

/// Polarizability volume (m^3) from the magnitude of the phase per V^2 at
/// the mean velocity.
template <typename Scalar>
Scalar alpha_from_coefficient(Scalar coeff_per_U2, Scalar geometry_factor_G, Scalar u) {
  if (geometry_factor_G == Scalar(0))
    throw std::domain_error("alpha_from_coefficient: geometry factor is zero");
  return coeff_per_U2 * constants::hbar<Scalar> * u /
         (Scalar(2) * constants::pi<Scalar> * constants::epsilon0<Scalar> * geometry_factor_G);
}

/// Moving M1 and M3 mimics a rotation: 2 k_L (v1 - v3) L / v.
template <typename Scalar>
DispersivePhaseTerm<Scalar> mirror_sagnac_term(const InterferometerGeometry<Scalar>& geometry,
                                               const MirrorMotion<Scalar>& motion,
                                               const BeamModel<Scalar>& beam) {
  return {Scalar(2) * geometry.k_laser * (motion.v1 - motion.v3) * geometry.grating_separation_L /
              beam.u(),
          1};
}

/// Symmetric motion v1 = -v3 producing target_phase_at_mean at velocity u.
template <typename Scalar>
MirrorMotion<Scalar> required_mirror_velocity(const InterferometerGeometry<Scalar>& geometry,
                                              Scalar target_phase_at_mean, Scalar u) {
  if (!std::isfinite(target_phase_at_mean))
    throw std::invalid_argument("required_mirror_velocity: target must be finite");
  MirrorMotion<Scalar> motion;
  motion.v1 = target_phase_at_mean * u / (Scalar(4) * geometry.k_laser * geometry.grating_separation_L);
  motion.v3 = -motion.v1;
  return motion;
}

/// How long the motion fits in the piezo travel; +inf when the mirrors rest.
template <typename Scalar>
Scalar sustain_time(const MirrorMotion<Scalar>& motion) {
  const Scalar fastest = std::max(std::abs(motion.v1), std::abs(motion.v3));
  if (fastest == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return motion.max_travel / fastest;
}

/// Mirror displacement per prism displacement, dx/dz, at Brewster incidence.
template <typename Scalar>
Scalar prism_displacement_ratio(const PrismGeometry<Scalar>& prism) {
  const Scalar n = prism.refractive_index_n;
  if (!(n >= Scalar(1))) throw std::invalid_argument("prism: refractive index must be >= 1");
  return (Scalar(1) - n * n) / (n * (Scalar(1) + n * n));
}

/// Same ratio from the general-angle form (1 - n cos(i - r)) / n with
/// tan i = n and sin i = n sin r.
template <typename Scalar>
Scalar prism_displacement_ratio_from_angles(const PrismGeometry<Scalar>& prism) {
  const Scalar n = prism.refractive_index_n;
  if (!(n >= Scalar(1))) throw std::invalid_argument("prism: refractive index must be >= 1");
  const Scalar incidence = std::atan(n);
  const Scalar refraction = std::asin(std::sin(incidence) / n);
  return (Scalar(1) - n * std::cos(incidence - refraction)) / n;
}

template <typename Scalar>
std::array<DispersivePhaseTerm<Scalar>, 2> roberts_terms(const RobertsCounterphase<Scalar>& counter) {
  return {DispersivePhaseTerm<Scalar>{counter.v1_amplitude, 1},
          DispersivePhaseTerm<Scalar>{counter.v2_amplitude, 2}};
}

}  // namespace dispcomp

#endif  // DISPCOMP_PHASE_HPP
