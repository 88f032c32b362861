#ifndef DISPCOMP_COMPENSATION_HPP
#define DISPCOMP_COMPENSATION_HPP

// Counterphase design: tune a Sagnac-type term against a polarizability
// phase, size the mirror or prism motion that produces it, and read alpha
// back from the compensated measurement.

#include <optional>
#include <vector>

#include "dispcomp/beam.hpp"
#include "dispcomp/fringe.hpp"
#include "dispcomp/phase.hpp"

namespace dispcomp {

struct CompensationPlan {
  double counter_amplitude_at_mean = 0;  // rad
  Mirrors motion;
  /// Prism velocity giving the same standing-wave motion as mirror M1.
  double prism_dz_rate = 0;  // m/s
  double residual_phase = 0;  // rad
  double visibility_ratio_at_null = 0;
  double sustain_time = 0;  // s
};

struct TuneOptions {
  double v0 = 1;
  /// Support to average over; default_support(beam) when unset.
  std::optional<Support> support;
  PrismGeometry<double> prism;
  /// Fraction of the counter amplitude scaling as (u/v)^2 instead of u/v.
  /// Zero is a pure Sagnac counterphase.
  double v2_fraction = 0;
  double max_travel = 20e-6;
};

/// Counter terms of total at-mean amplitude A: (1 - f) A (u/v) + f A (u/v)^2.
std::vector<PhaseTerm> counter_terms(double amplitude_at_mean, double v2_fraction);

/// Finds the counter amplitude that nulls the averaged total phase to within
/// tolerance (Brent on a bracket grown around -A_pol).
CompensationPlan tune_counterphase(const PhaseTerm& pol_term, const Beam& beam, const Geometry& geometry,
                                   double tolerance = 1e-9, const TuneOptions& options = {});

struct ResidualDispersion {
  double residual_phase;     // rad
  double visibility_ratio;
};

/// Averaged phase and visibility ratio of pol_term plus counter_terms, after
/// rescaling the counter terms so their at-mean amplitudes cancel pol_term.
ResidualDispersion residual_dispersion(std::span<const PhaseTerm> counter_terms, const PhaseTerm& pol_term,
                                       const Beam& beam, double v0, const Support& support);

/// alpha from K G U^2 = sign (u r - 2 k_L (v1 - v3) L), K = 2 pi eps0 / hbar,
/// where r is the measured residual of the compensated fringe. With the
/// default arm sign this reads 2 k_L (v1 - v3) L - u r.
double extract_alpha_compensated(double measured_residual, const Mirrors& motion, const Geometry& geometry,
                                 double u, const Capacitor& capacitor, double voltage_U);

}  // namespace dispcomp

#endif  // DISPCOMP_COMPENSATION_HPP
