#include "dispcomp/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dispcomp/roots.hpp"

namespace dispcomp {

std::vector<PhaseTerm> counter_terms(double amplitude_at_mean, double v2_fraction) {
  std::vector<PhaseTerm> terms;
  if (v2_fraction != 1) terms.push_back({(1 - v2_fraction) * amplitude_at_mean, 1});
  if (v2_fraction != 0) terms.push_back({v2_fraction * amplitude_at_mean, 2});
  return terms;
}

CompensationPlan tune_counterphase(const PhaseTerm& pol_term, const Beam& beam, const Geometry& geometry,
                                   double tolerance, const TuneOptions& options) {
  if (pol_term.exponent != 1) throw std::invalid_argument("tune_counterphase: pol term must scale as u/v");
  if (!(tolerance > 0)) throw std::invalid_argument("tune_counterphase: tolerance must be positive");
  geometry.validate();
  const Support support = options.support.value_or(default_support(beam));

  const auto fringe_at = [&](double amplitude) {
    std::vector<PhaseTerm> terms = counter_terms(amplitude, options.v2_fraction);
    terms.push_back(pol_term);
    return averaged_fringe<double>(terms, beam, options.v0, support);
  };
  const auto total_phase = [&](double amplitude) { return fringe_at(amplitude).unwrapped_phase; };

  double amplitude = -pol_term.amplitude_at_mean;
  double residual = total_phase(amplitude);
  if (std::abs(residual) > tolerance) {
    const double step = std::max({std::abs(residual), 1e-6 * std::abs(amplitude), 1e-9});
    double f_lo = 0, f_hi = 0;
    const auto [lo, hi] = expand_bracket(total_phase, amplitude, step, f_lo, f_hi);
    const auto root = brent_root(total_phase, lo, hi, f_lo, f_hi, 0.0, tolerance);
    if (!root.converged || std::abs(root.fx) > tolerance)
      throw RootNotBracketed("tune_counterphase: residual phase did not reach tolerance");
    amplitude = root.x;
  }

  const Fringe at_null = fringe_at(amplitude);
  CompensationPlan plan;
  plan.counter_amplitude_at_mean = amplitude;
  plan.motion = required_mirror_velocity(geometry, amplitude, beam.u());
  plan.motion.max_travel = options.max_travel;
  plan.prism_dz_rate = plan.motion.v1 / prism_displacement_ratio(options.prism);
  plan.residual_phase = at_null.unwrapped_phase;
  plan.visibility_ratio_at_null = at_null.visibility / options.v0;
  plan.sustain_time = sustain_time(plan.motion);
  return plan;
}

ResidualDispersion residual_dispersion(std::span<const PhaseTerm> counter_terms, const PhaseTerm& pol_term,
                                       const Beam& beam, double v0, const Support& support) {
  double counter_total = 0;
  for (const auto& t : counter_terms) counter_total += t.amplitude_at_mean;
  const double scale = counter_total != 0 ? -pol_term.amplitude_at_mean / counter_total : 1.0;
  std::vector<PhaseTerm> terms;
  terms.reserve(counter_terms.size() + 1);
  for (const auto& t : counter_terms) terms.push_back({t.amplitude_at_mean * scale, t.exponent});
  terms.push_back(pol_term);
  const Fringe f = averaged_fringe<double>(terms, beam, v0, support);
  return {f.unwrapped_phase, f.visibility / v0};
}

double extract_alpha_compensated(double measured_residual, const Mirrors& motion, const Geometry& geometry,
                                 double u, const Capacitor& capacitor, double voltage_U) {
  if (capacitor.geometry_factor_G == 0)
    throw std::domain_error("extract_alpha_compensated: geometry factor is zero");
  capacitor.validate();
  const double field_integral = capacitor.geometry_factor_G * voltage_U * voltage_U;
  if (field_integral == 0) throw std::domain_error("extract_alpha_compensated: zero field integral");
  const double mirror_term = 2 * geometry.k_laser * (motion.v1 - motion.v3) * geometry.grating_separation_L;
  const double k_alpha_field = capacitor.sign * (u * measured_residual - mirror_term);
  return k_alpha_field / (stark_phase_factor(1.0) * field_integral);
}

}  // namespace dispcomp
