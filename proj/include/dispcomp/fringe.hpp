#ifndef DISPCOMP_FRINGE_HPP
#define DISPCOMP_FRINGE_HPP

// Velocity-averaged fringe: Z = v0 int P(v) exp(i sum_k phi_k(v)) dv with
// visibility |Z| and phase arg Z.
//
// The integral is taken in w = u / v, where every exponent-1 term is linear.
// On each panel the total phase is split as kappa w + rho(w) with kappa its
// slope at the panel midpoint; exp(i kappa w) is integrated exactly by Filon
// weights and the smooth rest P(u/w) u / w^2 exp(i rho(w)) is sampled on
// Gauss-Legendre nodes. Panels are uniform in v, with the lowest one split
// geometrically when the support reaches far below u.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "dispcomp/beam.hpp"
#include "dispcomp/phase.hpp"
#include "dispcomp/quadrature.hpp"

namespace dispcomp {

/// Term list parameter that does not take part in deduction, so vectors and
/// arrays convert.
template <typename Scalar>
using TermSpan = std::type_identity_t<std::span<const DispersivePhaseTerm<Scalar>>>;

/// Raised when doubling the node count moves Z by more than the tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar = double>
struct FringeObservable {
  Scalar visibility = 0;
  /// arg Z in (-pi, pi]
  Scalar phase = 0;
  /// arg Z continued from zero amplitude
  Scalar unwrapped_phase = 0;
  Scalar v0_reference = 1;
  /// fringe-scanning offset; not included in phase
  Scalar psi = 0;
};

using Fringe = FringeObservable<double>;

/// Absolute tolerance on |Z_N - Z_(2N-1)|.
inline constexpr double kQuadratureTolerance = 1e-9;

namespace detail {

/// Sum of terms collected by exponent: phi(w) = sum_n c_n w^n.
template <typename Scalar>
struct PhasePolynomial {
  std::vector<Scalar> coeffs;

  PhasePolynomial(std::span<const DispersivePhaseTerm<Scalar>> terms, Scalar scale) {
    for (const auto& t : terms) {
      if (t.exponent < 0) throw std::invalid_argument("phase term exponent must be non-negative");
      if (static_cast<std::size_t>(t.exponent) >= coeffs.size()) coeffs.resize(t.exponent + 1, Scalar(0));
      coeffs[t.exponent] += scale * t.amplitude_at_mean;
    }
  }

  Scalar value(Scalar w) const {
    Scalar acc = 0;
    for (std::size_t n = coeffs.size(); n-- > 0;) acc = acc * w + coeffs[n];
    return acc;
  }

  /// d phi / dw at w = m
  Scalar slope_at(Scalar m) const {
    Scalar k = 0;
    for (std::size_t n = 1; n < coeffs.size(); ++n) k += Scalar(n) * coeffs[n] * std::pow(m, Scalar(n - 1));
    return k;
  }

  /// phi(w) - slope_at(m) w, with exponent-1 terms dropped exactly
  Scalar remainder(Scalar w, Scalar m) const {
    Scalar acc = 0;
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
      if (n == 1 || coeffs[n] == Scalar(0)) continue;
      acc += coeffs[n] * (std::pow(w, Scalar(n)) - Scalar(n) * std::pow(m, Scalar(n) - 1) * w);
    }
    return acc;
  }
};

template <typename Scalar>
struct AverageResult {
  std::complex<Scalar> z;  // int P exp(i phi) dv
  Scalar mass;             // int P dv
  Scalar mean_phase;       // int P phi dv / mass
  std::complex<Scalar> tangent;  // int P psi exp(i phi) dv, when psi is given
};

/// Panel boundaries in v. Uniform, except that when the first uniform panel
/// would span more than a factor 2 in v (the support reaches far below u) it
/// is split geometrically with ratio <= 2; the panel count is kept.
template <typename Scalar>
std::vector<Scalar> panel_edges(const VelocitySupport<Scalar>& support, int panels) {
  const Scalar lo = support.v_min, span = support.v_max - support.v_min;
  int low = 1;
  for (int k = 1; k < panels; ++k) {
    const Scalar first_top = lo + span / Scalar(panels + 1 - k);
    low = std::max(1, static_cast<int>(std::ceil(std::log2(first_top / lo) - Scalar(1e-12))));
    if (low <= k) break;
  }
  low = std::min(low, panels / 2);
  const int uniform = panels + 1 - low;
  const Scalar h = span / Scalar(uniform);
  std::vector<Scalar> edges;
  edges.reserve(panels + 1);
  if (low > 1) {
    const Scalar ratio = std::pow((lo + h) / lo, Scalar(1) / Scalar(low));
    for (int p = 0; p < low; ++p) edges.push_back(lo * std::pow(ratio, Scalar(p)));
  } else {
    edges.push_back(lo);
  }
  for (int p = 1; p < uniform; ++p) edges.push_back(lo + Scalar(p) * h);
  edges.push_back(support.v_max);
  return edges;
}

/// One pass over the support with node_count nodes. psi, when given, is an
/// extra polynomial weight for the tangent integral.
template <typename Scalar>
AverageResult<Scalar> velocity_average(const PhasePolynomial<Scalar>& phase,
                                       const BeamModel<Scalar>& beam,
                                       const VelocitySupport<Scalar>& support, int node_count,
                                       const PhasePolynomial<Scalar>* psi = nullptr) {
  const std::vector<int> orders = panel_orders(node_count);
  const int panels = static_cast<int>(orders.size());
  const Scalar u = beam.u();
  const std::vector<Scalar> edges = panel_edges(support, panels);

  std::complex<Scalar> z{0, 0}, tangent{0, 0};
  Scalar mass = 0, first_moment = 0;
  for (int p = 0; p < panels; ++p) {
    const Scalar va = edges[p], vb = edges[p + 1];
    const Scalar wa = u / vb, wb = u / va;
    const Scalar mid = Scalar(0.5) * (wa + wb), half = Scalar(0.5) * (wb - wa);
    const Scalar kappa = phase.slope_at(mid);
    const auto rule = filon_panel_rule<Scalar>(orders[p]);
    const auto weights = filon_weights(*rule, kappa * half);

    std::complex<Scalar> panel{0, 0}, panel_tangent{0, 0};
    for (int j = 0; j < rule->order(); ++j) {
      const Scalar w = mid + half * rule->gl.nodes(j);
      const Scalar density = velocity_pdf(beam, u / w) * u / (w * w);
      const Scalar rho = phase.remainder(w, mid);
      const std::complex<Scalar> f = weights(j) * (density * std::complex<Scalar>(std::cos(rho), std::sin(rho)));
      panel += f;
      if (psi) panel_tangent += psi->value(w) * f;
      const Scalar plain = half * rule->gl.weights(j) * density;
      mass += plain;
      first_moment += plain * phase.value(w);
    }
    const Scalar shift = kappa * mid;
    const std::complex<Scalar> rotation = half * std::complex<Scalar>(std::cos(shift), std::sin(shift));
    z += rotation * panel;
    tangent += rotation * panel_tangent;
  }
  if (support.renormalize) {
    z /= mass;
    tangent /= mass;
  }
  return {z, mass, first_moment / mass, tangent};
}

template <typename Scalar>
Scalar principal(Scalar angle) {
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar r = std::remainder(angle, two_pi);
  if (r <= -std::numbers::pi_v<Scalar>) r += two_pi;
  return r;
}

template <typename Scalar>
struct UnwrapResult {
  std::complex<Scalar> z;
  Scalar phase;
};

/// Continuation in a common amplitude scale s from 0 to 1. With
/// Z(s) = int P exp(i s phi) dv the tangent is d arg Z / ds = Re(int P phi
/// exp(i s phi) dv / Z). A step is accepted when arg Z departs from the
/// trapezoid of the end tangents by less than pi/4 and the tangent itself
/// turns by less than pi/2 over the step; otherwise the step is halved.
template <typename Scalar>
UnwrapResult<Scalar> unwrap_by_continuation(std::span<const DispersivePhaseTerm<Scalar>> terms,
                                            const BeamModel<Scalar>& beam,
                                            const VelocitySupport<Scalar>& support) {
  const Scalar quarter_turn = std::numbers::pi_v<Scalar> / Scalar(4);
  const Scalar min_step = std::ldexp(Scalar(1), -24);
  const PhasePolynomial<Scalar> full(terms, Scalar(1));
  const auto sample = [&](Scalar s) {
    const auto r = velocity_average(PhasePolynomial<Scalar>(terms, s), beam, support, support.node_count, &full);
    return std::pair{r.z, std::real(r.tangent / r.z)};
  };

  Scalar s = 0, accumulated = 0, step = 1;
  auto [z_s, d_s] = sample(Scalar(0));
  Scalar arg_s = std::arg(z_s);
  while (s < Scalar(1)) {
    const Scalar t = std::min(Scalar(1), s + step);
    const auto [z_t, d_t] = sample(t);
    const Scalar arg_t = std::arg(z_t);
    const Scalar predicted = Scalar(0.5) * (t - s) * (d_s + d_t);
    const Scalar deviation = principal(arg_t - arg_s - predicted);
    const bool smooth = std::abs((t - s) * (d_t - d_s)) < Scalar(2) * quarter_turn;
    if ((smooth && std::abs(deviation) < quarter_turn) || step <= min_step) {
      accumulated += predicted + deviation;
      s = t;
      arg_s = arg_t;
      z_s = z_t;
      d_s = d_t;
      step = std::min(Scalar(1), step * Scalar(2));
    } else {
      step *= Scalar(0.5);
    }
  }
  return {z_s, accumulated};
}

}  // namespace detail

/// int P(v) exp(i sum phi(v)) dv without the v0 factor.
template <typename Scalar>
std::complex<Scalar> complex_average(TermSpan<Scalar> terms,
                                     const BeamModel<Scalar>& beam,
                                     const VelocitySupport<Scalar>& support) {
  support.validate(beam);
  return detail::velocity_average(detail::PhasePolynomial<Scalar>(terms, Scalar(1)), beam, support,
                                  support.node_count)
      .z;
}

/// P-weighted mean of the summed phase, the linear average that the fringe
/// phase is not.
template <typename Scalar>
Scalar linear_mean_phase(TermSpan<Scalar> terms,
                         const BeamModel<Scalar>& beam, const VelocitySupport<Scalar>& support) {
  support.validate(beam);
  return detail::velocity_average(detail::PhasePolynomial<Scalar>(terms, Scalar(1)), beam, support,
                                  support.node_count)
      .mean_phase;
}

/// |Z_N - Z_(2N-1)| for the support's node count N.
template <typename Scalar>
Scalar quadrature_doubling_error(TermSpan<Scalar> terms,
                                 const BeamModel<Scalar>& beam,
                                 const VelocitySupport<Scalar>& support) {
  support.validate(beam);
  const detail::PhasePolynomial<Scalar> phase(terms, Scalar(1));
  const auto coarse = detail::velocity_average(phase, beam, support, support.node_count).z;
  const auto fine = detail::velocity_average(phase, beam, support, 2 * support.node_count - 1).z;
  return std::abs(coarse - fine);
}

template <typename Scalar>
FringeObservable<Scalar> averaged_fringe(TermSpan<Scalar> terms,
                                         const BeamModel<Scalar>& beam, Scalar v0,
                                         const VelocitySupport<Scalar>& support, Scalar psi = 0) {
  if (!(v0 > Scalar(0) && v0 <= Scalar(1)))
    throw std::invalid_argument("averaged_fringe: v0 must lie in (0, 1]");
  support.validate(beam);

  const auto unwrapped = detail::unwrap_by_continuation(terms, beam, support);
  const auto fine = detail::velocity_average(detail::PhasePolynomial<Scalar>(terms, Scalar(1)), beam,
                                             support, 2 * support.node_count - 1)
                        .z;
  const Scalar change = v0 * std::abs(unwrapped.z - fine);
  if (!(change <= Scalar(kQuadratureTolerance))) {
    throw QuadratureError("averaged_fringe: quadrature not converged (doubling " +
                          std::to_string(support.node_count) + " nodes moves Z by " +
                          std::to_string(static_cast<double>(change)) + ")");
  }

  FringeObservable<Scalar> out;
  out.visibility = v0 * std::abs(unwrapped.z);
  out.phase = detail::principal(std::arg(unwrapped.z));
  out.unwrapped_phase = unwrapped.phase;
  out.v0_reference = v0;
  out.psi = psi;
  return out;
}

/// <phase(on)> - <phase(off)>: the difference of two fringe phase readings.
template <typename Scalar>
Scalar measured_phase_shift(TermSpan<Scalar> terms_on,
                            TermSpan<Scalar> terms_off,
                            const BeamModel<Scalar>& beam, Scalar v0,
                            const VelocitySupport<Scalar>& support) {
  return averaged_fringe(terms_on, beam, v0, support).unwrapped_phase -
         averaged_fringe(terms_off, beam, v0, support).unwrapped_phase;
}

/// <a + b> - <a> - <b>; zero only when averaging is linear.
template <typename Scalar>
Scalar non_additivity_gap(const DispersivePhaseTerm<Scalar>& a, const DispersivePhaseTerm<Scalar>& b,
                          const BeamModel<Scalar>& beam, Scalar v0,
                          const VelocitySupport<Scalar>& support) {
  const std::array<DispersivePhaseTerm<Scalar>, 2> both{a, b};
  const auto phase_of = [&](std::span<const DispersivePhaseTerm<Scalar>> terms) {
    return averaged_fringe(terms, beam, v0, support).unwrapped_phase;
  };
  return phase_of(both) - phase_of(std::span(&a, 1)) - phase_of(std::span(&b, 1));
}

template <typename Scalar>
Scalar visibility_ratio(TermSpan<Scalar> terms,
                        const BeamModel<Scalar>& beam, Scalar v0,
                        const VelocitySupport<Scalar>& support) {
  return averaged_fringe(terms, beam, v0, support).visibility / v0;
}

}  // namespace dispcomp

#endif  // DISPCOMP_FRINGE_HPP
