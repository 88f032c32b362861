#ifndef DISPCOMP_BEAM_HPP
#define DISPCOMP_BEAM_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dispcomp/constants.hpp"

namespace dispcomp {

/// Supersonic beam: mean velocity u (m/s) and parallel speed ratio
/// S = u / (sigma sqrt 2). The distribution is the effective one, i.e. the
/// incident beam already weighted by the interferometer transmission.
template <typename Scalar = double>
class BeamModel {
 public:
  BeamModel(Scalar u, Scalar s_parallel) : u_(u), s_parallel_(s_parallel) {
    if (!(u > Scalar(0)) || !std::isfinite(u))
      throw std::invalid_argument("beam: mean velocity must be positive");
    if (!(s_parallel > Scalar(1)) || !std::isfinite(s_parallel))
      throw std::invalid_argument("beam: parallel speed ratio must exceed 1");
  }

  Scalar u() const { return u_; }
  Scalar s_parallel() const { return s_parallel_; }
  /// RMS velocity spread about u.
  Scalar sigma() const { return u_ / (s_parallel_ * std::numbers::sqrt2_v<Scalar>); }

 private:
  Scalar u_;
  Scalar s_parallel_;
};

using Beam = BeamModel<double>;

/// Truncated velocity interval used for every velocity average, with the
/// total number of quadrature nodes.
template <typename Scalar = double>
struct VelocitySupport {
  Scalar v_min;
  Scalar v_max;
  int node_count = 257;
  /// Divide averages by the truncated mass of P(v). Off by default: the tail
  /// mass beyond 8 sigma is below 1e-14.
  bool renormalize = false;

  void validate(const BeamModel<Scalar>& beam) const {
    if (!(v_min > Scalar(0)) || !(v_min < beam.u()) || !(beam.u() < v_max))
      throw std::invalid_argument("velocity support must satisfy 0 < v_min < u < v_max");
    if (node_count < 32)
      throw std::invalid_argument("velocity support needs at least 32 nodes, got " +
                                  std::to_string(node_count));
  }
};

using Support = VelocitySupport<double>;

/// P(v) = S / (u sqrt(pi)) exp(-((v - u) S / u)^2), in s/m.
template <typename Scalar>
Scalar velocity_pdf(const BeamModel<Scalar>& beam, Scalar v) {
  if (!(v > Scalar(0))) throw std::domain_error("velocity_pdf: velocity must be positive");
  using std::exp;
  using std::sqrt;
  const Scalar s = beam.s_parallel();
  const Scalar x = (v - beam.u()) * s / beam.u();
  return s / (beam.u() * sqrt(constants::pi<Scalar>)) * exp(-x * x);
}

/// u +/- width_sigmas * sigma, with v_min clamped to u * 1e-3 so u / v stays
/// bounded.
template <typename Scalar>
VelocitySupport<Scalar> default_support(const BeamModel<Scalar>& beam,
                                        Scalar width_sigmas = Scalar(8), int node_count = 257) {
  if (!(width_sigmas > Scalar(0)))
    throw std::invalid_argument("default_support: width must be positive");
  const Scalar half = width_sigmas * beam.sigma();
  VelocitySupport<Scalar> support;
  support.v_min = std::max(beam.u() - half, beam.u() * Scalar(1e-3));
  support.v_max = beam.u() + half;
  support.node_count = node_count;
  return support;
}

}  // namespace dispcomp

#endif  // DISPCOMP_BEAM_HPP
