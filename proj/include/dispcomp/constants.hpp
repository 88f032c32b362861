#ifndef DISPCOMP_CONSTANTS_HPP
#define DISPCOMP_CONSTANTS_HPP

#include <numbers>

namespace dispcomp::constants {

/// Vacuum permittivity, F/m (CODATA 2018: 8.854187813e-12).
template <typename Scalar = double>
inline constexpr Scalar epsilon0 = Scalar(8.8541878128e-12);

/// Reduced Planck constant, J s (CODATA 2018: 1.054571817e-34, exact).
template <typename Scalar = double>
inline constexpr Scalar hbar = Scalar(1.054571817e-34);

/// Sidereal rotation rate of the Earth, rad/s.
template <typename Scalar = double>
inline constexpr Scalar earth_rotation_rate = Scalar(7.2921e-5);

template <typename Scalar = double>
inline constexpr Scalar pi = std::numbers::pi_v<Scalar>;

}  // namespace dispcomp::constants

#endif  // DISPCOMP_CONSTANTS_HPP
