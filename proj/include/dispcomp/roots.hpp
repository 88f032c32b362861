#ifndef DISPCOMP_ROOTS_HPP
#define DISPCOMP_ROOTS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace dispcomp {

class RootNotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct RootResult {
  Scalar x;
  Scalar fx;
  int evaluations;
  bool converged;
};

/// Brent's method on [a, b] with f(a), f(b) of opposite sign. Stops when
/// |f| <= ftol or the bracket is narrower than xtol.
template <typename Scalar, typename F>
RootResult<Scalar> brent_root(F&& f, Scalar a, Scalar b, Scalar fa, Scalar fb, Scalar xtol, Scalar ftol,
                              int max_iterations = 200) {
  if (fa == Scalar(0)) return {a, fa, 0, true};
  if (fb == Scalar(0)) return {b, fb, 0, true};
  if ((fa > 0) == (fb > 0)) throw RootNotBracketed("brent_root: f(a) and f(b) have the same sign");

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar c = a, fc = fa, d = b - a, e = d;
  int evaluations = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const Scalar tol = Scalar(2) * eps * std::abs(b) + Scalar(0.5) * xtol;
    const Scalar m = Scalar(0.5) * (c - b);
    if (std::abs(fb) <= ftol || std::abs(m) <= tol) return {b, fb, evaluations, true};

    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic interpolation, secant when only two points differ
      Scalar p, q;
      const Scalar s = fb / fa;
      if (a == c) {
        p = Scalar(2) * m * s;
        q = Scalar(1) - s;
      } else {
        const Scalar qa = fa / fc, r = fb / fc;
        p = s * (Scalar(2) * m * qa * (qa - r) - (b - a) * (r - Scalar(1)));
        q = (qa - Scalar(1)) * (r - Scalar(1)) * (s - Scalar(1));
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (Scalar(2) * p < std::min(Scalar(3) * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    ++evaluations;
  }
  return {b, fb, evaluations, false};
}

/// Grows [x0 - step, x0 + step] geometrically until f changes sign.
template <typename Scalar, typename F>
std::pair<Scalar, Scalar> expand_bracket(F&& f, Scalar x0, Scalar step, Scalar& f_lo, Scalar& f_hi,
                                         int max_expansions = 60) {
  Scalar lo = x0 - step, hi = x0 + step;
  f_lo = f(lo);
  f_hi = f(hi);
  for (int i = 0; i < max_expansions; ++i) {
    if ((f_lo > 0) != (f_hi > 0) || f_lo == Scalar(0) || f_hi == Scalar(0)) return {lo, hi};
    step *= Scalar(2);
    if (std::abs(f_lo) < std::abs(f_hi)) {
      lo = x0 - step;
      f_lo = f(lo);
    } else {
      hi = x0 + step;
      f_hi = f(hi);
    }
  }
  throw RootNotBracketed("expand_bracket: no sign change found");
}

}  // namespace dispcomp

#endif  // DISPCOMP_ROOTS_HPP
