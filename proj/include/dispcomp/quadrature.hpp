#ifndef DISPCOMP_QUADRATURE_HPP
#define DISPCOMP_QUADRATURE_HPP

// Fixed-node Gauss-Legendre panels with Filon-type weights.
//
// On a panel mapped to t in [-1, 1], a smooth amplitude g(t) is replaced by
// its interpolant on the m Gauss-Legendre nodes and the product with
// exp(i theta t) is integrated exactly. Expanding the Lagrange basis in
// Legendre polynomials and using
//
//     int_{-1}^{1} P_k(t) exp(i theta t) dt = 2 i^k j_k(theta)
//
// gives the node weights W_j(theta) = sum_k (2k + 1) w_j P_k(t_j) i^k j_k(theta).
// At theta = 0 they reduce to the plain Gauss-Legendre weights.

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace dispcomp {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct GaussLegendreRule {
  ArrayX<Scalar> nodes;    // ascending, in (-1, 1)
  ArrayX<Scalar> weights;
};

/// m-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_m.
template <typename Scalar = double>
GaussLegendreRule<Scalar> gauss_legendre(int m) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  GaussLegendreRule<Scalar> rule{ArrayX<Scalar>(m), ArrayX<Scalar>(m)};
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (m + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(m) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_m(x), p0 = P_{m-1}(x)
      dp = Scalar(m) * (x * p1 - p0) / (x * x - Scalar(1));
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= std::numeric_limits<Scalar>::epsilon()) break;
    }
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
    rule.nodes(m - 1 - i) = x;
    rule.weights(m - 1 - i) = w;
    rule.nodes(i) = -x;
    rule.weights(i) = w;
  }
  if (m % 2 == 1) rule.nodes(m / 2) = Scalar(0);
  return rule;
}

/// Spherical Bessel functions j_0 .. j_kmax at x. Upward recurrence where it
/// is stable (x > kmax), Miller's downward recurrence otherwise.
template <typename Scalar = double>
ArrayX<Scalar> spherical_bessel_j(Scalar x, int kmax) {
  ArrayX<Scalar> j = ArrayX<Scalar>::Zero(kmax + 1);
  if (x < Scalar(0)) {
    j = spherical_bessel_j(-x, kmax);
    for (int k = 1; k <= kmax; k += 2) j(k) = -j(k);
    return j;
  }
  if (x == Scalar(0)) {
    j(0) = 1;
    return j;
  }
  const Scalar s = std::sin(x), c = std::cos(x);
  if (x > Scalar(kmax)) {
    j(0) = s / x;
    if (kmax >= 1) j(1) = s / (x * x) - c / x;
    for (int k = 1; k < kmax; ++k) j(k + 1) = Scalar(2 * k + 1) / x * j(k) - j(k - 1);
    return j;
  }
  const int start = kmax + 20 + static_cast<int>(x);
  Scalar f_next = 0, f = Scalar(1e-30);
  Scalar norm = 0;
  for (int k = start; k >= 0; --k) {
    if (k <= kmax) j(k) = f;
    norm += Scalar(2 * k + 1) * f * f;
    const Scalar f_prev = Scalar(2 * k + 1) / x * f - f_next;
    f_next = f;
    f = f_prev;
    if (std::abs(f) > Scalar(1e100)) {
      f *= Scalar(1e-100);
      f_next *= Scalar(1e-100);
      j *= Scalar(1e-100);
      norm *= Scalar(1e-200);
    }
  }
  // sum_k (2k + 1) j_k^2 = 1 fixes the magnitude; j_0 or j_1 fixes the sign
  Scalar scale = Scalar(1) / std::sqrt(norm);
  const Scalar j0 = s / x;
  const Scalar j1 = s / (x * x) - c / x;
  const bool flip = std::abs(j0) > Scalar(1e-3) ? (j0 * j(0) < 0)
                                                 : (kmax >= 1 && j1 * j(1) < 0);
  if (flip) scale = -scale;
  return j * scale;
}

/// Per-order tables for the Filon-Gauss-Legendre panel rule.
template <typename Scalar>
struct FilonPanelRule {
  GaussLegendreRule<Scalar> gl;
  /// (k, j) entry: (2k + 1) w_j P_k(t_j)
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> legendre;

  int order() const { return static_cast<int>(gl.nodes.size()); }
};

template <typename Scalar>
FilonPanelRule<Scalar> make_filon_panel_rule(int m) {
  FilonPanelRule<Scalar> rule{gauss_legendre<Scalar>(m), {}};
  rule.legendre.resize(m, m);
  for (int j = 0; j < m; ++j) {
    const Scalar t = rule.gl.nodes(j);
    Scalar p0 = 1, p1 = t;
    for (int k = 0; k < m; ++k) {
      Scalar pk;
      if (k == 0) {
        pk = 1;
      } else if (k == 1) {
        pk = t;
      } else {
        const Scalar p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
        pk = p2;
      }
      rule.legendre(k, j) = Scalar(2 * k + 1) * rule.gl.weights(j) * pk;
    }
  }
  return rule;
}

/// Shared read-only rule of order m, built on first use.
template <typename Scalar = double>
std::shared_ptr<const FilonPanelRule<Scalar>> filon_panel_rule(int m) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const FilonPanelRule<Scalar>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[m];
  if (!slot) slot = std::make_shared<const FilonPanelRule<Scalar>>(make_filon_panel_rule<Scalar>(m));
  return slot;
}

/// Weights W_j with sum_j W_j g(t_j) ~ int_{-1}^{1} g(t) exp(i theta t) dt.
template <typename Scalar>
Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> filon_weights(
    const FilonPanelRule<Scalar>& rule, Scalar theta) {
  const int m = rule.order();
  const ArrayX<Scalar> jk = spherical_bessel_j(theta, m - 1);
  // i^k j_k split into real (even k) and imaginary (odd k) parts
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> re(m), im(m);
  for (int k = 0; k < m; ++k) {
    const Scalar sign = (k % 4 < 2) ? Scalar(1) : Scalar(-1);
    re(k) = (k % 2 == 0) ? sign * jk(k) : Scalar(0);
    im(k) = (k % 2 == 1) ? sign * jk(k) : Scalar(0);
  }
  Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> w(m);
  const auto wr = (rule.legendre.transpose() * re).eval();
  const auto wi = (rule.legendre.transpose() * im).eval();
  for (int j = 0; j < m; ++j) w(j) = {wr(j), wi(j)};
  return w;
}

/// Splits node_count into panels of 15 or 16 nodes each (the first
/// node_count mod panels panels get the extra node).
inline std::vector<int> panel_orders(int node_count, int target_order = 16) {
  if (node_count < 2 || target_order < 2)
    throw std::invalid_argument("panel_orders: need at least two nodes");
  const int panels = (node_count + target_order - 1) / target_order;
  std::vector<int> orders(panels, node_count / panels);
  for (int i = 0; i < node_count % panels; ++i) ++orders[i];
  return orders;
}

}  // namespace dispcomp

#endif  // DISPCOMP_QUADRATURE_HPP
