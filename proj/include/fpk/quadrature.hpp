#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fpk/common.hpp"

namespace fpk {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the weight exp(-x^2/2)/sqrt(2*pi), i.e. quadrature
/// against the standard Gaussian measure with unit variance. Nodes and
/// weights come from the Golub-Welsch eigen decomposition of the Jacobi
/// matrix of the probabilists' Hermite recurrence (off-diagonal sqrt(k)),
/// which is stable up to order ~200.
inline Rule1D gauss_hermite_prob(int order) {
  if (order < 1) throw ArgumentError("gauss_hermite_prob: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw NumericError("gauss_hermite_prob: eigen decomposition failed");
  Rule1D r;
  r.nodes.resize(order);
  r.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = v0 * v0;  // total mass of the weight is 1
  }
  // Eigenvalues are sorted; enforce exact +/- symmetry of the rule.
  for (int i = 0, j = order - 1; i < j; ++i, --j) {
    const double x = 0.5 * (r.nodes[j] - r.nodes[i]);
    r.nodes[i] = -x;
    r.nodes[j] = x;
    const double w = 0.5 * (r.weights[i] + r.weights[j]);
    r.weights[i] = w;
    r.weights[j] = w;
  }
  if (order % 2 == 1) r.nodes[order / 2] = 0.0;
  double s = 0.0;
  for (double w : r.weights) s += w;
  for (double& w : r.weights) w /= s;
  return r;
}

/// Gauss-Legendre rule on [a, b] (Golub-Welsch on the Legendre Jacobi matrix).
inline Rule1D gauss_legendre(int order, double a, double b) {
  if (order < 1) throw ArgumentError("gauss_legendre: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double kk = static_cast<double>(k);
    const double beta = kk / std::sqrt(4.0 * kk * kk - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw NumericError("gauss_legendre: eigen decomposition failed");
  Rule1D r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    r.nodes[i] = mid + half * es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = 2.0 * v0 * v0 * half;
  }
  return r;
}

/// Adaptive Simpson integration of a smooth scalar function.
namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol = 1e-12, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

/// Natural cubic spline on arbitrary strictly increasing nodes, with constant
/// extrapolation beyond the endpoints.
class CubicSpline1D {
 public:
  CubicSpline1D() = default;
  CubicSpline1D(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || n != y_.size()) throw ArgumentError("CubicSpline1D: need >= 2 nodes");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // Tridiagonal system for second derivatives (natural boundary).
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    // Thomas algorithm on rows 1..n-2.
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (d[i] - c[i] * (i + 2 < n ? m_[i + 1] : 0.0)) / b[i];
      if (i == 1) break;
    }
  }

  double operator()(double t) const {
    const std::size_t n = x_.size();
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    const std::size_t lo = hi - 1;
    const double h = x_[hi] - x_[lo];
    const double A = (x_[hi] - t) / h, B = (t - x_[lo]) / h;
    return A * y_[lo] + B * y_[hi] +
           ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[hi]) * h * h / 6.0;
  }

  bool inside(double t) const { return t >= x_.front() && t <= x_.back(); }

 private:
  std::vector<double> x_, y_, m_;
};

/// Separable Catmull-Rom interpolation on a uniform axis grid (1-3 D) with
/// clamped (constant) extrapolation. Used for densities produced by the grid
/// solver, whose nodes are uniformly spaced cell centers.
class UniformCubicInterp {
 public:
  UniformCubicInterp() = default;
  UniformCubicInterp(int dim, std::array<std::vector<double>, 3> axis_nodes,
                     std::vector<double> values)
      : dim_(dim), axis_(std::move(axis_nodes)), v_(std::move(values)) {
    std::size_t total = 1;
    for (int a = 0; a < dim_; ++a) {
      n_[a] = axis_[a].size();
      if (n_[a] < 4) throw ArgumentError("UniformCubicInterp: need >= 4 nodes per axis");
      h_[a] = axis_[a][1] - axis_[a][0];
      total *= n_[a];
    }
    if (v_.size() != total) throw ArgumentError("UniformCubicInterp: value count mismatch");
  }

  double operator()(const Pt& p) const {
    std::array<std::array<double, 4>, 3> wts{};
    std::array<std::ptrdiff_t, 3> base{};
    for (int a = 0; a < dim_; ++a) {
      double u = (p[a] - axis_[a].front()) / h_[a];
      // clamp so the 4-point stencil exists; clamping also yields constant
      // extrapolation toward the boundary value
      u = std::clamp(u, 1.0, static_cast<double>(n_[a] - 3));
      std::ptrdiff_t i = static_cast<std::ptrdiff_t>(std::floor(u));
      i = std::clamp<std::ptrdiff_t>(i, 1, static_cast<std::ptrdiff_t>(n_[a]) - 3);
      const double s = u - static_cast<double>(i);
      base[a] = i - 1;
      wts[a] = {-0.5 * s * (1 - s) * (1 - s),
                1.0 + s * s * (1.5 * s - 2.5),
                s * (0.5 + s * (2.0 - 1.5 * s)),
                0.5 * s * s * (s - 1.0)};
    }
    // remaining axes collapse to a single cell for dim < 3
    const int d = dim_;
    double acc = 0.0;
    const std::ptrdiff_t s1 = (d >= 2) ? static_cast<std::ptrdiff_t>(n_[1]) : 1;
    const std::ptrdiff_t s2 = (d >= 3) ? static_cast<std::ptrdiff_t>(n_[2]) : 1;
    const int r0 = 4, r1 = (d >= 2) ? 4 : 1, r2 = (d >= 3) ? 4 : 1;
    for (int i0 = 0; i0 < r0; ++i0) {
      const double w0 = wts[0][i0];
      for (int i1 = 0; i1 < r1; ++i1) {
        const double w01 = w0 * ((d >= 2) ? wts[1][i1] : 1.0);
        for (int i2 = 0; i2 < r2; ++i2) {
          const double w = w01 * ((d >= 3) ? wts[2][i2] : 1.0);
          const std::ptrdiff_t idx =
              ((base[0] + i0) * s1 + ((d >= 2) ? base[1] + i1 : 0)) * s2 +
              ((d >= 3) ? base[2] + i2 : 0);
          acc += w * v_[static_cast<std::size_t>(idx)];
        }
      }
    }
    return acc;
  }

  bool inside(const Pt& p) const {
    for (int a = 0; a < dim_; ++a)
      if (p[a] < axis_[a].front() || p[a] > axis_[a].back()) return false;
    return true;
  }

 private:
  int dim_ = 0;
  std::array<std::vector<double>, 3> axis_{};
  std::vector<double> v_;
  std::array<std::size_t, 3> n_{};
  std::array<double, 3> h_{};
};

}  // namespace fpk
