#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/field.hpp"
#include "fpk/grid.hpp"
#include "fpk/semigroup.hpp"

namespace fpk {

/// Orlicz/Luxemburg evaluation context: the exponent alpha of the Orlicz
/// function u (log(u+1))^alpha and a bisection bracket for the gauge.
struct OrliczContext {
  double alpha = 0.2;
  std::shared_ptr<const QuadratureGrid> grid;
  double s_lo = 1e-8;
  double s_hi = 1e8;

  void validate() const {
    if (!(alpha > 0.0) || alpha > 0.5)
      throw ArgumentError("OrliczContext: alpha must lie in (0, 1/2]");
    if (!(s_lo > 0.0) || !(s_lo < s_hi)) throw ArgumentError("OrliczContext: bad bracket");
    if (!grid) throw ArgumentError("OrliczContext: missing grid");
  }
};

namespace detail {
inline void check_nonneg(const std::vector<double>& f) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!(f[i] >= -1e-12) || !std::isfinite(f[i]))
      throw ArgumentError("entropy: negative or non-finite nodal value at index " +
                          std::to_string(i));
}
}  // namespace detail

/// int f (log(f+1))^alpha d gamma for nodal values f >= 0.
inline double entropy_alpha(const std::vector<double>& f, const QuadratureGrid& grid,
                            double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("entropy_alpha: alpha must be positive");
  if (f.size() != grid.size()) throw ArgumentError("entropy_alpha: size mismatch");
  detail::check_nonneg(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::max(0.0, f[i]);
    if (v > 0.0) acc += grid.weights[i] * v * std::pow(std::log1p(v), alpha);
  }
  return acc;
}

inline double entropy_alpha(const ScalarField& f, const QuadratureGrid& grid, double alpha) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.nodes[i]);
  return entropy_alpha(v, grid, alpha);
}

/// J_t(g) = int (T_t g) (log(T_t g + 1))^{1/2} d gamma.
inline double entropy_sqrt_J(const ScalarField& g, double t, const QuadratureGrid& grid,
                             int inner_order = 40) {
  if (t < 0.0 || t > 1.0) throw ArgumentError("entropy_sqrt_J: t must lie in [0, 1]");
  SemigroupParams p{t, inner_order, std::nullopt};
  const std::vector<double> tg = apply_Tt_values(g, p, grid);
  return entropy_alpha(tg, grid, 0.5);
}

/// Luxemburg gauge ||g||_L = inf{ s > 0 : int (g/s)(log(g/s+1))^alpha <= 1 }.
/// The defining integral is strictly decreasing in s, so the infimum is the
/// root of I(s) = 1, found by bisection with bracket auto-expansion.
inline double luxemburg_norm(const std::vector<double>& g, const OrliczContext& ctx) {
  ctx.validate();
  if (g.size() != ctx.grid->size()) throw ArgumentError("luxemburg_norm: size mismatch");
  detail::check_nonneg(g);
  bool all_zero = true;
  for (double v : g)
    if (v > 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) return 0.0;

  const auto I = [&](double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = std::max(0.0, g[i]) / s;
      if (v > 0.0) acc += ctx.grid->weights[i] * v * std::pow(std::log1p(v), ctx.alpha);
    }
    return acc;
  };

  double lo = ctx.s_lo, hi = ctx.s_hi;
  int expand = 0;
  while (I(lo) < 1.0) {
    lo /= 10.0;
    if (++expand > 6) return lo;  // gauge below bracket resolution: lo is a
                                  // certified upper bound (I(lo) <= 1)
  }
  expand = 0;
  while (I(hi) > 1.0) {
    hi *= 10.0;
    if (++expand > 6)
      throw BracketError("luxemburg_norm: upper bracket failed to straddle the gauge "
                         "(integral may be infinite)");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (I(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double luxemburg_norm(const ScalarField& g, const OrliczContext& ctx) {
  std::vector<double> v(ctx.grid->size());
  for (std::size_t i = 0; i < ctx.grid->size(); ++i) v[i] = g(ctx.grid->nodes[i]);
  return luxemburg_norm(v, ctx);
}

/// The Hoelder interpolation bound (int g)^{1-2a} (int g (log(g+1))^{1/2})^{2a}.
inline double holder_interpolation_bound(double int_g, double int_g_sqrt, double alpha) {
  if (int_g < 0.0 || int_g_sqrt < 0.0)
    throw ArgumentError("holder_interpolation_bound: inputs must be nonnegative");
  if (!(alpha > 0.0) || !(alpha < 0.5))
    throw ArgumentError("holder_interpolation_bound: alpha must lie in (0, 1/2)");
  if (int_g == 0.0) return 0.0;
  return std::pow(int_g, 1.0 - 2.0 * alpha) * std::pow(int_g_sqrt, 2.0 * alpha);
}

/// gamma(x : f(x) > lambda) as the quadrature mass of the super-level set.
inline double tail_distribution(const std::vector<double>& f, const QuadratureGrid& grid,
                                double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("tail_distribution: lambda must be positive");
  if (f.size() != grid.size()) throw ArgumentError("tail_distribution: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > lambda) acc += grid.weights[i];
  return acc;
}

}  // namespace fpk
