#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/drifts.hpp"
#include "fpk/field.hpp"
#include "fpk/grid.hpp"

namespace fpk {

/// Parameters of one semigroup application. `inner_order` is the per-axis
/// Gauss-Hermite order of the Mehler integral; `B` selects the T_t^B variant.
struct SemigroupParams {
  double t = 0.0;
  int inner_order = 40;
  std::optional<GaussianSpec> B;

  void validate() const {
    if (t < 0.0) throw ArgumentError("SemigroupParams: t must be >= 0");
    if (inner_order < 2) throw ArgumentError("SemigroupParams: inner_order must be >= 2");
  }
};

namespace detail {

struct MehlerKernel {
  int dim;
  double decay;                                  // e^{-t} (scalar case)
  double spread;                                 // sqrt(1 - e^{-2t})
  std::shared_ptr<const QuadratureGrid> inner;   // y-nodes, standard gamma
  // Matrix variant (T_t^B); empty when B is the identity.
  bool matrix = false;
  Eigen::MatrixXd E;   // e^{-tB}
  Eigen::MatrixXd S;   // (I - e^{-2tB})^{1/2}

  Pt displaced(const Pt& x, const Pt& y) const {
    Pt z{0, 0, 0};
    if (!matrix) {
      for (int a = 0; a < dim; ++a) z[a] = decay * x[a] - spread * y[a];
    } else {
      for (int a = 0; a < dim; ++a) {
        double s = 0.0;
        for (int b = 0; b < dim; ++b) s += E(a, b) * x[b] - S(a, b) * y[b];
        z[a] = s;
      }
    }
    return z;
  }
};

inline MehlerKernel make_kernel(int dim, const SemigroupParams& p) {
  p.validate();
  MehlerKernel k;
  k.dim = dim;
  k.decay = std::exp(-p.t);
  k.spread = std::sqrt(std::max(0.0, 1.0 - k.decay * k.decay));
  if (p.B && !p.B->is_identity()) {
    const GaussianSpec& spec = *p.B;
    if (spec.dim() != dim) throw ArgumentError("apply_Tt_B: dimension mismatch");
    k.matrix = true;
    const Eigen::VectorXd& lam = spec.eigenvalues();
    const Eigen::MatrixXd& Q = spec.eigenvectors();
    Eigen::VectorXd de(dim), ds(dim);
    for (int i = 0; i < dim; ++i) {
      de(i) = std::exp(-p.t * lam(i));
      ds(i) = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * p.t * lam(i))));
    }
    k.E = Q * de.asDiagonal() * Q.transpose();
    k.S = Q * ds.asDiagonal() * Q.transpose();
    k.inner = build_gaussian_grid(spec, p.inner_order,
                                  GridKind::GaussHermiteTensor);
  } else {
    k.inner = build_grid(dim, p.inner_order, GridKind::GaussHermiteTensor);
  }
  return k;
}

}  // namespace detail

/// T_t f at a single point by Mehler quadrature.
inline double apply_Tt_at(const ScalarField& f, const SemigroupParams& params, const Pt& x) {
  params.validate();
  if (params.t == 0.0) return f(x);
  const auto k = detail::make_kernel(f.dim(), params);
  double acc = 0.0;
  for (std::size_t j = 0; j < k.inner->size(); ++j)
    acc += k.inner->weights[j] * f(k.displaced(x, k.inner->nodes[j]));
  return acc;
}

/// Nodal values of T_t f on `eval_grid`. t = 0 short-circuits to f itself.
inline std::vector<double> apply_Tt_values(const ScalarField& f, const SemigroupParams& params,
                                           const QuadratureGrid& eval_grid) {
  params.validate();
  std::vector<double> out(eval_grid.size());
  if (params.t == 0.0) {
    for (std::size_t i = 0; i < eval_grid.size(); ++i) out[i] = f(eval_grid.nodes[i]);
    return out;
  }
  const auto k = detail::make_kernel(f.dim(), params);
  for (std::size_t i = 0; i < eval_grid.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k.inner->size(); ++j)
      acc += k.inner->weights[j] * f(k.displaced(eval_grid.nodes[i], k.inner->nodes[j]));
    out[i] = acc;
  }
  return out;
}

/// T_t f as a lazily evaluated field (each call performs the Mehler integral).
inline ScalarField apply_Tt(const ScalarField& f, const SemigroupParams& params) {
  params.validate();
  if (params.t == 0.0) return f;
  const auto k = std::make_shared<detail::MehlerKernel>(detail::make_kernel(f.dim(), params));
  auto base = std::make_shared<ScalarField>(f);
  return ScalarField(f.dim(), [k, base](const Pt& x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k->inner->size(); ++j)
      acc += k->inner->weights[j] * (*base)(k->displaced(x, k->inner->nodes[j]));
    return acc;
  });
}

/// Convenience overload for densities.
inline std::vector<double> apply_Tt_values(const DensityFn& f, const SemigroupParams& params) {
  return apply_Tt_values(f.form, params, *f.grid);
}

enum class GradPath { Auto, Identity, Kernel };

/// Gradient of T_t phi at a point. The identity path uses
/// grad T_t phi = e^{-t} T_t grad phi and requires a gradient on phi; the
/// kernel path multiplies by the Gaussian score <h, y> inside the Mehler
/// integral and works for any bounded phi when t > 0.
inline Pt grad_Tt_at(const ScalarField& phi, const SemigroupParams& params, const Pt& x,
                     GradPath path = GradPath::Auto) {
  params.validate();
  if (params.t == 0.0) {
    if (!phi.has_gradient())
      throw UnsupportedInputError("grad_Tt: t = 0 requires a differentiable field");
    return phi.gradient(x);
  }
  if (path == GradPath::Auto) path = phi.has_gradient() ? GradPath::Identity : GradPath::Kernel;
  const auto k = detail::make_kernel(phi.dim(), params);
  Pt g{0, 0, 0};
  if (path == GradPath::Identity) {
    if (!phi.has_gradient())
      throw UnsupportedInputError("grad_Tt: identity path requires a gradient");
    for (std::size_t j = 0; j < k.inner->size(); ++j) {
      const Pt gv = phi.gradient(k.displaced(x, k.inner->nodes[j]));
      for (int a = 0; a < phi.dim(); ++a) g[a] += k.inner->weights[j] * gv[a];
    }
    if (!k.matrix) {
      for (int a = 0; a < phi.dim(); ++a) g[a] *= k.decay;
    } else {
      Pt h{0, 0, 0};
      for (int a = 0; a < phi.dim(); ++a) {
        double s = 0.0;
        for (int b = 0; b < phi.dim(); ++b) s += k.E(b, a) * g[b];
        h[a] = s;
      }
      g = h;
    }
    return g;
  }
  // Kernel path; the sign matches the displaced argument e^{-t}x - spread*y
  // (validated against the identity path and against d/dx T_t x = e^{-t}).
  if (k.matrix)
    throw UnsupportedInputError("grad_Tt: kernel path implemented for the standard semigroup");
  const double c = -k.decay / k.spread;
  for (std::size_t j = 0; j < k.inner->size(); ++j) {
    const double v = phi(k.displaced(x, k.inner->nodes[j]));
    for (int a = 0; a < phi.dim(); ++a)
      g[a] += k.inner->weights[j] * v * k.inner->nodes[j][a] * c;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Regularized gamma-divergence T_s div_gamma u.
// ---------------------------------------------------------------------------

/// The smoothed divergence T_s div_gamma u realized by direct kernel
/// evaluation,
///   (T_s div_gamma u)(x) = -e^{-s} <x, (T_s u)(x)>
///                          - e^{-2s} (1-e^{-2s})^{-1/2} I(x),
///   I(x) = int <u(e^{-s}x - sqrt(1-e^{-2s}) y), y> gamma(dy),
/// which reproduces T_s(div u - <., u>) for smooth u and satisfies the weak
/// identity against -e^{-s} <grad phi, T_s u> for merely integrable u.
struct RegularizedDivergence {
  double s = 0.0;
  std::shared_ptr<const QuadratureGrid> grid;
  std::vector<double> values;   // nodal values of T_s div_gamma u
  double l1_norm = 0.0;         // int |T_s div_gamma u| d gamma
  double mean = 0.0;            // int T_s div_gamma u d gamma (should vanish)
  double u_l1 = 0.0;            // ||u||_{L^1(gamma)} on the grid
  ScalarField field;            // off-grid evaluator
};

inline double regularized_divergence_at(const VectorField& u, double s, const Pt& x,
                                        const detail::MehlerKernel& k) {
  const int dim = u.dim();
  const double e = k.decay;
  Pt tsu{0, 0, 0};
  double cross = 0.0;
  for (std::size_t j = 0; j < k.inner->size(); ++j) {
    const Pt& y = k.inner->nodes[j];
    const Pt uv = u(k.displaced(x, y));
    const double w = k.inner->weights[j];
    for (int a = 0; a < dim; ++a) tsu[a] += w * uv[a];
    cross += w * dot(uv, y, dim);
  }
  (void)s;
  return -e * dot(x, tsu, dim) - e * e / k.spread * cross;
}

inline RegularizedDivergence regularized_divergence(const DriftField& u, double s,
                                                    std::shared_ptr<const QuadratureGrid> grid,
                                                    int inner_order = 40) {
  if (!(s > 0.0))
    throw ArgumentError("regularized_divergence: s must be positive (the distributional "
                        "divergence at s = 0 is not representable)");
  SemigroupParams p{s, inner_order, std::nullopt};
  const auto k = detail::make_kernel(u.dim, p);
  RegularizedDivergence out;
  out.s = s;
  out.grid = grid;
  out.values.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i)
    out.values[i] = regularized_divergence_at(u.eval, s, grid->nodes[i], k);
  double l1 = 0.0, mean = 0.0, ul1 = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    l1 += grid->weights[i] * std::abs(out.values[i]);
    mean += grid->weights[i] * out.values[i];
    ul1 += grid->weights[i] * u.magnitude(grid->nodes[i]);
  }
  out.l1_norm = l1;
  out.mean = mean;
  out.u_l1 = ul1;
  auto kk = std::make_shared<detail::MehlerKernel>(k);
  auto uu = std::make_shared<VectorField>(u.eval);
  out.field = ScalarField(u.dim, [kk, uu, s](const Pt& x) {
    return regularized_divergence_at(*uu, s, x, *kk);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Duhamel reconstruction and the time-averaged operator A_t.
// ---------------------------------------------------------------------------

/// int_0^t T_s div_gamma(f v) ds with the substitution s = tau^2, which turns
/// the s^{-1/2} endpoint growth of the integrand into a bounded function.
/// Returns nodal values on f's grid.
inline std::vector<double> duhamel_reconstruct(const DensityFn& f, const DriftField& v, double t,
                                               int tau_nodes = 24, int inner_order = 40) {
  if (!(t > 0.0)) throw ArgumentError("duhamel_reconstruct: t must be positive");
  const int dim = f.grid->dim;
  VectorField w(dim, [&f, &v, dim](const Pt& p) {
    const double fv = f.eval(p);
    Pt out = v(p);
    for (int a = 0; a < dim; ++a) out[a] *= fv;
    return out;
  });
  const Rule1D tau = gauss_legendre(tau_nodes, 0.0, std::sqrt(t));
  std::vector<double> acc(f.grid->size(), 0.0);
  for (int q = 0; q < tau_nodes; ++q) {
    const double s = tau.nodes[q] * tau.nodes[q];
    const double wq = tau.weights[q] * 2.0 * tau.nodes[q];
    SemigroupParams p{s, inner_order, std::nullopt};
    const auto k = detail::make_kernel(dim, p);
    for (std::size_t i = 0; i < f.grid->size(); ++i)
      acc[i] += wq * regularized_divergence_at(w, s, f.grid->nodes[i], k);
  }
  return acc;
}

/// A_t f = (1/t) int_0^t T_s f ds by Gauss-Legendre in s.
inline std::vector<double> apply_At_values(const DensityFn& f, double t, int s_nodes = 16,
                                           int inner_order = 40) {
  if (!(t > 0.0)) throw ArgumentError("apply_At: t must be positive");
  const Rule1D sg = gauss_legendre(s_nodes, 0.0, t);
  std::vector<double> acc(f.grid->size(), 0.0);
  for (int q = 0; q < s_nodes; ++q) {
    SemigroupParams p{sg.nodes[q], inner_order, std::nullopt};
    const std::vector<double> tv = apply_Tt_values(f.form, p, *f.grid);
    for (std::size_t i = 0; i < f.grid->size(); ++i) acc[i] += sg.weights[q] / t * tv[i];
  }
  return acc;
}

}  // namespace fpk
