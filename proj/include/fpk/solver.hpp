#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/drifts.hpp"
#include "fpk/field.hpp"
#include "fpk/grid.hpp"
#include "fpk/quadrature.hpp"

namespace fpk {

/// A stationary solution mu = f . gamma_B of the perturbed equation with
/// drift b(x) = -Bx + v(x) (B = I in the standard case).
struct StationarySolution {
  DensityFn f;
  DriftField v;
  double v_l1_mu = 0.0;   // ||v||_{L^1(mu)}
  double residual = 0.0;  // weak-form residual over a test battery
  std::string solver;     // "explicit-1d" or "grid-kernel"
};

// ---------------------------------------------------------------------------
// Weak-form residual
// ---------------------------------------------------------------------------

/// max over the battery of |int (L_B phi + <v, grad phi>) f d gamma_B| /
/// (1 + ||phi||_{C^2}), with L_B phi = Lap phi - <Bx, grad phi>. Closed-form
/// 1D densities are integrated adaptively (split at drift kinks); grid
/// densities use their own quadrature.
inline double residual_check(StationarySolution& sol, const std::vector<TestFunction>& battery) {
  if (battery.empty()) throw ArgumentError("residual_check: empty test battery");
  const auto& grid = *sol.f.grid;
  const GaussianSpec& ref = sol.f.reference;
  const int dim = grid.dim;
  const Eigen::MatrixXd& B = ref.precision();
  double worst = 0.0;
  const bool analytic_1d = dim == 1 && sol.f.form.has_closed_form();
  for (const auto& tf : battery) {
    auto integrand = [&](const Pt& p) {
      const Pt g = tf.gradient(p);
      double adv = 0.0;
      for (int a = 0; a < dim; ++a) {
        double bx = 0.0;
        for (int b = 0; b < dim; ++b) bx += B(a, b) * p[b];
        adv -= bx * g[a];
      }
      const Pt vv = sol.v(p);
      return (tf.laplacian(p) + adv + dot(vv, g, dim)) * sol.f.eval(p);
    };
    double val;
    if (analytic_1d) {
      const double lo = grid.axis_nodes[0].front() - 2.0;
      const double hi = grid.axis_nodes[0].back() + 2.0;
      val = integrate_1d_reference([&](double x) { return integrand(Pt{x, 0, 0}); }, ref, lo, hi,
                                   sol.v.kink_points);
    } else {
      // nodal density: quadrature with f's stored values
      val = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Pt& p = grid.nodes[i];
        const Pt g = tf.gradient(p);
        double adv = 0.0;
        for (int a = 0; a < dim; ++a) {
          double bx = 0.0;
          for (int b = 0; b < dim; ++b) bx += B(a, b) * p[b];
          adv -= bx * g[a];
        }
        const Pt vv = sol.v(p);
        val += grid.weights[i] * sol.f.values[i] *
               (tf.laplacian(p) + adv + dot(vv, g, dim));
      }
    }
    worst = std::max(worst, std::abs(val) / (1.0 + tf.c2_norm));
  }
  sol.residual = worst;
  return worst;
}

inline std::vector<TestFunction> default_residual_battery(int dim) {
  return hermite_bump_battery(dim, 25);
}

// ---------------------------------------------------------------------------
// 1D explicit solver
// ---------------------------------------------------------------------------

/// Solves the 1D stationary equation by the integrating factor
/// f(x) = exp(int_0^x v) / Z relative to gamma; Z is the grid mass so the
/// nodal density integrates to 1 exactly on its grid.
inline StationarySolution solve_1d_explicit(const DriftField& v,
                                            std::shared_ptr<const QuadratureGrid> grid,
                                            double tol_residual = 1e-10) {
  if (v.dim != 1 || grid->dim != 1) throw ArgumentError("solve_1d_explicit: dim must be 1");
  std::function<double(double)> A;
  if (v.axis_antiderivative) {
    auto anti = v.axis_antiderivative;
    A = [anti](double x) { return anti(0, x); };
  } else {
    auto ve = v.eval;
    A = [ve](double x) {
      return integrate_adaptive([&](double s) { return ve(Pt{s, 0, 0})[0]; }, 0.0, x, 1e-13);
    };
  }

  // Integrability guard: the unnormalized log Lebesgue density A(x) - x^2/2
  // must decrease toward both ends of the truncated domain.
  const auto& xs = grid->axis_nodes[0];
  const std::size_t n = xs.size();
  auto logdens = [&](double x) { return A(x) - 0.5 * x * x; };
  if (logdens(xs[n - 1]) > logdens(xs[n - 2]) || logdens(xs[0]) > logdens(xs[1]))
    throw NonIntegrableDriftError(
        "solve_1d_explicit: density grows toward the truncation boundary; drift is not "
        "integrable on this domain");

  std::vector<double> vals(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) vals[i] = std::exp(A(grid->nodes[i][0]));
  double mass;
  if (v.kink_points.empty()) {
    mass = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) mass += grid->weights[i] * vals[i];
  } else {
    // non-smooth drifts: grid quadrature of exp(A) loses digits at the kinks
    mass = integrate_1d_reference([&](double x) { return std::exp(A(x)); },
                                  GaussianSpec::standard(1), xs.front() - 2.0, xs.back() + 2.0,
                                  v.kink_points);
  }
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw NonIntegrableDriftError("solve_1d_explicit: non-normalizable density");
  for (double& x : vals) x /= mass;

  ScalarField form(1, [A, mass](const Pt& p) { return std::exp(A(p[0])) / mass; }, "exp-int-v");
  auto ve = v.eval;
  form.set_gradient([A, mass, ve](const Pt& p) {
    return Pt{ve(p)[0] * std::exp(A(p[0])) / mass, 0, 0};
  });

  StationarySolution sol;
  sol.f.grid = grid;
  sol.f.values = std::move(vals);
  sol.f.form = std::move(form);
  sol.f.reference = GaussianSpec::standard(1);
  sol.f.probability = true;
  sol.f.prob_tol = 1e-10;
  sol.f.kinks = v.kink_points;
  sol.f.validate();
  sol.v = v;
  sol.solver = "explicit-1d";
  sol.v_l1_mu = integrate_1d_reference(
      [&](double x) { return std::abs(v.eval(Pt{x, 0, 0})[0]) * sol.f.eval(Pt{x, 0, 0}); },
      sol.f.reference, xs.front() - 2.0, xs.back() + 2.0, v.kink_points);
  residual_check(sol, default_residual_battery(1));
  if (sol.residual > tol_residual)
    throw ConvergenceError("solve_1d_explicit: residual " + std::to_string(sol.residual) +
                           " exceeds tolerance");
  return sol;
}

// ---------------------------------------------------------------------------
// Grid solver (conservative finite volume, Scharfetter-Gummel fluxes)
// ---------------------------------------------------------------------------

/// Solves the stationary equation on a uniform truncated grid by extracting
/// the kernel of the conservative finite-volume operator with
/// exponentially-fitted convective fluxes and zero-flux boundary, via inverse
/// power iteration with sparse LU.
inline StationarySolution solve_grid(const DriftField& v,
                                     std::shared_ptr<const QuadratureGrid> grid,
                                     std::optional<GaussianSpec> B = std::nullopt,
                                     double tol_residual = 1e-5, int max_iters = 200) {
  if (grid->kind != GridKind::UniformTruncated)
    throw ArgumentError("solve_grid: needs a uniform truncated grid");
  const int dim = grid->dim;
  if (v.dim != dim) throw ArgumentError("solve_grid: drift dimension mismatch");
  GaussianSpec ref = B ? *B : GaussianSpec::standard(dim);
  if (!ref.is_diagonal())
    throw UnsupportedInputError("solve_grid: non-diagonal precision matrices unsupported");

  std::array<std::size_t, 3> nn{1, 1, 1};
  std::array<double, 3> h{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    nn[a] = grid->axis_nodes[a].size();
    h[a] = grid->axis_nodes[a][1] - grid->axis_nodes[a][0];
  }
  const std::size_t N = grid->size();
  const std::size_t s1 = dim >= 2 ? nn[1] : 1, s2 = dim >= 3 ? nn[2] : 1;
  const std::array<std::size_t, 3> stride{s1 * s2, s2, 1};

  auto drift_component = [&](const Pt& p, int a) {
    double bx = 0.0;
    for (int b = 0; b < dim; ++b) bx += ref.precision()(a, b) * p[b];
    return -bx + v(p)[a];
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(N * (2 * dim + 1));
  std::vector<double> diag(N, 0.0);
  std::array<std::size_t, 3> idx{0, 0, 0};
  for (std::size_t i = 0; i < N; ++i) {
    idx[2] = i % s2;
    idx[1] = (i / s2) % s1;
    idx[0] = i / (s1 * s2);
    const Pt& xi = grid->nodes[i];
    for (int a = 0; a < dim; ++a) {
      if (idx[a] + 1 >= nn[a]) continue;  // zero-flux boundary: no face beyond
      const std::size_t j = i + stride[a];
      Pt xm = xi;
      xm[a] += 0.5 * h[a];
      const double bh = drift_component(xm, a) * h[a];
      if (!std::isfinite(bh)) throw NumericError("solve_grid: non-finite drift at a face");
      const double inv_h2 = 1.0 / (h[a] * h[a]);
      const double bm = bernoulli_fn(-bh) * inv_h2;  // multiplies rho_i
      const double bp = bernoulli_fn(bh) * inv_h2;   // multiplies rho_j
      // divergence of the face flux F_{i->j} = h*(bm rho_i - bp rho_j)
      diag[i] -= bm;
      trips.emplace_back(static_cast<int>(i), static_cast<int>(j), bp);
      diag[j] -= bp;
      trips.emplace_back(static_cast<int>(j), static_cast<int>(i), bm);
    }
  }
  for (std::size_t i = 0; i < N; ++i)
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);

  Eigen::SparseMatrix<double> Amat(static_cast<int>(N), static_cast<int>(N));
  Amat.setFromTriplets(trips.begin(), trips.end());
  Amat.makeCompressed();
  double scale = 0.0;
  for (std::size_t i = 0; i < N; ++i) scale = std::max(scale, std::abs(diag[i]));

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(Amat);
  lu.factorize(Amat);
  if (lu.info() != Eigen::Success) {
    // exactly singular pivot: retry with a tiny diagonal shift
    Eigen::SparseMatrix<double> shifted = Amat;
    for (int i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= 1e-12 * scale;
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success)
      throw ConvergenceError("solve_grid: sparse LU factorization failed");
  }

  Eigen::VectorXd rho(N);
  for (std::size_t i = 0; i < N; ++i) rho(i) = ref.density(grid->nodes[i]);
  rho /= rho.lpNorm<1>();
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd z = lu.solve(rho);
    if (!z.allFinite()) throw ConvergenceError("solve_grid: inverse iteration diverged");
    if (z.sum() < 0.0) z = -z;
    rho = z / z.lpNorm<1>();
    const Eigen::VectorXd Ar = Amat * rho;
    const double lambda = rho.dot(Ar) / rho.squaredNorm();
    const double rayleigh = (Ar - lambda * rho).norm() / (scale * rho.norm());
    if (rayleigh <= 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("solve_grid: inverse power iteration did not reach the Rayleigh "
                           "residual tolerance");

  const double rho_max = rho.maxCoeff();
  if (rho.minCoeff() < -1e-12 * rho_max)
    throw SchemeViolationError("solve_grid: kernel vector has negative entries beyond tolerance");
  for (std::size_t i = 0; i < N; ++i) rho(i) = std::max(rho(i), 0.0);
  rho /= rho.lpNorm<1>();

  // Cell masses -> Lebesgue density -> density relative to gamma_B.
  double cell_vol = 1.0;
  for (int a = 0; a < dim; ++a) cell_vol *= h[a];
  std::vector<double> fvals(N);
  for (std::size_t i = 0; i < N; ++i)
    fvals[i] = rho(i) / cell_vol / ref.density(grid->nodes[i]);
  double mass = 0.0;
  for (std::size_t i = 0; i < N; ++i) mass += grid->weights[i] * fvals[i];
  for (double& x : fvals) x /= mass;

  StationarySolution sol;
  sol.f = density_from_values(grid, std::move(fvals), ref, true);
  sol.f.prob_tol = 1e-6;
  sol.v = v;
  sol.solver = "grid-kernel";
  double ul1 = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    ul1 += grid->weights[i] * sol.f.values[i] * v.magnitude(grid->nodes[i]);
  sol.v_l1_mu = ul1;
  residual_check(sol, default_residual_battery(dim));
  if (sol.residual > tol_residual)
    throw ConvergenceError("solve_grid: residual " + std::to_string(sol.residual) +
                           " exceeds tolerance " + std::to_string(tol_residual));
  return sol;
}

// ---------------------------------------------------------------------------
// Lyapunov certificate
// ---------------------------------------------------------------------------

/// Certificate for ||v||_{L^1(mu)} <= C via V(x) = exp(|x|^2/2):
/// Lap V + <b, grad V> = (d + <v, x>) V, so the condition
/// Lap V + <b, grad V> <= C - |v| reads G(x) = (d + <v,x>) V + |v| <= C.
struct LyapunovCertificate {
  std::string V_name = "exp-half-square";
  double C = 0.0;
  bool valid = false;
  std::shared_ptr<const QuadratureGrid> check_points;
};

inline LyapunovCertificate lyapunov_check(const DriftField& v,
                                          std::shared_ptr<const QuadratureGrid> sample) {
  const int dim = sample->dim;
  LyapunovCertificate cert;
  cert.check_points = sample;
  double rmax = 0.0;
  std::vector<double> G(sample->size()), r(sample->size());
  for (std::size_t i = 0; i < sample->size(); ++i) {
    const Pt& p = sample->nodes[i];
    double rr = 0.0;
    for (int a = 0; a < dim; ++a) rr = std::max(rr, std::abs(p[a]));
    r[i] = rr;
    rmax = std::max(rmax, rr);
    const double V = std::exp(0.5 * dot(p, p, dim));
    const Pt vv = v(p);
    G[i] = (dim + dot(vv, p, dim)) * V + norm2(vv, dim);
  }
  // Band maxima by relative radius; validity requires the global max to sit
  // away from the boundary and the outer bands to decrease outward.
  constexpr int bands = 10;
  std::array<double, bands> bmax;
  bmax.fill(-std::numeric_limits<double>::infinity());
  int argmax_band = 0;
  double gmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < G.size(); ++i) {
    int b = std::min(bands - 1, static_cast<int>(bands * r[i] / (rmax * (1.0 + 1e-15))));
    bmax[b] = std::max(bmax[b], G[i]);
    if (G[i] > gmax) {
      gmax = G[i];
      argmax_band = b;
    }
  }
  cert.C = gmax;
  cert.valid = std::isfinite(gmax) && argmax_band <= bands - 3 &&
               bmax[bands - 1] <= bmax[bands - 2] && bmax[bands - 2] <= bmax[bands - 3];
  return cert;
}

}  // namespace fpk
