#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/field.hpp"
#include "fpk/grid.hpp"
#include "fpk/quadrature.hpp"
#include "fpk/semigroup.hpp"

namespace fpk {

/// Result of a Kantorovich-1 computation.
struct KantorovichResult {
  double value = 0.0;
  std::string method;       // cdf-1d | signed-cdf-1d | sinkhorn | dual-lp
  double epsilon = 0.0;     // Sinkhorn only
  double error_estimate = 0.0;
};

/// A signed measure with density g relative to gamma, tracked with its total
/// mass; nu_s = (T_s div_gamma u) . gamma is the main producer.
struct SignedMeasureRepr {
  std::shared_ptr<const QuadratureGrid> grid;
  std::vector<double> density;
  ScalarField form;   // off-grid evaluator (falls back to nodal interpolation)
  double total_mass = 0.0;
};

inline SignedMeasureRepr to_signed_measure(const RegularizedDivergence& rd) {
  SignedMeasureRepr s;
  s.grid = rd.grid;
  s.density = rd.values;
  s.form = rd.field.valid() ? rd.field : ScalarField::from_grid(rd.grid, rd.values);
  s.total_mass = rd.mean;
  return s;
}

struct TransportOptions {
  int cdf_cells = 32000;       // 1D fine-profile resolution
  double box_margin = 2.0;     // extension beyond the grid extent (1D)
  int sink_block = 4;          // fine cells aggregated per Sinkhorn cell/axis
  double eps_start = 1.0;
  double eps_final = 1e-3;
  double eps_factor = 0.5;
  int max_iters = 40000;       // per epsilon level
  double marginal_tol = 1e-9;  // L1 marginal error at the final level
  double drop_tol = 1e-14;     // cells below this relative mass are dropped
  double over_relax = 1.8;     // over-relaxation exponent used once eps < 0.01
  int lp_max_pivot_factor = 400;
};

// ---------------------------------------------------------------------------
// 1D computations via cumulative distribution profiles
// ---------------------------------------------------------------------------

namespace detail {

/// Signed Lebesgue cell masses of dens(x) * reference-density(x) on a uniform
/// partition of [lo, hi] with `cells` cells (per-cell Simpson).
struct Profile1D {
  double lo = 0, hi = 0, h = 0;
  std::vector<double> cell_mass;
};

inline Profile1D build_profile(const std::function<double(double)>& lebesgue_density, double lo,
                               double hi, int cells) {
  Profile1D p;
  p.lo = lo;
  p.hi = hi;
  p.h = (hi - lo) / cells;
  p.cell_mass.resize(cells);
  for (int k = 0; k < cells; ++k) {
    const double a = lo + k * p.h, b = a + p.h;
    const double m = 0.5 * (a + b);
    p.cell_mass[k] =
        p.h / 6.0 * (lebesgue_density(a) + 4.0 * lebesgue_density(m) + lebesgue_density(b));
  }
  return p;
}

/// Rescales the profile so its total equals `target` exactly.
inline void renormalize(Profile1D& p, double target) {
  double s = 0.0;
  for (double m : p.cell_mass) s += m;
  if (std::abs(s) < 1e-300) return;
  const double c = target / s;
  for (double& m : p.cell_mass) m *= c;
}

/// Shifts the profile by subtracting `excess`, distributed proportionally to
/// |mass|, so the cumulative ends at zero exactly (balanced signed measures).
inline void rebalance(Profile1D& p, double excess) {
  double tot = 0.0;
  for (double m : p.cell_mass) tot += std::abs(m);
  if (tot < 1e-300) return;
  for (double& m : p.cell_mass) m -= excess * std::abs(m) / tot;
}

/// Integral of |C(x)| dx where C is the cumulative of the cell masses,
/// linear within cells; crossing cells are handled exactly for linear C.
inline double abs_cumulative_integral(const Profile1D& p) {
  double acc = 0.0;
  double cl = 0.0;
  for (double m : p.cell_mass) {
    const double cr = cl + m;
    if (cl == 0.0 && cr == 0.0) {
      // nothing
    } else if ((cl >= 0.0 && cr >= 0.0) || (cl <= 0.0 && cr <= 0.0)) {
      acc += 0.5 * (std::abs(cl) + std::abs(cr)) * p.h;
    } else {
      // sign change: split at the linear zero crossing
      const double t = std::abs(cl) / (std::abs(cl) + std::abs(cr));
      acc += 0.5 * (std::abs(cl) * t + std::abs(cr) * (1.0 - t)) * p.h;
    }
    cl = cr;
  }
  return acc;
}

inline std::pair<double, double> box_1d(const QuadratureGrid& g, double margin) {
  return {g.axis_nodes[0].front() - margin, g.axis_nodes[0].back() + margin};
}

}  // namespace detail

/// W1 between two 1D probability measures via int |F_mu - F_nu| dx, with the
/// error estimated from one refinement step.
inline KantorovichResult w1_probability_1d(const DensityFn& mu, const DensityFn& nu,
                                           const TransportOptions& opt = {}) {
  const double m1 = mu.probability ? 1.0 : mu.mass();
  const double m2 = nu.probability ? 1.0 : nu.mass();
  if (std::abs(m1 - m2) > 1e-8)
    throw UnbalancedInputError("w1_probability: mass mismatch " + std::to_string(m1 - m2));
  auto [lo1, hi1] = detail::box_1d(*mu.grid, opt.box_margin);
  auto [lo2, hi2] = detail::box_1d(*nu.grid, opt.box_margin);
  const double lo = std::min(lo1, lo2), hi = std::max(hi1, hi2);
  auto leb_mu = [&](double x) { return mu.eval(Pt{x, 0, 0}) * mu.reference.density(Pt{x, 0, 0}); };
  auto leb_nu = [&](double x) { return nu.eval(Pt{x, 0, 0}) * nu.reference.density(Pt{x, 0, 0}); };

  auto compute = [&](int cells) {
    detail::Profile1D pm = detail::build_profile(leb_mu, lo, hi, cells);
    detail::Profile1D pn = detail::build_profile(leb_nu, lo, hi, cells);
    detail::renormalize(pm, m1);
    detail::renormalize(pn, m1);
    detail::Profile1D diff = pm;
    for (int k = 0; k < cells; ++k) diff.cell_mass[k] -= pn.cell_mass[k];
    return detail::abs_cumulative_integral(diff);
  };
  const double fine = compute(opt.cdf_cells);
  const double coarse = compute(opt.cdf_cells / 2);
  KantorovichResult r;
  r.value = fine;
  r.method = "cdf-1d";
  r.error_estimate = std::abs(fine - coarse) + 1e-13;
  return r;
}

/// Kantorovich norm of a balanced 1D signed measure by the cumulative-mass
/// formula ||sigma||_K = int |sigma((-inf, x])| dx.
inline KantorovichResult w1_signed_1d(const SignedMeasureRepr& sigma,
                                      const TransportOptions& opt = {}) {
  if (std::abs(sigma.total_mass) > 1e-8)
    throw UnsupportedInputError("w1_signed: measure is not balanced (total mass " +
                                std::to_string(sigma.total_mass) + ")");
  auto [lo, hi] = detail::box_1d(*sigma.grid, opt.box_margin);
  auto leb = [&](double x) { return sigma.form(Pt{x, 0, 0}) * std_normal_pdf(x); };
  auto compute = [&](int cells) {
    detail::Profile1D p = detail::build_profile(leb, lo, hi, cells);
    double excess = 0.0;
    for (double m : p.cell_mass) excess += m;
    detail::rebalance(p, excess - sigma.total_mass);
    return detail::abs_cumulative_integral(p);
  };
  const double fine = compute(opt.cdf_cells);
  const double coarse = compute(opt.cdf_cells / 2);
  KantorovichResult r;
  r.value = fine;
  r.method = "signed-cdf-1d";
  r.error_estimate = std::abs(fine - coarse) + std::abs(sigma.total_mass) + 1e-13;
  return r;
}

// ---------------------------------------------------------------------------
// Discrete clouds for 2-3D transport
// ---------------------------------------------------------------------------

struct DiscreteCloud {
  int dim = 2;
  std::vector<Pt> pts;
  std::vector<double> mass;
  double dropped = 0.0;  // relative mass removed by thresholding

  double total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
  }
};

namespace detail {

/// Aggregates a density on a uniform grid into Sinkhorn support cells of
/// `block`^d fine cells each, keeping per-cell mass and mass centroid.
inline DiscreteCloud build_cloud(const DensityFn& f, int block, double drop_tol) {
  const QuadratureGrid& g = *f.grid;
  if (g.kind != GridKind::UniformTruncated)
    throw UnsupportedInputError("transport: 2-3D measures need a uniform grid");
  const int dim = g.dim;
  std::array<std::size_t, 3> nn{1, 1, 1};
  std::array<double, 3> h{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    nn[a] = g.axis_nodes[a].size();
    h[a] = g.axis_nodes[a][1] - g.axis_nodes[a][0];
  }
  const std::size_t s1 = dim >= 2 ? nn[1] : 1, s2 = dim >= 3 ? nn[2] : 1;
  std::array<std::size_t, 3> nb{1, 1, 1};
  for (int a = 0; a < dim; ++a) nb[a] = (nn[a] + block - 1) / block;

  const std::size_t nblocks = nb[0] * nb[1] * nb[2];
  std::vector<double> bm(nblocks, 0.0);
  std::vector<Pt> bc(nblocks, Pt{0, 0, 0});
  double cell_vol = 1.0;
  for (int a = 0; a < dim; ++a) cell_vol *= h[a];

  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t i2 = i % s2, i1 = (i / s2) % s1, i0 = i / (s1 * s2);
    const std::size_t b0 = i0 / block, b1 = i1 / block, b2 = i2 / block;
    const std::size_t bidx = (b0 * nb[1] + (dim >= 2 ? b1 : 0)) * nb[2] + (dim >= 3 ? b2 : 0);
    const double m = f.values[i] * f.reference.density(g.nodes[i]) * cell_vol;
    bm[bidx] += m;
    for (int a = 0; a < dim; ++a) bc[bidx][a] += m * g.nodes[i][a];
  }
  double tot = 0.0;
  for (double m : bm) tot += m;
  DiscreteCloud c;
  c.dim = dim;
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (bm[b] <= drop_tol * tot) {
      c.dropped += bm[b];
      continue;
    }
    Pt p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = bc[b][a] / bm[b];
    c.pts.push_back(p);
    c.mass.push_back(bm[b]);
  }
  c.dropped /= tot;
  // renormalize to unit mass
  double s = 0.0;
  for (double m : c.mass) s += m;
  for (double& m : c.mass) m /= s;
  return c;
}

inline double cloud_diameter(const DiscreteCloud& a, const DiscreteCloud& b) {
  Pt lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& c : {a, b})
    for (const auto& p : c.pts)
      for (int d = 0; d < c.dim; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
  Pt diff{0, 0, 0};
  for (int d = 0; d < a.dim; ++d) diff[d] = hi[d] - lo[d];
  return norm2(diff, a.dim);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stabilized log-domain Sinkhorn with epsilon annealing
// ---------------------------------------------------------------------------

struct SinkhornOutcome {
  double value = 0.0;        // extrapolated transport cost, clamped to [dual, primal]
  double primal = 0.0;       // <P, C> at the final epsilon
  double dual_lb = 0.0;      // feasible dual value (certified lower bound)
  double epsilon = 0.0;
  double error_estimate = 0.0;
  int iterations = 0;
};

inline SinkhornOutcome sinkhorn_w1(const DiscreteCloud& A, const DiscreteCloud& B,
                                   const TransportOptions& opt = {}) {
  const std::size_t n = A.pts.size(), m = B.pts.size();
  if (n == 0 || m == 0) throw ArgumentError("sinkhorn_w1: empty cloud");
  std::vector<double> C(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Pt d{0, 0, 0};
      for (int a = 0; a < A.dim; ++a) d[a] = A.pts[i][a] - B.pts[j][a];
      C[i * m + j] = norm2(d, A.dim);
    }
  std::vector<double> fpot(n, 0.0), gpot(m, 0.0);
  std::vector<double> avec(n, 1.0), bvec(m, 1.0), colK(m);

  // Absorbed kernel, truncated to the numerically active band and stored
  // sparse (CSR). Scalings are re-absorbed whenever they leave a narrow
  // window, so truncated entries stay negligible against the marginal
  // tolerance.
  constexpr double kTruncExp = -70.0;
  constexpr double kAbsorbLog = 10.0;
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<std::uint32_t> col_idx;
  std::vector<double> kval;
  std::vector<char> col_covered(m);

  auto rebuild = [&](double eps) {
    col_idx.clear();
    kval.clear();
    row_ptr[0] = 0;
    std::fill(col_covered.begin(), col_covered.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* Ci = &C[i * m];
      double emax = -std::numeric_limits<double>::infinity();
      std::size_t jmax = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double e = (fpot[i] + gpot[j] - Ci[j]) / eps;
        if (e > emax) {
          emax = e;
          jmax = j;
        }
        if (e >= kTruncExp) {
          col_idx.push_back(static_cast<std::uint32_t>(j));
          kval.push_back(std::exp(e));
          col_covered[j] = 1;
        }
      }
      if (row_ptr[i] == col_idx.size()) {
        // keep at least the strongest entry so the row marginal is solvable
        col_idx.push_back(static_cast<std::uint32_t>(jmax));
        kval.push_back(std::exp(emax));
        col_covered[jmax] = 1;
      }
      row_ptr[i + 1] = col_idx.size();
    }
    // every column needs support too; append rows' entries for orphans
    for (std::size_t j = 0; j < m; ++j) {
      if (col_covered[j]) continue;
      double emax = -std::numeric_limits<double>::infinity();
      std::size_t imax = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = (fpot[i] + gpot[j] - C[i * m + j]) / eps;
        if (e > emax) {
          emax = e;
          imax = i;
        }
      }
      // insert into row imax (rebuild CSR by shifting the tail)
      const std::size_t pos = row_ptr[imax + 1];
      col_idx.insert(col_idx.begin() + pos, static_cast<std::uint32_t>(j));
      kval.insert(kval.begin() + pos, std::exp(emax));
      for (std::size_t r = imax + 1; r <= n; ++r) ++row_ptr[r];
    }
  };
  auto absorb = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      fpot[i] += eps * std::log(avec[i]);
      avec[i] = 1.0;
    }
    for (std::size_t j = 0; j < m; ++j) {
      gpot[j] += eps * std::log(bvec[j]);
      bvec[j] = 1.0;
    }
    rebuild(eps);
  };
  auto column_marginals = [&]() {
    std::fill(colK.begin(), colK.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = avec[i];
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        colK[col_idx[p]] += kval[p] * ai;
    }
  };

  SinkhornOutcome out;
  int total_iters = 0;
  double prev_primal = 0.0, prev_eps = 0.0;
  std::vector<double> eps_levels;
  for (double e = opt.eps_start; e > opt.eps_final * (1.0 + 1e-12); e *= opt.eps_factor)
    eps_levels.push_back(e);
  eps_levels.push_back(opt.eps_final);

  for (std::size_t lev = 0; lev < eps_levels.size(); ++lev) {
    const double eps = eps_levels[lev];
    const bool final_level = (lev + 1 == eps_levels.size());
    const bool report_level = final_level || (lev + 2 == eps_levels.size());
    const double tol = final_level ? opt.marginal_tol
                       : report_level ? std::max(1e-8, opt.marginal_tol) : 1e-6;
    rebuild(eps);
    std::fill(avec.begin(), avec.end(), 1.0);
    std::fill(bvec.begin(), bvec.end(), 1.0);
    bool converged = false;
    // over-relaxation accelerates the slow small-epsilon regime; the narrow
    // absorption window keeps the powered scalings bounded
    double theta = eps < 0.01 ? opt.over_relax : 1.0;
    double prev_err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iters && !converged; ++it) {
      column_marginals();
      double lmax = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double ratio = B.mass[j] / colK[j];
        bvec[j] = theta == 1.0 ? ratio : bvec[j] * std::pow(ratio / bvec[j], theta);
        lmax = std::max(lmax, std::abs(std::log(bvec[j])));
      }
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
          s += kval[p] * bvec[col_idx[p]];
        const double ratio = A.mass[i] / s;
        avec[i] = theta == 1.0 ? ratio : avec[i] * std::pow(ratio / avec[i], theta);
        lmax = std::max(lmax, std::abs(std::log(avec[i])));
      }
      ++total_iters;
      if (lmax > kAbsorbLog) {
        absorb(eps);
        continue;
      }
      if (it % 8 == 7 || it + 1 == opt.max_iters) {
        column_marginals();
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) err += std::abs(bvec[j] * colK[j] - B.mass[j]);
        if (err <= tol) converged = true;
        if (err > prev_err && theta > 1.0) theta = 1.0 + 0.5 * (theta - 1.0);
        prev_err = err;
#ifdef FPK_SINKHORN_TRACE
        if (it % 4096 == 4095 || converged || it + 1 == opt.max_iters)
          std::fprintf(stderr, "    it=%d err=%.3e theta=%.3f\n", it, err, theta);
#endif
      }
    }
#ifdef FPK_SINKHORN_TRACE
    std::fprintf(stderr, "  [sinkhorn] eps=%.5g iters_total=%d converged=%d nnz=%zu\n", eps,
                 total_iters, static_cast<int>(converged), kval.size());
#endif
    if (!converged && final_level)
      throw ConvergenceError("sinkhorn_w1: marginals did not converge at the final epsilon");
    absorb(eps);
    if (report_level) {
      double primal = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
          primal += kval[p] * C[i * m + col_idx[p]];
      if (!final_level) {
        prev_primal = primal;
        prev_eps = eps;
      } else {
        out.primal = primal;
        out.epsilon = eps;
        // c-transform of the row potential gives a feasible dual pair
        double dual = 0.0;
        for (std::size_t i = 0; i < n; ++i) dual += fpot[i] * A.mass[i];
        for (std::size_t j = 0; j < m; ++j) {
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < n; ++i) best = std::min(best, C[i * m + j] - fpot[i]);
          dual += best * B.mass[j];
        }
        out.dual_lb = dual;
        const double extrap =
            prev_eps > 0.0 ? primal + (primal - prev_primal) * eps / (prev_eps - eps) : primal;
        out.value = std::clamp(extrap, out.dual_lb, out.primal);
      }
    }
  }
  out.iterations = total_iters;
  out.error_estimate = std::max(out.primal - out.dual_lb, 1e-12);
  return out;
}

// ---------------------------------------------------------------------------
// Exact discrete optimal transport (transportation simplex)
// ---------------------------------------------------------------------------

/// Exact solver for the discrete transportation problem min <P, C> with row
/// sums a and column sums b. Dense costs; basis kept as a spanning tree.
/// Optimality is certified by a final full pricing pass.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> a, std::vector<double> b,
                   std::function<double(std::size_t, std::size_t)> cost, int max_pivot_factor)
      : a_(std::move(a)), b_(std::move(b)), cost_(std::move(cost)) {
    n_ = a_.size();
    m_ = b_.size();
    // balance exactly and perturb against degeneracy
    double sa = std::accumulate(a_.begin(), a_.end(), 0.0);
    double sb = std::accumulate(b_.begin(), b_.end(), 0.0);
    if (std::abs(sa - sb) > 1e-8 * std::max(sa, sb))
      throw UnbalancedInputError("TransportSimplex: unbalanced supplies/demands");
    for (double& x : b_) x *= sa / sb;
    const double delta = 1e-11 * sa / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) a_[i] += delta;
    b_[m_ - 1] += delta * static_cast<double>(n_);
    max_pivots_ = max_pivot_factor * static_cast<int>(n_ + m_);
    solve();
  }

  double objective() const { return objective_; }
  double max_violation() const { return max_violation_; }

 private:
  // node ids: 0..n-1 rows, n..n+m-1 cols
  std::size_t n_ = 0, m_ = 0;
  std::vector<double> a_, b_;
  std::function<double(std::size_t, std::size_t)> cost_;
  std::vector<int> parent_;
  std::vector<double> flow_;  // flow on the arc to the parent
  std::vector<double> pot_;   // duals
  double objective_ = 0.0;
  double max_violation_ = 0.0;
  int max_pivots_ = 0;

  void solve() {
    const std::size_t N = n_ + m_;
    parent_.assign(N, -1);
    flow_.assign(N, 0.0);
    pot_.assign(N, 0.0);

    // Initial basis: row-greedy allocation; arcs used become tree arcs, and
    // zero-flow arcs are added to connect any leftover structure.
    {
      std::vector<double> rem_a = a_, rem_b = b_;
      std::vector<char> row_done(n_, 0);
      std::vector<std::vector<std::pair<int, double>>> alloc(n_);
      std::size_t j = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        while (rem_a[i] > 0.0 && j < m_) {
          const double q = std::min(rem_a[i], rem_b[j]);
          alloc[i].push_back({static_cast<int>(j), q});
          rem_a[i] -= q;
          rem_b[j] -= q;
          if (rem_b[j] <= 0.0 && j + 1 < m_)
            ++j;
          else if (rem_a[i] <= 0.0)
            break;
          if (rem_b[j] <= 0.0 && j + 1 == m_) break;
        }
      }
      // Northwest-corner produces exactly n+m-1 basic arcs forming a tree.
      // Root the tree at row 0.
      std::vector<std::vector<std::pair<int, double>>> adj(N);
      for (std::size_t i = 0; i < n_; ++i)
        for (auto [jj, q] : alloc[i]) {
          adj[i].push_back({static_cast<int>(n_) + jj, q});
          adj[n_ + jj].push_back({static_cast<int>(i), q});
        }
      std::vector<int> stack{0};
      std::vector<char> seen(N, 0);
      seen[0] = 1;
      parent_[0] = 0;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (auto [w, q] : adj[u]) {
          if (seen[w]) continue;
          seen[w] = 1;
          parent_[w] = u;
          flow_[w] = q;
          stack.push_back(w);
        }
      }
      for (std::size_t u = 0; u < N; ++u)
        if (!seen[u])
          throw NumericError("TransportSimplex: disconnected initial basis");
      parent_[0] = -1;
    }
    update_potentials();

    // Pivoting with block pricing over rows.
    const std::size_t block = std::max<std::size_t>(8, n_ / 16);
    std::size_t cursor = 0;
    int pivots = 0;
    const double tol = 1e-11 * (1.0 + max_cost_sample());
    while (true) {
      double best = -tol;
      std::size_t bi = 0, bj = 0;
      bool found = false;
      std::size_t scanned = 0;
      while (scanned < n_) {
        const std::size_t rows = std::min(block, n_ - 0);
        for (std::size_t r = 0; r < rows && scanned < n_; ++r, ++scanned) {
          const std::size_t i = (cursor + scanned) % n_;
          for (std::size_t j = 0; j < m_; ++j) {
            const double rc = cost_(i, j) - pot_[i] - pot_[n_ + j];
            if (rc < best) {
              best = rc;
              bi = i;
              bj = j;
              found = true;
            }
          }
        }
        if (found) break;
      }
      cursor = (cursor + scanned) % n_;
      if (!found) break;
      pivot(bi, static_cast<int>(n_ + bj));
      if (++pivots > max_pivots_)
        throw ConvergenceError("TransportSimplex: pivot limit exceeded");
    }

    // objective and optimality certificate
    objective_ = 0.0;
    const std::size_t N2 = n_ + m_;
    for (std::size_t u = 1; u < N2; ++u) {
      if (parent_[u] < 0) continue;
      const std::size_t p = static_cast<std::size_t>(parent_[u]);
      const std::size_t i = u < n_ ? u : p;
      const std::size_t j = (u < n_ ? p : u) - n_;
      objective_ += flow_[u] * cost_(i, j);
    }
    max_violation_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        max_violation_ =
            std::max(max_violation_, pot_[i] + pot_[n_ + j] - cost_(i, j));
  }

  double max_cost_sample() const {
    double c = 0.0;
    for (std::size_t i = 0; i < n_; i += std::max<std::size_t>(1, n_ / 16))
      for (std::size_t j = 0; j < m_; j += std::max<std::size_t>(1, m_ / 16))
        c = std::max(c, cost_(i, j));
    return c;
  }

  void update_potentials() {
    const std::size_t N = n_ + m_;
    // children lists for a BFS from the root
    std::vector<std::vector<int>> kids(N);
    for (std::size_t u = 1; u < N; ++u)
      if (parent_[u] >= 0) kids[parent_[u]].push_back(static_cast<int>(u));
    if (parent_[0] == -1) {
      pot_[0] = 0.0;
      std::vector<int> stack{0};
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w : kids[u]) {
          const std::size_t i = static_cast<std::size_t>(w) < n_ ? w : u;
          const std::size_t j = (static_cast<std::size_t>(w) < n_ ? u : w) - n_;
          pot_[w] = cost_(i, j) - pot_[u];
          stack.push_back(w);
        }
      }
    }
  }

  void pivot(std::size_t enter_row, int enter_col_node) {
    const std::size_t N = n_ + m_;
    // paths to the root
    std::vector<int> mark(N, 0);
    for (int u = static_cast<int>(enter_row); u >= 0; u = parent_[u]) {
      mark[u] = 1;
      if (parent_[u] < 0) break;
    }
    int lca = enter_col_node;
    while (lca >= 0 && !mark[lca]) lca = parent_[lca];

    // theta = min flow over arcs that lose flow: from enter_row side the
    // first arc (enter_row -> parent) loses, alternating; from the col side
    // the first arc also loses, alternating.
    double theta = std::numeric_limits<double>::infinity();
    int leave_node = -1;
    bool leave_on_row_side = true;
    int sign = -1;
    for (int u = static_cast<int>(enter_row); u != lca; u = parent_[u]) {
      if (sign < 0 && flow_[u] < theta) {
        theta = flow_[u];
        leave_node = u;
        leave_on_row_side = true;
      }
      sign = -sign;
    }
    sign = -1;
    for (int u = enter_col_node; u != lca; u = parent_[u]) {
      if (sign < 0 && flow_[u] < theta) {
        theta = flow_[u];
        leave_node = u;
        leave_on_row_side = false;
      }
      sign = -sign;
    }
    if (leave_node < 0) throw NumericError("TransportSimplex: no leaving arc found");

    // apply the flow change
    sign = -1;
    for (int u = static_cast<int>(enter_row); u != lca; u = parent_[u]) {
      flow_[u] += sign * theta;
      sign = -sign;
    }
    sign = -1;
    for (int u = enter_col_node; u != lca; u = parent_[u]) {
      flow_[u] += sign * theta;
      sign = -sign;
    }

    // re-root: the entering arc replaces the leaving arc. Reverse the parent
    // chain from the entering endpoint (on the leaving side) down to the
    // leaving arc, then attach it through the entering arc.
    const int chain_start = leave_on_row_side ? static_cast<int>(enter_row) : enter_col_node;
    const int new_parent = leave_on_row_side ? enter_col_node : static_cast<int>(enter_row);
    int u = chain_start;
    int prev = new_parent;
    double carry = theta;
    while (true) {
      const int next = parent_[u];
      const double next_flow = flow_[u];
      parent_[u] = prev;
      flow_[u] = carry;
      if (u == leave_node) break;
      prev = u;
      u = next;
      carry = next_flow;
    }
    update_potentials();
  }
};

/// Exact W1 between two discrete clouds (Euclidean ground cost).
inline KantorovichResult transport_lp(const DiscreteCloud& A, const DiscreteCloud& B,
                                      const TransportOptions& opt = {}) {
  auto cost = [&](std::size_t i, std::size_t j) {
    Pt d{0, 0, 0};
    for (int a = 0; a < A.dim; ++a) d[a] = A.pts[i][a] - B.pts[j][a];
    return norm2(d, A.dim);
  };
  TransportSimplex simplex(A.mass, B.mass, cost, opt.lp_max_pivot_factor);
  KantorovichResult r;
  r.value = simplex.objective();
  r.method = "dual-lp";
  r.error_estimate = simplex.max_violation() + 1e-10;
  return r;
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// W1 between probability densities: exact CDF profile in 1D, annealed
/// Sinkhorn on aggregated supports in 2-3D.
inline KantorovichResult w1_probability(const DensityFn& mu, const DensityFn& nu,
                                        const TransportOptions& opt = {}) {
  if (mu.grid->dim != nu.grid->dim)
    throw ArgumentError("w1_probability: dimension mismatch");
  if (mu.grid->dim == 1) return w1_probability_1d(mu, nu, opt);
  if (std::abs((mu.probability ? 1.0 : mu.mass()) - (nu.probability ? 1.0 : nu.mass())) > 1e-8)
    throw UnbalancedInputError("w1_probability: mass mismatch");
  const DiscreteCloud A = detail::build_cloud(mu, opt.sink_block, opt.drop_tol);
  const DiscreteCloud B = detail::build_cloud(nu, opt.sink_block, opt.drop_tol);
  const SinkhornOutcome s = sinkhorn_w1(A, B, opt);
  KantorovichResult r;
  r.value = s.value;
  r.method = "sinkhorn";
  r.epsilon = s.epsilon;
  r.error_estimate =
      s.error_estimate + (A.dropped + B.dropped) * detail::cloud_diameter(A, B);
  return r;
}

/// W1 between a probability density and its own reference Gaussian.
inline KantorovichResult w1_to_reference(const DensityFn& mu, const TransportOptions& opt = {}) {
  DensityFn ones = density_from_form(
      mu.grid, ScalarField(mu.grid->dim, [](const Pt&) { return 1.0; }, "const-1"),
      mu.reference, true);
  return w1_probability(mu, ones, opt);
}

/// Kantorovich norm of a balanced signed measure: cumulative formula in 1D,
/// exact LP between positive and negative parts in 2-3D.
inline KantorovichResult w1_signed(const SignedMeasureRepr& sigma,
                                   const TransportOptions& opt = {}) {
  if (sigma.grid->dim == 1) return w1_signed_1d(sigma, opt);
  if (std::abs(sigma.total_mass) > 1e-8)
    throw UnsupportedInputError("w1_signed: measure is not balanced");
  DiscreteCloud P, N;
  P.dim = N.dim = sigma.grid->dim;
  for (std::size_t i = 0; i < sigma.grid->size(); ++i) {
    const double m = sigma.density[i] * sigma.grid->weights[i];
    if (m > 0.0) {
      P.pts.push_back(sigma.grid->nodes[i]);
      P.mass.push_back(m);
    } else if (m < 0.0) {
      N.pts.push_back(sigma.grid->nodes[i]);
      N.mass.push_back(-m);
    }
  }
  if (P.pts.empty() || N.pts.empty()) {
    KantorovichResult r;
    r.value = 0.0;
    r.method = "dual-lp";
    return r;
  }
  return transport_lp(P, N, opt);
}

/// Sinkhorn vs exact LP consistency report on a coarse shared support.
struct CrosscheckReport {
  double sinkhorn = 0.0;
  double lp = 0.0;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline CrosscheckReport w1_oracle_crosscheck(const DensityFn& mu, const DensityFn& nu,
                                             int coarse_cells_per_axis,
                                             const TransportOptions& opt = {}) {
  if (mu.grid->dim < 2) throw ArgumentError("w1_oracle_crosscheck: needs 2D inputs");
  TransportOptions o = opt;
  const int n_axis = static_cast<int>(mu.grid->axis_nodes[0].size());
  o.sink_block = std::max(1, (n_axis + coarse_cells_per_axis - 1) / coarse_cells_per_axis);
  const DiscreteCloud A = detail::build_cloud(mu, o.sink_block, o.drop_tol);
  const DiscreteCloud B = detail::build_cloud(nu, o.sink_block, o.drop_tol);
  const SinkhornOutcome s = sinkhorn_w1(A, B, o);
  const KantorovichResult lp = transport_lp(A, B, o);
  CrosscheckReport rep;
  rep.sinkhorn = s.value;
  rep.lp = lp.value;
  rep.discrepancy = std::abs(s.value - lp.value);
  rep.tolerance = std::max(1e-3, 3.0 * s.error_estimate);
  rep.pass = rep.discrepancy <= rep.tolerance;
  return rep;
}

}  // namespace fpk
