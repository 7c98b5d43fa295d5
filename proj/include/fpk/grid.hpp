#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/quadrature.hpp"

namespace fpk {

enum class GridKind { GaussHermiteTensor, UniformTruncated };

inline std::string to_string(GridKind k) {
  return k == GridKind::GaussHermiteTensor ? "gauss-hermite-tensor" : "uniform-truncated";
}

inline GridKind grid_kind_from_string(const std::string& s) {
  if (s == "gauss-hermite-tensor") return GridKind::GaussHermiteTensor;
  if (s == "uniform-truncated") return GridKind::UniformTruncated;
  throw ArgumentError("unknown grid kind: " + s);
}

/// Centered Gaussian reference measure with precision matrix B (covariance
/// B^{-1}); B = I is the standard measure. Only d <= 3 is supported.
class GaussianSpec {
 public:
  GaussianSpec() : GaussianSpec(1, Eigen::MatrixXd::Identity(1, 1)) {}

  GaussianSpec(int dim, const Eigen::MatrixXd& B) : dim_(dim), B_(B) {
    if (dim < 1 || dim > 3) throw ArgumentError("GaussianSpec: dim must be 1..3");
    if (B.rows() != dim || B.cols() != dim)
      throw ArgumentError("GaussianSpec: precision matrix size mismatch");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ArgumentError("GaussianSpec: precision matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    if (evals_.minCoeff() <= 0.0)
      throw ArgumentError("GaussianSpec: precision matrix must be positive definite");
    min_eig_ = evals_.minCoeff();
    det_ = evals_.prod();
  }

  static GaussianSpec standard(int dim) {
    return GaussianSpec(dim, Eigen::MatrixXd::Identity(dim, dim));
  }

  int dim() const { return dim_; }
  const Eigen::MatrixXd& precision() const { return B_; }
  double min_eigenvalue() const { return min_eig_; }
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXd& eigenvectors() const { return evecs_; }

  bool is_identity() const {
    return (B_ - Eigen::MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff() < 1e-14;
  }

  bool is_diagonal() const {
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        if (i != j && std::abs(B_(i, j)) > 1e-14) return false;
    return true;
  }

  /// Density of the measure at x: (2 pi)^{-d/2} det(B)^{1/2} exp(-<Bx,x>/2).
  double density(const Pt& x) const {
    double q = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) q += B_(i, j) * x[i] * x[j];
    return std::pow(2.0 * kPi, -0.5 * dim_) * std::sqrt(det_) * std::exp(-0.5 * q);
  }

  /// Maps a standard-Gaussian point u to a gamma_B point x = Q diag(l^{-1/2}) Q^T u.
  Pt from_standard(const Pt& u) const {
    Pt x{0, 0, 0};
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j) {
        double m = 0.0;
        for (int k = 0; k < dim_; ++k)
          m += evecs_(i, k) / std::sqrt(evals_(k)) * evecs_(j, k);
        s += m * u[j];
      }
      x[i] = s;
    }
    return x;
  }

 private:
  int dim_;
  Eigen::MatrixXd B_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  double min_eig_ = 1.0;
  double det_ = 1.0;
};

/// Tensor-product quadrature grid representing integration against a Gaussian
/// reference measure in dimension d. Weights are nonnegative and sum to 1.
class QuadratureGrid {
 public:
  int dim = 1;
  GridKind kind = GridKind::GaussHermiteTensor;
  int order = 0;                    // points per axis
  double truncation_radius = 0.0;   // uniform kind only
  std::array<std::vector<double>, 3> axis_nodes;
  std::array<std::vector<double>, 3> axis_weights;
  std::vector<Pt> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  bool uniform_axes() const { return kind == GridKind::UniformTruncated; }

  template <typename F>
  double integrate(F&& phi) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double v = phi(nodes[i]);
      if (!std::isfinite(v))
        throw NumericError("integrate: non-finite integrand at node (" +
                           std::to_string(nodes[i][0]) + ", " + std::to_string(nodes[i][1]) +
                           ", " + std::to_string(nodes[i][2]) + ")");
      acc += weights[i] * v;
    }
    return acc;
  }

  double integrate_values(const std::vector<double>& v) const {
    if (v.size() != nodes.size())
      throw ArgumentError("integrate_values: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]))
        throw NumericError("integrate_values: non-finite value at node index " +
                           std::to_string(i));
      acc += weights[i] * v[i];
    }
    return acc;
  }
};

namespace detail {

inline void flatten_tensor(QuadratureGrid& g) {
  std::size_t total = 1;
  for (int a = 0; a < g.dim; ++a) total *= g.axis_nodes[a].size();
  g.nodes.resize(total);
  g.weights.resize(total);
  const std::size_t n1 = g.dim >= 2 ? g.axis_nodes[1].size() : 1;
  const std::size_t n2 = g.dim >= 3 ? g.axis_nodes[2].size() : 1;
  double wsum = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const std::size_t i2 = idx % n2;
    const std::size_t i1 = (idx / n2) % n1;
    const std::size_t i0 = idx / (n1 * n2);
    Pt p{0, 0, 0};
    double w = g.axis_weights[0][i0];
    p[0] = g.axis_nodes[0][i0];
    if (g.dim >= 2) {
      p[1] = g.axis_nodes[1][i1];
      w *= g.axis_weights[1][i1];
    }
    if (g.dim >= 3) {
      p[2] = g.axis_nodes[2][i2];
      w *= g.axis_weights[2][i2];
    }
    g.nodes[idx] = p;
    g.weights[idx] = w;
    wsum += w;
  }
  for (double& w : g.weights) w /= wsum;
}

}  // namespace detail

/// Builds a tensor-product grid for the standard Gaussian measure.
/// Gauss-Hermite nodes are already rescaled for unit variance; uniform grids
/// place `order` cell centers per axis on [-R, R] with Gaussian cell weights.
inline std::shared_ptr<const QuadratureGrid> build_grid(int dim, int order, GridKind kind,
                                                        double truncation_radius = 8.0,
                                                        std::size_t node_cap = 2'000'000) {
  if (dim < 1 || dim > 3) throw ArgumentError("build_grid: dim must be in {1,2,3}");
  if (order < 2) throw ArgumentError("build_grid: order must be >= 2");
  double total = 1.0;
  for (int a = 0; a < dim; ++a) total *= static_cast<double>(order);
  if (total > static_cast<double>(node_cap))
    throw SizeError("build_grid: tensor size " + std::to_string(static_cast<std::size_t>(total)) +
                    " exceeds cap " + std::to_string(node_cap));

  auto g = std::make_shared<QuadratureGrid>();
  g->dim = dim;
  g->kind = kind;
  g->order = order;
  if (kind == GridKind::GaussHermiteTensor) {
    const Rule1D r = gauss_hermite_prob(order);
    for (int a = 0; a < dim; ++a) {
      g->axis_nodes[a] = r.nodes;
      g->axis_weights[a] = r.weights;
    }
  } else {
    if (!(truncation_radius > 0.0))
      throw ArgumentError("build_grid: uniform grid needs a positive truncation radius");
    g->truncation_radius = truncation_radius;
    const double h = 2.0 * truncation_radius / order;
    std::vector<double> xs(order), ws(order);
    for (int j = 0; j < order; ++j) {
      xs[j] = -truncation_radius + (j + 0.5) * h;
      ws[j] = std_normal_pdf(xs[j]) * h;
    }
    double s = 0.0;
    for (double w : ws) s += w;
    for (double& w : ws) w /= s;
    for (int a = 0; a < dim; ++a) {
      g->axis_nodes[a] = xs;
      g->axis_weights[a] = ws;
    }
  }
  detail::flatten_tensor(*g);
  return g;
}

/// Grid integrating against gamma_B: standard nodes mapped through B^{-1/2}.
/// For diagonal B the axis structure is preserved (axis nodes scaled).
inline std::shared_ptr<const QuadratureGrid> build_gaussian_grid(const GaussianSpec& spec,
                                                                 int order, GridKind kind,
                                                                 double truncation_radius = 8.0) {
  auto base = build_grid(spec.dim(), order, kind, truncation_radius);
  if (spec.is_identity()) return base;
  auto g = std::make_shared<QuadratureGrid>(*base);
  if (spec.is_diagonal()) {
    for (int a = 0; a < spec.dim(); ++a) {
      const double s = 1.0 / std::sqrt(spec.precision()(a, a));
      for (double& x : g->axis_nodes[a]) x *= s;
    }
    detail::flatten_tensor(*g);
  } else {
    for (auto& p : g->nodes) p = spec.from_standard(p);
    for (int a = 0; a < 3; ++a) {
      g->axis_nodes[a].clear();
      g->axis_weights[a].clear();
    }
  }
  return g;
}

/// Density of the Gaussian measure described by `spec` at x.
inline double gaussian_density(const GaussianSpec& spec, const Pt& x) {
  for (int i = 0; i < spec.dim(); ++i) require_finite(x[i], "gaussian_density");
  return spec.density(x);
}

/// Integrates fn(x) d gamma_B(x) over [lo, hi] with adaptive panels of
/// bounded width, split additionally at the given kink points. Bounded
/// panels keep the adaptive probes inside the Gaussian bulk.
inline double integrate_1d_reference(const std::function<double(double)>& fn,
                                     const GaussianSpec& ref, double lo, double hi,
                                     const std::vector<double>& splits, double tol = 1e-13) {
  std::vector<double> cuts{lo, hi};
  for (double s : splits)
    if (s > lo && s < hi) cuts.push_back(s);
  for (double x = std::ceil(lo); x < hi; x += 1.0)
    if (x > lo) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double acc = 0.0;
  auto dens = [&](double x) { return fn(x) * ref.density(Pt{x, 0, 0}); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    acc += integrate_adaptive(dens, cuts[i], cuts[i + 1], tol);
  return acc;
}

}  // namespace fpk
