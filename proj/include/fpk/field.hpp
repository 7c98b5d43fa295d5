#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/grid.hpp"

namespace fpk {

enum class Extrapolation { Constant, Error };

/// A scalar field on R^d evaluable anywhere: either a closed form, or nodal
/// values on a grid with cubic interpolation (constant extrapolation toward
/// the grid boundary value unless configured to throw).
class ScalarField {
 public:
  ScalarField() = default;

  ScalarField(int dim, std::function<double(const Pt&)> f, std::string tag = "")
      : dim_(dim), fn_(std::move(f)), tag_(std::move(tag)) {}

  static ScalarField from_grid(std::shared_ptr<const QuadratureGrid> grid,
                               std::vector<double> values,
                               Extrapolation ex = Extrapolation::Constant) {
    if (!grid) throw ArgumentError("ScalarField::from_grid: null grid");
    if (values.size() != grid->size())
      throw ArgumentError("ScalarField::from_grid: value count mismatch");
    ScalarField f;
    f.dim_ = grid->dim;
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    f.extrap_ = ex;
    if (f.grid_->dim == 1) {
      f.spline_ = std::make_shared<CubicSpline1D>(f.grid_->axis_nodes[0], f.values_);
    } else if (f.grid_->uniform_axes()) {
      std::array<std::vector<double>, 3> ax;
      for (int a = 0; a < f.grid_->dim; ++a) ax[a] = f.grid_->axis_nodes[a];
      f.interp_ = std::make_shared<UniformCubicInterp>(f.grid_->dim, std::move(ax), f.values_);
    }
    return f;
  }

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_) || grid_ != nullptr; }
  bool has_closed_form() const { return static_cast<bool>(fn_); }
  const std::string& tag() const { return tag_; }

  void set_gradient(std::function<Pt(const Pt&)> g) { grad_ = std::move(g); }
  bool has_gradient() const { return static_cast<bool>(grad_); }
  Pt gradient(const Pt& p) const {
    if (!grad_) throw UnsupportedInputError("ScalarField: no gradient available");
    return grad_(p);
  }

  const std::shared_ptr<const QuadratureGrid>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(const Pt& p) const {
    if (fn_) return fn_(p);
    if (spline_) {
      if (extrap_ == Extrapolation::Error && !spline_->inside(p[0]))
        throw DomainError("ScalarField: evaluation outside truncated support");
      return (*spline_)(p[0]);
    }
    if (interp_) {
      if (extrap_ == Extrapolation::Error && !interp_->inside(p))
        throw DomainError("ScalarField: evaluation outside truncated support");
      return (*interp_)(p);
    }
    throw UnsupportedInputError(
        "ScalarField: off-grid evaluation requires a closed form, a 1D grid, or a uniform grid");
  }

  /// Scales the field by a constant, preserving closed-form status.
  ScalarField scaled(double c) const {
    if (fn_) {
      auto f = fn_;
      ScalarField out(dim_, [f, c](const Pt& p) { return c * f(p); }, tag_);
      if (grad_) {
        auto g = grad_;
        out.set_gradient([g, c, d = dim_](const Pt& p) {
          Pt v = g(p);
          for (int i = 0; i < d; ++i) v[i] *= c;
          return v;
        });
      }
      return out;
    }
    if (grid_) {
      std::vector<double> v = values_;
      for (double& x : v) x *= c;
      return from_grid(grid_, std::move(v), extrap_);
    }
    throw UnsupportedInputError("ScalarField::scaled on empty field");
  }

 private:
  int dim_ = 0;
  std::function<double(const Pt&)> fn_;
  std::function<Pt(const Pt&)> grad_;
  std::string tag_;
  std::shared_ptr<const QuadratureGrid> grid_;
  std::vector<double> values_;
  Extrapolation extrap_ = Extrapolation::Constant;
  std::shared_ptr<CubicSpline1D> spline_;
  std::shared_ptr<UniformCubicInterp> interp_;
};

/// Vector field on R^d; closed-form only (all drift families have one).
class VectorField {
 public:
  VectorField() = default;
  VectorField(int dim, std::function<Pt(const Pt&)> f) : dim_(dim), fn_(std::move(f)) {}

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }
  Pt operator()(const Pt& p) const { return fn_(p); }

  double magnitude(const Pt& p) const {
    const Pt v = fn_(p);
    return norm2(v, dim_);
  }

 private:
  int dim_ = 0;
  std::function<Pt(const Pt&)> fn_;
};

/// A density f relative to a Gaussian reference measure: nodal values on a
/// grid plus an optional closed form used for off-grid evaluation.
struct DensityFn {
  std::shared_ptr<const QuadratureGrid> grid;
  std::vector<double> values;
  ScalarField form;             // closed form if available, else grid interpolant
  GaussianSpec reference;       // which Gaussian measure the density is relative to
  bool probability = false;
  double prob_tol = 1e-8;
  // 1D points where the density is not smooth; quadratures split panels here.
  std::vector<double> kinks;

  double eval(const Pt& p) const { return form(p); }

  /// Total mass against the reference measure. Densities with registered 1D
  /// kinks are integrated adaptively (grid quadrature loses several digits on
  /// non-smooth integrands); smooth densities use their grid.
  double mass() const {
    if (grid->dim == 1 && !kinks.empty() && form.has_closed_form()) {
      return integrate_1d_reference([this](double x) { return form(Pt{x, 0, 0}); }, reference,
                                    grid->axis_nodes[0].front() - 2.0,
                                    grid->axis_nodes[0].back() + 2.0, kinks);
    }
    return grid->integrate_values(values);
  }

  void validate() const {
    if (!grid) throw ArgumentError("DensityFn: missing grid");
    if (values.size() != grid->size()) throw ArgumentError("DensityFn: value count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!(values[i] >= -1e-12) || !std::isfinite(values[i]))
        throw ArgumentError("DensityFn: negative or non-finite nodal value at index " +
                            std::to_string(i));
    if (probability) {
      const double m = mass();
      if (std::abs(m - 1.0) > prob_tol)
        throw ArgumentError("DensityFn: probability flag set but mass = " + std::to_string(m));
    }
  }
};

/// Builds a density from a closed form by sampling it on the grid.
inline DensityFn density_from_form(std::shared_ptr<const QuadratureGrid> grid, ScalarField form,
                                   GaussianSpec reference, bool probability = false) {
  DensityFn f;
  f.grid = std::move(grid);
  f.values.resize(f.grid->size());
  for (std::size_t i = 0; i < f.grid->size(); ++i) {
    double v = form(f.grid->nodes[i]);
    if (v < 0.0 && v > -1e-12) v = 0.0;
    f.values[i] = v;
  }
  f.form = std::move(form);
  f.reference = std::move(reference);
  f.probability = probability;
  f.validate();
  return f;
}

/// Builds a density from nodal values; off-grid evaluation interpolates.
inline DensityFn density_from_values(std::shared_ptr<const QuadratureGrid> grid,
                                     std::vector<double> values, GaussianSpec reference,
                                     bool probability = false) {
  DensityFn f;
  f.grid = grid;
  for (double& v : values)
    if (v < 0.0 && v > -1e-12) v = 0.0;
  f.values = values;
  f.form = ScalarField::from_grid(std::move(grid), std::move(values));
  f.reference = std::move(reference);
  f.probability = probability;
  f.validate();
  return f;
}

/// Rescales f so it integrates to 1 against its reference measure.
inline DensityFn normalize(const DensityFn& f) {
  const double m = f.mass();
  if (!std::isfinite(m) || m <= 0.0)
    throw DegenerateInputError("normalize: density has zero, negative, or non-finite mass");
  DensityFn out = f;
  for (double& v : out.values) v /= m;
  out.form = f.form.scaled(1.0 / m);
  out.probability = true;
  out.prob_tol = 1e-12;
  return out;
}

}  // namespace fpk
