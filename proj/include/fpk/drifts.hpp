#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fpk/common.hpp"
#include "fpk/field.hpp"
#include "fpk/quadrature.hpp"

namespace fpk {

enum class DriftFamily { Zero, ConstantShift, Linear, Polynomial, Piecewise, Tabulated, Custom };

inline std::string to_string(DriftFamily f) {
  switch (f) {
    case DriftFamily::Zero: return "zero";
    case DriftFamily::ConstantShift: return "constant-shift";
    case DriftFamily::Linear: return "linear";
    case DriftFamily::Polynomial: return "polynomial";
    case DriftFamily::Piecewise: return "piecewise";
    case DriftFamily::Tabulated: return "tabulated";
    case DriftFamily::Custom: return "custom";
  }
  return "custom";
}

/// The perturbation v in the drift b(x) = -x + v(x).
struct DriftField {
  int dim = 1;
  DriftFamily family = DriftFamily::Zero;
  std::string name = "zero";
  VectorField eval;
  std::vector<double> parameters;
  bool separable = false;  // v(x) = (v1(x1), ..., vd(xd))
  // Per-axis antiderivative A_a(t) = int_0^t v_a(s) ds; set for separable drifts.
  std::function<double(int, double)> axis_antiderivative;
  // 1D points where v is not smooth; quadratures split panels here.
  std::vector<double> kink_points;

  Pt operator()(const Pt& p) const { return eval(p); }
  double magnitude(const Pt& p) const { return eval.magnitude(p); }
  bool is_zero() const { return family == DriftFamily::Zero; }
};

inline DriftField drift_zero(int dim) {
  DriftField d;
  d.dim = dim;
  d.family = DriftFamily::Zero;
  d.name = "zero";
  d.eval = VectorField(dim, [](const Pt&) { return Pt{0, 0, 0}; });
  d.separable = true;
  d.axis_antiderivative = [](int, double) { return 0.0; };
  return d;
}

inline DriftField drift_shift(int dim, const Pt& c, std::string name = "") {
  DriftField d;
  d.dim = dim;
  d.family = DriftFamily::ConstantShift;
  d.name = name.empty() ? ("shift-" + std::to_string(c[0])) : std::move(name);
  d.eval = VectorField(dim, [c](const Pt&) { return c; });
  d.parameters.assign(c.begin(), c.begin() + dim);
  d.separable = true;
  d.axis_antiderivative = [c](int a, double t) { return c[a] * t; };
  return d;
}

/// v(x) = -K x with diagonal K (spec family "linear -Kx").
inline DriftField drift_linear(int dim, const Pt& k, std::string name = "") {
  DriftField d;
  d.dim = dim;
  d.family = DriftFamily::Linear;
  d.name = name.empty() ? ("linear-" + std::to_string(k[0])) : std::move(name);
  d.eval = VectorField(dim, [k, dim](const Pt& p) {
    Pt v{0, 0, 0};
    for (int a = 0; a < dim; ++a) v[a] = -k[a] * p[a];
    return v;
  });
  d.parameters.assign(k.begin(), k.begin() + dim);
  d.separable = true;
  d.axis_antiderivative = [k](int a, double t) { return -0.5 * k[a] * t * t; };
  return d;
}

/// 1D polynomial v(x) = sum_j coeffs[j] x^j.
inline DriftField drift_polynomial(std::vector<double> coeffs, std::string name = "") {
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Polynomial;
  d.name = name.empty() ? "polynomial" : std::move(name);
  d.parameters = coeffs;
  d.eval = VectorField(1, [coeffs](const Pt& p) {
    double v = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) v = v * p[0] + coeffs[j];
    return Pt{v, 0, 0};
  });
  d.separable = true;
  d.axis_antiderivative = [coeffs](int, double t) {
    double s = 0.0, tp = t;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      s += coeffs[j] * tp / static_cast<double>(j + 1);
      tp *= t;
    }
    return s;
  };
  return d;
}

/// 1D saturated-linear drift v(x) = a sign(x) min(|x|, cap).
inline DriftField drift_piecewise_saturated(double a, double cap, std::string name = "") {
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Piecewise;
  d.name = name.empty() ? "piecewise-saturated" : std::move(name);
  d.parameters = {a, cap};
  d.eval = VectorField(1, [a, cap](const Pt& p) {
    const double s = p[0] >= 0 ? 1.0 : -1.0;
    return Pt{a * s * std::min(std::abs(p[0]), cap), 0, 0};
  });
  d.separable = true;
  d.axis_antiderivative = [a, cap](int, double t) {
    const double u = std::abs(t);
    return u <= cap ? 0.5 * a * t * t : a * (0.5 * cap * cap + cap * (u - cap));
  };
  d.kink_points = {-cap, 0.0, cap};
  return d;
}

/// 1D drift from tabulated samples, evaluated by cubic spline.
inline DriftField drift_tabulated(std::vector<double> xs, std::vector<double> vs,
                                  std::string name = "") {
  auto sp = std::make_shared<CubicSpline1D>(std::move(xs), std::move(vs));
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Tabulated;
  d.name = name.empty() ? "tabulated" : std::move(name);
  d.eval = VectorField(1, [sp](const Pt& p) { return Pt{(*sp)(p[0]), 0, 0}; });
  d.separable = true;
  d.axis_antiderivative = [sp](int, double t) {
    return integrate_adaptive([sp](double s) { return (*sp)(s); }, 0.0, t, 1e-12);
  };
  return d;
}

/// 1D v(x) = a sin(w x).
inline DriftField drift_sin(double a, double w, std::string name = "") {
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Custom;
  d.name = name.empty() ? "sin" : std::move(name);
  d.parameters = {a, w};
  d.eval = VectorField(1, [a, w](const Pt& p) { return Pt{a * std::sin(w * p[0]), 0, 0}; });
  d.separable = true;
  d.axis_antiderivative = [a, w](int, double t) { return a * (1.0 - std::cos(w * t)) / w; };
  return d;
}

/// 1D Gaussian bump v(x) = a exp(-(x-m)^2 / (2 s^2)).
inline DriftField drift_gaussian_bump(double a, double m, double s, std::string name = "") {
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Custom;
  d.name = name.empty() ? "gaussian-bump" : std::move(name);
  d.parameters = {a, m, s};
  d.eval = VectorField(1, [a, m, s](const Pt& p) {
    const double u = (p[0] - m) / s;
    return Pt{a * std::exp(-0.5 * u * u), 0, 0};
  });
  d.separable = true;
  d.axis_antiderivative = [a, m, s](int, double t) {
    const double c = a * s * std::sqrt(kPi / 2.0);
    return c * (std::erf((t - m) / (s * std::numbers::sqrt2)) -
                std::erf(-m / (s * std::numbers::sqrt2)));
  };
  return d;
}

/// 1D bounded odd drift v(x) = -a x / (1 + |x|); used for Lyapunov examples.
inline DriftField drift_saturating_inward(double a, std::string name = "") {
  DriftField d;
  d.dim = 1;
  d.family = DriftFamily::Custom;
  d.name = name.empty() ? "saturating-inward" : std::move(name);
  d.parameters = {a};
  d.eval = VectorField(1, [a](const Pt& p) { return Pt{-a * p[0] / (1.0 + std::abs(p[0])), 0, 0}; });
  d.separable = true;
  d.axis_antiderivative = [a](int, double t) {
    const double u = std::abs(t);
    return -a * (u - std::log1p(u));
  };
  d.kink_points = {0.0};
  return d;
}

/// Separable product drift: axis a uses the 1D drift components[a].
inline DriftField drift_product(const std::vector<DriftField>& components, std::string name) {
  const int dim = static_cast<int>(components.size());
  if (dim < 1 || dim > 3) throw ArgumentError("drift_product: need 1..3 components");
  auto comps = std::make_shared<std::vector<DriftField>>(components);
  DriftField d;
  d.dim = dim;
  d.family = DriftFamily::Custom;
  d.name = std::move(name);
  d.separable = true;
  d.eval = VectorField(dim, [comps, dim](const Pt& p) {
    Pt v{0, 0, 0};
    for (int a = 0; a < dim; ++a) v[a] = (*comps)[a].eval(Pt{p[a], 0, 0})[0];
    return v;
  });
  d.axis_antiderivative = [comps](int a, double t) {
    return (*comps)[a].axis_antiderivative(0, t);
  };
  return d;
}

// ---------------------------------------------------------------------------
// Exponential-quadratic closed forms: C exp(a x - q x^2 / 2) in 1D. This
// family contains the stationary densities of shift and linear drifts and is
// closed under the Ornstein-Uhlenbeck semigroup, which the tests use as an
// independent oracle for T_t.
// ---------------------------------------------------------------------------

struct ExpQuad {
  double C = 1.0, a = 0.0, q = 0.0;

  double operator()(double x) const { return C * std::exp(a * x - 0.5 * q * x * x); }

  /// Image under T_t (computed from the Gaussian moment formula
  /// E exp(aZ - qZ^2/2) for Z ~ N(m, s^2) with m = e^{-t} x, s^2 = 1-e^{-2t}).
  ExpQuad semigroup_image(double t) const {
    const double e = std::exp(-t);
    const double s2 = 1.0 - e * e;
    const double den = 1.0 + q * s2;
    ExpQuad out;
    out.q = q * e * e / den;
    out.a = a * e / den;
    out.C = C / std::sqrt(den) * std::exp(0.5 * a * a * s2 / den);
    return out;
  }

  ScalarField to_field() const {
    const ExpQuad g = *this;
    ScalarField f(1, [g](const Pt& p) { return g(p[0]); }, "exp-quad");
    f.set_gradient([g](const Pt& p) {
      return Pt{(g.a - g.q * p[0]) * g(p[0]), 0, 0};
    });
    return f;
  }
};

/// Normalized stationary density for the 1D shift drift v = c: f = e^{cx - c^2/2}.
inline ExpQuad shift_density(double c) { return ExpQuad{std::exp(-0.5 * c * c), c, 0.0}; }

/// Normalized stationary density for the 1D linear drift v = -kx:
/// f = sqrt(1+k) e^{-k x^2 / 2} (mu = N(0, 1/(1+k))).
inline ExpQuad linear_density(double k) { return ExpQuad{std::sqrt(1.0 + k), 0.0, k}; }

// ---------------------------------------------------------------------------
// Probabilists' Hermite polynomials and smooth rapidly-decreasing test
// function batteries with analytic derivatives.
// ---------------------------------------------------------------------------

/// He_k(t) with He_0 = 1, He_1 = t, He_{k+1} = t He_k - k He_{k-1}.
inline double hermite_prob(int k, double t) {
  if (k == 0) return 1.0;
  double hm = 1.0, h = t;
  for (int j = 1; j < k; ++j) {
    const double hn = t * h - static_cast<double>(j) * hm;
    hm = h;
    h = hn;
  }
  return h;
}

/// A smooth test function with analytic gradient and Laplacian.
struct TestFunction {
  std::string name;
  std::function<double(const Pt&)> value;
  std::function<Pt(const Pt&)> gradient;
  std::function<double(const Pt&)> laplacian;
  double c2_norm = 1.0;
};

namespace detail {

// psi_k(t) = He_k(t) exp(-t^2/4) and its first two derivatives.
inline void hermite_bump_eval(int k, double t, double& v, double& dv, double& d2v) {
  const double w = std::exp(-0.25 * t * t);
  const double h = hermite_prob(k, t);
  const double dh = k > 0 ? k * hermite_prob(k - 1, t) : 0.0;
  const double d2h = k > 1 ? static_cast<double>(k) * (k - 1) * hermite_prob(k - 2, t) : 0.0;
  v = h * w;
  dv = (dh - 0.5 * t * h) * w;
  d2v = (d2h - t * dh + (0.25 * t * t - 0.5) * h) * w;
}

inline TestFunction tensor_hermite_bump(const std::array<int, 3>& k, int dim) {
  TestFunction tf;
  tf.name = "hermite-bump";
  for (int a = 0; a < dim; ++a) tf.name += "-" + std::to_string(k[a]);
  tf.value = [k, dim](const Pt& p) {
    double prod = 1.0;
    for (int a = 0; a < dim; ++a) {
      double v, dv, d2v;
      hermite_bump_eval(k[a], p[a], v, dv, d2v);
      prod *= v;
    }
    return prod;
  };
  tf.gradient = [k, dim](const Pt& p) {
    std::array<double, 3> v{1, 1, 1}, dv{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      double d2;
      hermite_bump_eval(k[a], p[a], v[a], dv[a], d2);
    }
    Pt g{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      double prod = dv[a];
      for (int b = 0; b < dim; ++b)
        if (b != a) prod *= v[b];
      g[a] = prod;
    }
    return g;
  };
  tf.laplacian = [k, dim](const Pt& p) {
    std::array<double, 3> v{1, 1, 1}, d2v{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      double dv;
      hermite_bump_eval(k[a], p[a], v[a], dv, d2v[a]);
    }
    double lap = 0.0;
    for (int a = 0; a < dim; ++a) {
      double prod = d2v[a];
      for (int b = 0; b < dim; ++b)
        if (b != a) prod *= v[b];
      lap += prod;
    }
    return lap;
  };
  // C^2 norm sampled on a dense box, then used to rescale the function to
  // unit size: high-degree Hermite factors otherwise reach 1e14 amplitudes
  // that defeat fixed-tolerance quadrature.
  double m = 0.0;
  const int ns = 41;
  for (int i0 = 0; i0 < ns; ++i0)
    for (int i1 = 0; i1 < (dim >= 2 ? ns : 1); ++i1)
      for (int i2 = 0; i2 < (dim >= 3 ? ns : 1); ++i2) {
        Pt p{-10.0 + 0.5 * i0, dim >= 2 ? -10.0 + 0.5 * i1 : 0.0,
             dim >= 3 ? -10.0 + 0.5 * i2 : 0.0};
        m = std::max(m, std::abs(tf.value(p)));
        const Pt g = tf.gradient(p);
        for (int a = 0; a < dim; ++a) m = std::max(m, std::abs(g[a]));
        m = std::max(m, std::abs(tf.laplacian(p)));
      }
  const double scale = m > 0.0 ? 1.0 / m : 1.0;
  auto val = tf.value;
  auto grd = tf.gradient;
  auto lap = tf.laplacian;
  tf.value = [val, scale](const Pt& p) { return scale * val(p); };
  tf.gradient = [grd, scale, dim](const Pt& p) {
    Pt g = grd(p);
    for (int a = 0; a < dim; ++a) g[a] *= scale;
    return g;
  };
  tf.laplacian = [lap, scale](const Pt& p) { return scale * lap(p); };
  tf.c2_norm = 1.0;
  return tf;
}

}  // namespace detail

/// The first `count` tensor Hermite-times-bump test functions, ordered by
/// total polynomial degree.
inline std::vector<TestFunction> hermite_bump_battery(int dim, int count) {
  std::vector<std::array<int, 3>> idx;
  for (int total = 0; static_cast<int>(idx.size()) < count && total <= 24; ++total) {
    for (int k0 = total; k0 >= 0; --k0) {
      if (dim == 1) {
        if (k0 == total) idx.push_back({k0, 0, 0});
        continue;
      }
      for (int k1 = total - k0; k1 >= 0; --k1) {
        if (dim == 2) {
          if (k0 + k1 == total) idx.push_back({k0, k1, 0});
          continue;
        }
        const int k2 = total - k0 - k1;
        if (k2 >= 0) idx.push_back({k0, k1, k2});
      }
    }
  }
  if (static_cast<int>(idx.size()) > count) idx.resize(count);
  std::vector<TestFunction> out;
  out.reserve(idx.size());
  for (const auto& k : idx) out.push_back(detail::tensor_hermite_bump(k, dim));
  return out;
}

/// Seeded random linear combinations of Hermite-bump functions; smooth and
/// rapidly decreasing, with analytic gradients.
inline std::vector<TestFunction> random_smooth_battery(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> deg(0, 6);
  std::vector<TestFunction> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    struct Term {
      std::array<int, 3> k;
      double c;
    };
    auto terms = std::make_shared<std::vector<Term>>();
    for (int j = 0; j < 4; ++j) {
      Term t;
      for (int a = 0; a < 3; ++a) t.k[a] = a < dim ? deg(rng) : 0;
      t.c = coef(rng);
      terms->push_back(t);
    }
    auto parts = std::make_shared<std::vector<TestFunction>>();
    for (const auto& t : *terms) parts->push_back(detail::tensor_hermite_bump(t.k, dim));
    TestFunction tf;
    tf.name = "random-smooth-" + std::to_string(i);
    tf.value = [terms, parts](const Pt& p) {
      double s = 0.0;
      for (std::size_t j = 0; j < terms->size(); ++j) s += (*terms)[j].c * (*parts)[j].value(p);
      return s;
    };
    tf.gradient = [terms, parts, dim](const Pt& p) {
      Pt g{0, 0, 0};
      for (std::size_t j = 0; j < terms->size(); ++j) {
        const Pt gj = (*parts)[j].gradient(p);
        for (int a = 0; a < dim; ++a) g[a] += (*terms)[j].c * gj[a];
      }
      return g;
    };
    tf.laplacian = [terms, parts](const Pt& p) {
      double s = 0.0;
      for (std::size_t j = 0; j < terms->size(); ++j)
        s += (*terms)[j].c * (*parts)[j].laplacian(p);
      return s;
    };
    double c2 = 0.0;
    for (const auto& pt : *parts) c2 += pt.c2_norm;
    tf.c2_norm = c2;
    out.push_back(std::move(tf));
  }
  return out;
}

}  // namespace fpk
