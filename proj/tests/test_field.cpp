#include <catch_amalgamated.hpp>
#include <cmath>

#include "fpk/drifts.hpp"
#include "fpk/field.hpp"

using namespace fpk;

namespace {
DensityFn make_const_density(double c, int order = 40) {
  auto g = build_grid(1, order, GridKind::GaussHermiteTensor);
  return density_from_form(g, ScalarField(1, [c](const Pt&) { return c; }), GaussianSpec::standard(1));
}
}  // namespace

TEST_CASE("normalize rescales to unit mass and is idempotent") {
  const DensityFn f2 = make_const_density(2.0);
  const DensityFn n1 = normalize(f2);
  for (double v : n1.values) REQUIRE(v == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(n1.mass() == Catch::Approx(1.0).margin(1e-12));
  const DensityFn n2 = normalize(n1);
  for (std::size_t i = 0; i < n1.values.size(); ++i)
    REQUIRE(n2.values[i] == Catch::Approx(n1.values[i]).margin(1e-15));
}

TEST_CASE("normalize of the MGF density matches the closed form") {
  const double c = 0.7;
  auto g = build_grid(1, 40, GridKind::GaussHermiteTensor);
  DensityFn f = density_from_form(g, ScalarField(1, [c](const Pt& p) { return std::exp(c * p[0]); }),
                                  GaussianSpec::standard(1));
  const DensityFn n = normalize(f);
  // oracle: e^{cx} / E e^{cx} = e^{cx - c^2/2}
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x = g->nodes[i][0];
    REQUIRE(n.values[i] == Catch::Approx(std::exp(c * x - 0.5 * c * c)).epsilon(1e-12));
  }
}

TEST_CASE("normalize rejects degenerate input") {
  const DensityFn zero = make_const_density(0.0);
  REQUIRE_THROWS_AS(normalize(zero), DegenerateInputError);
}

TEST_CASE("density validation rejects negatives and bad masses") {
  auto g = build_grid(1, 10, GridKind::GaussHermiteTensor);
  std::vector<double> vals(g->size(), 1.0);
  vals[3] = -0.5;
  REQUIRE_THROWS_AS(density_from_values(g, vals, GaussianSpec::standard(1)), ArgumentError);
  std::vector<double> twos(g->size(), 2.0);
  REQUIRE_THROWS_AS(density_from_values(g, twos, GaussianSpec::standard(1), true), ArgumentError);
}

TEST_CASE("grid-backed field interpolates and clamps outside the support") {
  auto g = build_grid(1, 60, GridKind::GaussHermiteTensor);
  std::vector<double> vals(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) vals[i] = std::cos(g->nodes[i][0]);
  const ScalarField f = ScalarField::from_grid(g, vals);
  REQUIRE(f(Pt{0.37, 0, 0}) == Catch::Approx(std::cos(0.37)).margin(1e-4));
  const double edge = g->axis_nodes[0].back();
  REQUIRE(f(Pt{edge + 5.0, 0, 0}) == Catch::Approx(std::cos(edge)).margin(1e-12));
}

TEST_CASE("drift families evaluate and integrate consistently") {
  const DriftField shift = drift_shift(1, Pt{0.5, 0, 0});
  REQUIRE(shift(Pt{3.0, 0, 0})[0] == 0.5);
  REQUIRE(shift.axis_antiderivative(0, 2.0) == Catch::Approx(1.0));

  const DriftField lin = drift_linear(1, Pt{2.0, 0, 0});
  REQUIRE(lin(Pt{1.5, 0, 0})[0] == Catch::Approx(-3.0));
  REQUIRE(lin.axis_antiderivative(0, 2.0) == Catch::Approx(-4.0));

  const DriftField pw = drift_piecewise_saturated(1.0, 1.0);
  REQUIRE(pw(Pt{0.4, 0, 0})[0] == Catch::Approx(0.4));
  REQUIRE(pw(Pt{-3.0, 0, 0})[0] == Catch::Approx(-1.0));
  REQUIRE(pw.axis_antiderivative(0, 2.0) == Catch::Approx(0.5 + 1.0));
  REQUIRE(pw.axis_antiderivative(0, -2.0) == Catch::Approx(0.5 + 1.0));

  const DriftField sn = drift_sin(0.8, 2.0);
  REQUIRE(sn.axis_antiderivative(0, 1.0) == Catch::Approx(0.8 * (1.0 - std::cos(2.0)) / 2.0));

  const DriftField gb = drift_gaussian_bump(1.0, 0.5, 0.7);
  const double numeric = integrate_adaptive(
      [&](double s) { return gb(Pt{s, 0, 0})[0]; }, 0.0, 2.0, 1e-13);
  REQUIRE(gb.axis_antiderivative(0, 2.0) == Catch::Approx(numeric).margin(1e-11));

  // every family returns finite values on a generous box
  for (const auto& d : {shift, lin, pw, sn, gb}) {
    for (double x = -10.0; x <= 10.0; x += 0.5) REQUIRE(std::isfinite(d(Pt{x, 0, 0})[0]));
  }
}

TEST_CASE("exp-quad closed family matches its own semigroup rule at t=0") {
  const ExpQuad f = shift_density(1.0);
  const ExpQuad g = f.semigroup_image(0.0);
  REQUIRE(g.C == Catch::Approx(f.C));
  REQUIRE(g.a == Catch::Approx(f.a));
  REQUIRE(g.q == Catch::Approx(f.q));
}

TEST_CASE("hermite battery derivatives agree with finite differences") {
  const auto battery = hermite_bump_battery(1, 6);
  const double h = 1e-5;
  for (const auto& tf : battery) {
    for (double x : {-1.3, 0.2, 2.4}) {
      const Pt p{x, 0, 0};
      const double fd_grad = (tf.value(Pt{x + h, 0, 0}) - tf.value(Pt{x - h, 0, 0})) / (2 * h);
      REQUIRE(tf.gradient(p)[0] == Catch::Approx(fd_grad).margin(1e-7 * (1 + tf.c2_norm)));
      const double fd_lap =
          (tf.value(Pt{x + h, 0, 0}) - 2 * tf.value(p) + tf.value(Pt{x - h, 0, 0})) / (h * h);
      REQUIRE(tf.laplacian(p) == Catch::Approx(fd_lap).margin(1e-4 * (1 + tf.c2_norm)));
    }
  }
}
