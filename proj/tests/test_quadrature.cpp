#include <catch_amalgamated.hpp>
#include <cmath>

#include "fpk/quadrature.hpp"

using namespace fpk;

TEST_CASE("two-point Gauss-Hermite rule for the unit-variance weight") {
  const Rule1D r = gauss_hermite_prob(2);
  REQUIRE(r.nodes[0] == Catch::Approx(-1.0).margin(1e-14));
  REQUIRE(r.nodes[1] == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(r.weights[0] == Catch::Approx(0.5).margin(1e-14));
  REQUIRE(r.weights[1] == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("Gauss-Hermite moments against closed forms") {
  for (int order : {2, 8, 20, 40, 80}) {
    const Rule1D r = gauss_hermite_prob(order);
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < order; ++i) {
      w += r.weights[i];
      m1 += r.weights[i] * r.nodes[i];
      m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
    }
    REQUIRE(w == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(m1 == Catch::Approx(0.0).margin(1e-10));
    REQUIRE(m2 == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("Gauss-Hermite integrates the Gaussian MGF") {
  // oracle: int e^{cx} dgamma = e^{c^2/2}
  const Rule1D r = gauss_hermite_prob(20);
  const double c = 0.5;
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::exp(c * r.nodes[i]);
  REQUIRE(acc == Catch::Approx(std::exp(0.5 * c * c)).margin(1e-10));
}

TEST_CASE("Gauss-Legendre on an interval") {
  const Rule1D r = gauss_legendre(8, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * r.nodes[i] * r.nodes[i];
  REQUIRE(acc == Catch::Approx(1.0 / 3.0).margin(1e-14));
  double total = 0.0;
  for (double w : r.weights) total += w;
  REQUIRE(total == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("adaptive Simpson handles smooth integrands to tight tolerance") {
  const double v = integrate_adaptive([](double x) { return std::exp(-x * x); }, -6.0, 6.0, 1e-13);
  REQUIRE(v == Catch::Approx(std::sqrt(kPi)).margin(1e-11));
}

TEST_CASE("cubic spline reproduces smooth functions between nodes") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 60; ++i) {
    const double x = -3.0 + 0.1 * i;
    xs.push_back(x);
    ys.push_back(std::sin(x));
  }
  const CubicSpline1D s(xs, ys);
  for (double x : {-2.35, -0.72, 0.44, 1.93})
    REQUIRE(s(x) == Catch::Approx(std::sin(x)).margin(5e-6));
  // natural boundary layer: looser near the ends
  REQUIRE(s(2.88) == Catch::Approx(std::sin(2.88)).margin(5e-5));
  // constant extrapolation beyond the ends
  REQUIRE(s(5.0) == Catch::Approx(std::sin(3.0)).margin(1e-15));
}

TEST_CASE("uniform cubic interpolation in 2D") {
  std::array<std::vector<double>, 3> ax;
  for (int i = 0; i < 41; ++i) ax[0].push_back(-2.0 + 0.1 * i);
  ax[1] = ax[0];
  std::vector<double> vals(41 * 41);
  auto f = [](double x, double y) { return std::exp(-0.3 * x * x - 0.2 * y * y + 0.1 * x * y); };
  for (int i = 0; i < 41; ++i)
    for (int j = 0; j < 41; ++j) vals[i * 41 + j] = f(ax[0][i], ax[1][j]);
  const UniformCubicInterp interp(2, ax, vals);
  for (auto [x, y] : {std::pair{0.13, -0.41}, {1.27, 0.88}, {-1.62, 1.33}})
    REQUIRE(interp(Pt{x, y, 0}) == Catch::Approx(f(x, y)).margin(2e-5));
}

TEST_CASE("Bernoulli function is stable near zero") {
  REQUIRE(bernoulli_fn(0.0) == Catch::Approx(1.0));
  REQUIRE(bernoulli_fn(1e-9) == Catch::Approx(1.0 - 0.5e-9).epsilon(1e-12));
  REQUIRE(bernoulli_fn(2.0) == Catch::Approx(2.0 / (std::exp(2.0) - 1.0)).epsilon(1e-13));
  // identity B(-t) - B(t) = t underlies flux consistency
  for (double t : {1e-7, 0.3, 2.5})
    REQUIRE(bernoulli_fn(-t) - bernoulli_fn(t) == Catch::Approx(t).margin(1e-15));
}
