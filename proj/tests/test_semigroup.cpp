#include <catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "fpk/semigroup.hpp"

using namespace fpk;

namespace {
const auto kGrid = build_grid(1, 60, GridKind::GaussHermiteTensor);
}

TEST_CASE("T_t fixes constants and is the identity at t = 0") {
  const ScalarField one(1, [](const Pt&) { return 1.0; });
  for (double t : {0.0, 0.1, 0.7, 2.0}) {
    const auto v = apply_Tt_values(one, SemigroupParams{t, 40, std::nullopt}, *kGrid);
    for (double x : v) REQUIRE(x == Catch::Approx(1.0).margin(1e-13));
  }
  const ScalarField f(1, [](const Pt& p) { return std::sin(3.0 * p[0]); });
  const auto v0 = apply_Tt_values(f, SemigroupParams{0.0, 40, std::nullopt}, *kGrid);
  for (std::size_t i = 0; i < kGrid->size(); ++i)
    REQUIRE(v0[i] == f(kGrid->nodes[i]));  // exact short-circuit
}

TEST_CASE("T_t of the coordinate decays as e^{-t}") {
  const ScalarField x(1, [](const Pt& p) { return p[0]; });
  for (double t : {0.05, 0.3, 1.0}) {
    const auto v = apply_Tt_values(x, SemigroupParams{t, 40, std::nullopt}, *kGrid);
    for (std::size_t i = 0; i < kGrid->size(); ++i)
      REQUIRE(v[i] == Catch::Approx(std::exp(-t) * kGrid->nodes[i][0]).margin(1e-12));
  }
}

TEST_CASE("T_t on the exponential family matches the closed-form image") {
  const ExpQuad f = shift_density(0.8);
  for (double t : {0.1, 0.5}) {
    const ExpQuad ft = f.semigroup_image(t);
    const auto v = apply_Tt_values(f.to_field(), SemigroupParams{t, 40, std::nullopt}, *kGrid);
    for (std::size_t i = 0; i < kGrid->size(); ++i)
      REQUIRE(v[i] == Catch::Approx(ft(kGrid->nodes[i][0])).epsilon(1e-11));
  }
}

TEST_CASE("T_t closed form cross-checked by seeded Monte Carlo") {
  const double c = 0.6, t = 0.4;
  const ExpQuad f = shift_density(c);
  const ExpQuad ft = f.semigroup_image(t);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double x = 0.7;
  const double e = std::exp(-t), s = std::sqrt(1.0 - e * e);
  double acc = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) acc += f(e * x - s * gauss(rng));
  acc /= n;
  REQUIRE(acc == Catch::Approx(ft(x)).epsilon(4e-3));
}

TEST_CASE("T_t preserves mass and positivity") {
  const ExpQuad f = linear_density(1.0);
  for (double t : {0.1, 0.6}) {
    const auto v = apply_Tt_values(f.to_field(), SemigroupParams{t, 60, std::nullopt}, *kGrid);
    double mass = 0.0;
    for (std::size_t i = 0; i < kGrid->size(); ++i) {
      REQUIRE(v[i] >= 0.0);
      mass += kGrid->weights[i] * v[i];
    }
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("semigroup law T_s T_t = T_{s+t} on smooth densities") {
  const ExpQuad f = shift_density(0.5);
  const double s = 0.3, t = 0.45;
  const ScalarField once = apply_Tt(f.to_field(), SemigroupParams{t, 40, std::nullopt});
  const auto twice = apply_Tt_values(once, SemigroupParams{s, 40, std::nullopt}, *kGrid);
  const auto direct = apply_Tt_values(f.to_field(), SemigroupParams{s + t, 40, std::nullopt}, *kGrid);
  double l1 = 0.0;
  for (std::size_t i = 0; i < kGrid->size(); ++i)
    l1 += kGrid->weights[i] * std::abs(twice[i] - direct[i]);
  REQUIRE(l1 < 1e-7);
}

TEST_CASE("negative time is rejected") {
  const ScalarField one(1, [](const Pt&) { return 1.0; });
  REQUIRE_THROWS_AS(apply_Tt_values(one, SemigroupParams{-0.1, 40, std::nullopt}, *kGrid),
                    ArgumentError);
}

TEST_CASE("gradient paths agree and obey the sup-norm bound") {
  const ScalarField f(1, [](const Pt& p) { return std::sin(p[0]); });
  ScalarField fg = f;
  fg.set_gradient([](const Pt& p) { return Pt{std::cos(p[0]), 0, 0}; });
  const SemigroupParams params{0.3, 60, std::nullopt};
  for (double x : {-1.1, 0.0, 0.8, 2.2}) {
    const Pt gi = grad_Tt_at(fg, params, Pt{x, 0, 0}, GradPath::Identity);
    const Pt gk = grad_Tt_at(fg, params, Pt{x, 0, 0}, GradPath::Kernel);
    REQUIRE(gi[0] == Catch::Approx(gk[0]).margin(1e-7));
  }
  // |grad T_s phi| <= e^{-s} (1-e^{-2s})^{-1/2} ||phi||_inf on bounded fields
  for (double s : {0.05, 0.2, 1.0}) {
    const double bound = std::exp(-s) / std::sqrt(1.0 - std::exp(-2.0 * s));
    const SemigroupParams ps{s, 60, std::nullopt};
    for (const double amp : {1.0, 0.3}) {
      const ScalarField b(1, [amp](const Pt& p) { return amp * std::tanh(2.0 * p[0]); });
      for (double x : {-2.0, -0.5, 0.4, 1.7}) {
        const Pt g = grad_Tt_at(b, ps, Pt{x, 0, 0}, GradPath::Kernel);
        REQUIRE(std::abs(g[0]) <= bound * amp + 1e-9);
      }
    }
  }
  // derivative of T_t x is e^{-t}
  const ScalarField coord(1, [](const Pt& p) { return p[0]; });
  const Pt g = grad_Tt_at(coord, params, Pt{0.3, 0, 0}, GradPath::Kernel);
  REQUIRE(g[0] == Catch::Approx(std::exp(-0.3)).margin(1e-10));
  REQUIRE_THROWS_AS(grad_Tt_at(f, SemigroupParams{0.0, 40, std::nullopt}, Pt{0, 0, 0}),
                    UnsupportedInputError);
}

TEST_CASE("regularized divergence of the zero and constant fields") {
  auto grid = build_grid(1, 40, GridKind::GaussHermiteTensor);
  const RegularizedDivergence z = regularized_divergence(drift_zero(1), 0.3, grid);
  for (double v : z.values) REQUIRE(v == Catch::Approx(0.0).margin(1e-14));

  // u = 1 constant: div_gamma u = -x is classical, so T_s div_gamma u = -e^{-s} x
  const double s = 0.4;
  const RegularizedDivergence rd = regularized_divergence(drift_shift(1, Pt{1, 0, 0}), s, grid);
  for (std::size_t i = 0; i < grid->size(); ++i)
    REQUIRE(rd.values[i] == Catch::Approx(-std::exp(-s) * grid->nodes[i][0]).margin(1e-10));
  REQUIRE(rd.mean == Catch::Approx(0.0).margin(3e-8 * (1.0 + rd.u_l1)));
  const double u1_bound = std::exp(-s) / std::sqrt(1.0 - std::exp(-2.0 * s)) * rd.u_l1;
  REQUIRE(rd.l1_norm <= u1_bound + 1e-6);
  REQUIRE(rd.l1_norm <= rd.u_l1 / std::sqrt(2.0 * s) + 1e-6);
  REQUIRE_THROWS_AS(regularized_divergence(drift_zero(1), 0.0, grid), ArgumentError);
}

TEST_CASE("regularized divergence agrees with T_s of the classical divergence") {
  // u(x) = sin(x): div_gamma u = cos(x) - x sin(x), smooth; compare both routes
  auto grid = build_grid(1, 50, GridKind::GaussHermiteTensor);
  const DriftField u = drift_sin(1.0, 1.0);
  const double s = 0.35;
  const RegularizedDivergence rd = regularized_divergence(u, s, grid, 60);
  const ScalarField classical(1, [](const Pt& p) {
    return std::cos(p[0]) - p[0] * std::sin(p[0]);
  });
  const auto direct = apply_Tt_values(classical, SemigroupParams{s, 60, std::nullopt}, *grid);
  for (std::size_t i = 0; i < grid->size(); ++i)
    REQUIRE(rd.values[i] == Catch::Approx(direct[i]).margin(1e-9));
}

TEST_CASE("weak identity for the regularized divergence") {
  auto grid = build_grid(1, 60, GridKind::GaussHermiteTensor);
  const DriftField u = drift_gaussian_bump(0.7, 0.3, 0.9);
  const double s = 0.25;
  const RegularizedDivergence rd = regularized_divergence(u, s, grid, 60);
  const auto battery = random_smooth_battery(1, 8, 99);
  const SemigroupParams ps{s, 60, std::nullopt};
  for (const auto& tf : battery) {
    // LHS: int phi T_s div_gamma u dgamma
    double lhs = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
      lhs += grid->weights[i] * tf.value(grid->nodes[i]) * rd.values[i];
    // RHS: -e^{-s} int <grad phi, T_s u> dgamma
    double rhs = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const auto k = fpk::detail::make_kernel(1, ps);
      double tsu = 0.0;
      for (std::size_t j = 0; j < k.inner->size(); ++j)
        tsu += k.inner->weights[j] * u(k.displaced(grid->nodes[i], k.inner->nodes[j]))[0];
      rhs += grid->weights[i] * tf.gradient(grid->nodes[i])[0] * tsu;
    }
    rhs *= -std::exp(-s);
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-6));
  }
}

TEST_CASE("A_t fixes constants and contracts the coordinate") {
  auto grid = build_grid(1, 40, GridKind::GaussHermiteTensor);
  DensityFn one = density_from_form(
      grid, ScalarField(1, [](const Pt&) { return 1.0; }), GaussianSpec::standard(1), true);
  const auto v1 = apply_At_values(one, 0.8);
  for (double v : v1) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));

  DensityFn coord = density_from_form(
      grid, ScalarField(1, [](const Pt& p) { return p[0] + 20.0; }), GaussianSpec::standard(1));
  // linearity: A_t(x + 20) = ((1-e^{-t})/t) x + 20
  const double t = 0.8;
  const auto vx = apply_At_values(coord, t);
  const double factor = (1.0 - std::exp(-t)) / t;
  for (std::size_t i = 0; i < grid->size(); ++i)
    REQUIRE(vx[i] == Catch::Approx(factor * grid->nodes[i][0] + 20.0).margin(1e-9));
  REQUIRE_THROWS_AS(apply_At_values(one, 0.0), ArgumentError);

  // mass preservation on the shift example
  DensityFn sh = density_from_form(grid, shift_density(0.5).to_field(), GaussianSpec::standard(1), true);
  const auto va = apply_At_values(sh, 0.5);
  REQUIRE(grid->integrate_values(va) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("T_t^B reduces to T_t at B = I and scales decay rates") {
  auto grid = build_grid(1, 40, GridKind::GaussHermiteTensor);
  const ScalarField f(1, [](const Pt& p) { return std::exp(0.3 * p[0]); });
  SemigroupParams plain{0.4, 40, std::nullopt};
  SemigroupParams withB{0.4, 40, GaussianSpec::standard(1)};
  const auto v1 = apply_Tt_values(f, plain, *grid);
  const auto v2 = apply_Tt_values(f, withB, *grid);
  for (std::size_t i = 0; i < grid->size(); ++i)
    REQUIRE(v2[i] == Catch::Approx(v1[i]).margin(1e-12));

  // 1D B = 2: T_t^B x = e^{-2t} x
  Eigen::MatrixXd B(1, 1);
  B << 2.0;
  SemigroupParams p2{0.3, 40, GaussianSpec(1, B)};
  const ScalarField coord(1, [](const Pt& p) { return p[0]; });
  const auto v3 = apply_Tt_values(coord, p2, *grid);
  for (std::size_t i = 0; i < grid->size(); ++i)
    REQUIRE(v3[i] == Catch::Approx(std::exp(-0.6) * grid->nodes[i][0]).margin(1e-12));

  // constants stay fixed
  const ScalarField one(1, [](const Pt&) { return 1.0; });
  const auto v4 = apply_Tt_values(one, p2, *grid);
  for (double v : v4) REQUIRE(v == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("Duhamel reconstruction vanishes for zero drift") {
  auto grid = build_grid(1, 40, GridKind::GaussHermiteTensor);
  DensityFn one = density_from_form(
      grid, ScalarField(1, [](const Pt&) { return 1.0; }), GaussianSpec::standard(1), true);
  const auto d = duhamel_reconstruct(one, drift_zero(1), 0.2);
  for (double v : d) REQUIRE(v == Catch::Approx(0.0).margin(1e-12));
  REQUIRE_THROWS_AS(duhamel_reconstruct(one, drift_zero(1), 0.0), ArgumentError);
}
