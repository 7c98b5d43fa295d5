#include <catch_amalgamated.hpp>
#include <cmath>

#include "fpk/solver.hpp"

using namespace fpk;

namespace {
const auto kGrid80 = build_grid(1, 80, GridKind::GaussHermiteTensor);
}

TEST_CASE("explicit 1D solver: zero drift gives the flat density") {
  const StationarySolution sol = solve_1d_explicit(drift_zero(1), kGrid80);
  for (double v : sol.f.values) REQUIRE(v == Catch::Approx(1.0).margin(1e-13));
  REQUIRE(sol.residual <= 1e-12);
  REQUIRE(sol.v_l1_mu == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("explicit 1D solver: constant shift matches the closed form") {
  const double c = 0.5;
  const StationarySolution sol = solve_1d_explicit(drift_shift(1, Pt{c, 0, 0}), kGrid80);
  const ExpQuad oracle = shift_density(c);
  for (std::size_t i = 0; i < kGrid80->size(); ++i)
    REQUIRE(sol.f.values[i] == Catch::Approx(oracle(kGrid80->nodes[i][0])).epsilon(1e-11));
  REQUIRE(sol.residual <= 1e-10);
  REQUIRE(sol.v_l1_mu == Catch::Approx(c).margin(1e-11));
  REQUIRE(sol.f.mass() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("explicit 1D solver: linear drift gives the narrower Gaussian") {
  const double k = 1.0;
  const StationarySolution sol = solve_1d_explicit(drift_linear(1, Pt{k, 0, 0}), kGrid80);
  const ExpQuad oracle = linear_density(k);  // sqrt(2) e^{-x^2/2}, mu = N(0, 1/2)
  for (std::size_t i = 0; i < kGrid80->size(); ++i)
    REQUIRE(sol.f.values[i] == Catch::Approx(oracle(kGrid80->nodes[i][0])).epsilon(1e-11));
  // ||v||_{L^1(mu)} = k E_mu|x| = k sqrt(2/(pi (1+k)))
  REQUIRE(sol.v_l1_mu == Catch::Approx(k * std::sqrt(2.0 / (kPi * (1.0 + k)))).margin(1e-10));
}

TEST_CASE("explicit 1D solver: piecewise drift solves to tight residual") {
  const StationarySolution sol = solve_1d_explicit(drift_piecewise_saturated(1.0, 1.0), kGrid80);
  REQUIRE(sol.residual <= 1e-10);
  REQUIRE(sol.f.mass() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(std::isfinite(sol.v_l1_mu));
}

TEST_CASE("explicit 1D solver rejects non-integrable drifts") {
  // v = x^3 outruns the Gaussian factor
  REQUIRE_THROWS_AS(solve_1d_explicit(drift_polynomial({0.0, 0.0, 0.0, 1.0}), kGrid80),
                    NonIntegrableDriftError);
}

TEST_CASE("zero drift short-circuit: scaling v by 0 gives f = 1 exactly") {
  DriftField v = drift_shift(1, Pt{0.0, 0, 0});
  const StationarySolution sol = solve_1d_explicit(v, kGrid80);
  for (double x : sol.f.values) REQUIRE(x == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("grid solver in degenerate 1-axis mode matches the explicit solution") {
  const DriftField v = drift_piecewise_saturated(1.0, 1.0);
  const StationarySolution exact = solve_1d_explicit(v, kGrid80);
  auto eval_exact = [&](double x) { return exact.f.eval(Pt{x, 0, 0}); };

  double prev_err = 0.0;
  for (int order : {161, 321}) {
    auto g = build_grid(1, order, GridKind::UniformTruncated, 8.0);
    const StationarySolution gs = solve_grid(v, g, std::nullopt, 1e-4);
    double l1 = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i)
      l1 += g->weights[i] * std::abs(gs.f.values[i] - eval_exact(g->nodes[i][0]));
    if (order == 161) {
      REQUIRE(l1 <= 1e-3);
      prev_err = l1;
    } else {
      REQUIRE(l1 <= 0.55 * prev_err);  // first order or better
    }
  }
}

TEST_CASE("grid solver 2D: zero drift recovers the flat density") {
  auto g = build_grid(2, 81, GridKind::UniformTruncated, 8.0);
  const StationarySolution sol = solve_grid(drift_zero(2), g);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) l1 += g->weights[i] * std::abs(sol.f.values[i] - 1.0);
  REQUIRE(l1 <= 1e-6);
  REQUIRE(sol.residual <= 1e-5);
}

TEST_CASE("grid solver 2D: linear drift v = (I-B)x gives N(0, B^{-1})") {
  // b = -Bx with B = diag(1,2): f = sqrt(2) exp(-x2^2/2)
  auto g = build_grid(2, 81, GridKind::UniformTruncated, 8.0);
  DriftField v(drift_linear(2, Pt{0.0, 1.0, 0}));
  const StationarySolution sol = solve_grid(v, g);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x2 = g->nodes[i][1];
    l1 += g->weights[i] * std::abs(sol.f.values[i] - std::sqrt(2.0) * std::exp(-0.5 * x2 * x2));
  }
  REQUIRE(l1 <= 1e-3);
  REQUIRE(sol.residual <= 1e-5);
}

TEST_CASE("grid solver 2D: constant shift gives the translated Gaussian") {
  auto g = build_grid(2, 81, GridKind::UniformTruncated, 8.0);
  const double c = 0.3;
  const StationarySolution sol = solve_grid(drift_shift(2, Pt{c, 0.0, 0}), g);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x1 = g->nodes[i][0];
    l1 += g->weights[i] * std::abs(sol.f.values[i] - std::exp(c * x1 - 0.5 * c * c));
  }
  REQUIRE(l1 <= 1e-3);
  REQUIRE(sol.residual <= 1e-5);
}

TEST_CASE("grid solver requires a uniform grid") {
  REQUIRE_THROWS_AS(solve_grid(drift_zero(1), kGrid80), ArgumentError);
}

TEST_CASE("Lyapunov certificate: zero drift is inconclusive") {
  const LyapunovCertificate cert = lyapunov_check(drift_zero(1), kGrid80);
  REQUIRE_FALSE(cert.valid);
}

TEST_CASE("Lyapunov certificate: inward saturating drift certifies integrability") {
  const DriftField v = drift_saturating_inward(2.0);
  const LyapunovCertificate cert = lyapunov_check(v, kGrid80);
  REQUIRE(cert.valid);
  REQUIRE(std::isfinite(cert.C));
  // consistency: the certificate bounds the solved ||v||_{L^1(mu)}
  const StationarySolution sol = solve_1d_explicit(v, kGrid80);
  REQUIRE(sol.v_l1_mu <= cert.C + 1e-6);
}

TEST_CASE("stationary solutions reproduce v_l1_mu deterministically") {
  const StationarySolution a = solve_1d_explicit(drift_shift(1, Pt{1.0, 0, 0}), kGrid80);
  const StationarySolution b = solve_1d_explicit(drift_shift(1, Pt{1.0, 0, 0}), kGrid80);
  REQUIRE(a.v_l1_mu == b.v_l1_mu);
}
