#include <catch_amalgamated.hpp>
#include <cmath>

#include "fpk/solver.hpp"
#include "fpk/transport.hpp"

using namespace fpk;

namespace {
const auto kGrid = build_grid(1, 80, GridKind::GaussHermiteTensor);

DensityFn gamma_density_1d() {
  return density_from_form(kGrid, ScalarField(1, [](const Pt&) { return 1.0; }),
                           GaussianSpec::standard(1), true);
}
}  // namespace

TEST_CASE("W1 of a measure against itself is zero") {
  DensityFn mu = density_from_form(kGrid, shift_density(0.4).to_field(),
                                   GaussianSpec::standard(1), true);
  const KantorovichResult r = w1_probability(mu, mu);
  REQUIRE(r.value == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(r.method == "cdf-1d");
}

TEST_CASE("W1 of a shifted Gaussian is the shift") {
  for (double c : {0.25, 0.7, 2.0}) {
    DensityFn mu = density_from_form(kGrid, shift_density(c).to_field(),
                                     GaussianSpec::standard(1), true);
    const KantorovichResult r = w1_probability(mu, gamma_density_1d());
    REQUIRE(r.value == Catch::Approx(c).margin(1e-6));
    REQUIRE(r.error_estimate < 1e-6);
  }
}

TEST_CASE("W1 of a rescaled Gaussian matches the comonotone-map oracle") {
  // mu = N(0, s^2): optimal map x -> s x, so W1 = |s - 1| E|Z| = |s-1| sqrt(2/pi)
  const double sigma = 0.7071;
  const double k = 1.0 / (sigma * sigma) - 1.0;
  ExpQuad f{std::sqrt(1.0 + k), 0.0, k};
  DensityFn mu = density_from_form(kGrid, f.to_field(), GaussianSpec::standard(1), true);
  const KantorovichResult r = w1_probability(mu, gamma_density_1d());
  REQUIRE(r.value == Catch::Approx((1.0 - sigma) * std::sqrt(2.0 / kPi)).margin(1e-6));
}

TEST_CASE("mass mismatch is rejected") {
  DensityFn mu = density_from_form(kGrid, ScalarField(1, [](const Pt&) { return 2.0; }),
                                   GaussianSpec::standard(1));
  REQUIRE_THROWS_AS(w1_probability(mu, gamma_density_1d()), UnbalancedInputError);
}

TEST_CASE("shift equivariance of W1 in 1D") {
  const double h = 0.6;
  DensityFn mu = density_from_form(kGrid, shift_density(0.3).to_field(),
                                   GaussianSpec::standard(1), true);
  DensityFn mu_shifted = density_from_form(kGrid, shift_density(0.3 + h).to_field(),
                                           GaussianSpec::standard(1), true);
  const KantorovichResult r = w1_probability(mu, mu_shifted);
  REQUIRE(r.value == Catch::Approx(h).margin(1e-6));
}

TEST_CASE("triangle inequality for three 1D measures") {
  DensityFn a = density_from_form(kGrid, shift_density(0.2).to_field(), GaussianSpec::standard(1), true);
  DensityFn b = density_from_form(kGrid, shift_density(0.9).to_field(), GaussianSpec::standard(1), true);
  DensityFn c = density_from_form(kGrid, linear_density(1.2).to_field(), GaussianSpec::standard(1), true);
  const double ab = w1_probability(a, b).value;
  const double bc = w1_probability(b, c).value;
  const double ac = w1_probability(a, c).value;
  const double err = 2.0 * (w1_probability(a, b).error_estimate +
                            w1_probability(b, c).error_estimate);
  REQUIRE(ac <= ab + bc + err);
}

TEST_CASE("signed Kantorovich norm: zero measure") {
  SignedMeasureRepr zero;
  zero.grid = kGrid;
  zero.density.assign(kGrid->size(), 0.0);
  zero.form = ScalarField(1, [](const Pt&) { return 0.0; });
  zero.total_mass = 0.0;
  REQUIRE(w1_signed(zero).value == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("signed Kantorovich norm of opposed bumps approaches 2a * mass") {
  // sigma = bump at +a minus bump at -a; for translates the norm is exactly
  // the distance times the common mass
  const double a = 1.0, width = 0.1;
  auto dens = [a, width](double x) {
    auto bump = [width](double t) { return std::exp(-0.5 * t * t / (width * width)); };
    return (bump(x - a) - bump(x + a)) / std_normal_pdf(x);
  };
  SignedMeasureRepr sigma;
  sigma.grid = kGrid;
  sigma.form = ScalarField(1, [dens](const Pt& p) { return dens(p[0]); });
  sigma.density.resize(kGrid->size());
  for (std::size_t i = 0; i < kGrid->size(); ++i) sigma.density[i] = dens(kGrid->nodes[i][0]);
  sigma.total_mass = 0.0;  // odd function
  const double bump_mass = width * std::sqrt(2.0 * kPi);  // Lebesgue mass of one bump
  const KantorovichResult r = w1_signed(sigma);
  REQUIRE(r.method == "signed-cdf-1d");
  REQUIRE(r.value == Catch::Approx(2.0 * a * bump_mass).epsilon(1e-6));
}

TEST_CASE("unbalanced signed measures are rejected") {
  SignedMeasureRepr sigma;
  sigma.grid = kGrid;
  sigma.density.assign(kGrid->size(), 1.0);
  sigma.form = ScalarField(1, [](const Pt&) { return 1.0; });
  sigma.total_mass = 1.0;
  REQUIRE_THROWS_AS(w1_signed(sigma), UnsupportedInputError);
}

TEST_CASE("signed norm scales linearly in the measure") {
  const DriftField u = drift_gaussian_bump(1.0, 0.2, 0.8);
  const RegularizedDivergence rd = regularized_divergence(u, 0.4, kGrid);
  SignedMeasureRepr sigma = to_signed_measure(rd);
  const double base = w1_signed(sigma).value;
  SignedMeasureRepr doubled = sigma;
  for (double& x : doubled.density) x *= 2.0;
  doubled.form = sigma.form.scaled(2.0);
  doubled.total_mass = 2.0 * sigma.total_mass;
  REQUIRE(w1_signed(doubled).value == Catch::Approx(2.0 * base).epsilon(1e-8));
}

TEST_CASE("Kantorovich bound (u2) is tight for constant fields") {
  // nu_s for u = 1 has density -e^{-s} x, whose K-norm is exactly e^{-s}
  const double s = 0.5;
  const RegularizedDivergence rd = regularized_divergence(drift_shift(1, Pt{1, 0, 0}), s, kGrid);
  const KantorovichResult r = w1_signed(to_signed_measure(rd));
  REQUIRE(r.value == Catch::Approx(std::exp(-s)).margin(1e-6));
  REQUIRE(r.value <= std::exp(-s) * rd.u_l1 + 1e-6);
}

TEST_CASE("2D Sinkhorn recovers the shift distance") {
  auto g = build_grid(2, 81, GridKind::UniformTruncated, 8.0);
  const double c = 0.3;
  DensityFn mu = density_from_form(
      g, ScalarField(2, [c](const Pt& p) { return std::exp(c * p[0] - 0.5 * c * c); }),
      GaussianSpec::standard(2), true);
  DensityFn nu = density_from_form(g, ScalarField(2, [](const Pt&) { return 1.0; }),
                                   GaussianSpec::standard(2), true);
  TransportOptions opt;
  opt.sink_block = 2;  // 81-grid has h = 0.2, so blocks of 2 give h ~ 0.4
  const KantorovichResult r = w1_probability(mu, nu, opt);
  REQUIRE(r.method == "sinkhorn");
  REQUIRE(r.value == Catch::Approx(c).margin(1e-3));
  REQUIRE(r.value >= c - 1e-6);  // first moments are preserved by aggregation
}

TEST_CASE("Sinkhorn agrees with the exact LP on a shared coarse support") {
  auto g = build_grid(2, 81, GridKind::UniformTruncated, 8.0);
  DensityFn mu = density_from_form(
      g, ScalarField(2, [](const Pt& p) { return std::sqrt(2.0) * std::exp(-0.5 * p[1] * p[1]); }),
      GaussianSpec::standard(2), true);
  DensityFn nu = density_from_form(g, ScalarField(2, [](const Pt&) { return 1.0; }),
                                   GaussianSpec::standard(2), true);
  const CrosscheckReport rep = w1_oracle_crosscheck(mu, nu, 28);
  REQUIRE(rep.pass);
  REQUIRE(rep.discrepancy <= rep.tolerance);
  // identical measures: both methods at zero
  const CrosscheckReport same = w1_oracle_crosscheck(nu, nu, 28);
  REQUIRE(same.sinkhorn == Catch::Approx(0.0).margin(1e-6));
  REQUIRE(same.lp == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("exact LP on 1D clouds matches the cumulative formula") {
  // atoms on a line: K-norm of (P - N) via LP equals the CDF formula
  DiscreteCloud P, N;
  P.dim = N.dim = 2;
  P.pts = {Pt{0.0, 0, 0}, Pt{1.0, 0, 0}, Pt{2.5, 0, 0}};
  P.mass = {0.3, 0.5, 0.2};
  N.pts = {Pt{0.5, 0, 0}, Pt{1.7, 0, 0}};
  N.mass = {0.6, 0.4};
  const KantorovichResult lp = transport_lp(P, N);
  // oracle by the 1D cumulative formula: sort events, integrate |cum|
  // cum jumps: +0.3@0, -0.6@0.5, +0.5@1, -0.4@1.7, +0.2@2.5
  double expect = 0.0;
  {
    std::vector<std::pair<double, double>> ev{{0.0, 0.3}, {0.5, -0.6}, {1.0, 0.5},
                                              {1.7, -0.4}, {2.5, 0.2}};
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
      cum += ev[i].second;
      expect += std::abs(cum) * (ev[i + 1].first - ev[i].first);
    }
  }
  REQUIRE(lp.value == Catch::Approx(expect).margin(1e-8));
}

TEST_CASE("LP optimality certificate holds on random instances") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), mass(0.1, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    DiscreteCloud A, B;
    A.dim = B.dim = 2;
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < 30; ++i) {
      A.pts.push_back(Pt{pos(rng), pos(rng), 0});
      A.mass.push_back(mass(rng));
      sa += A.mass.back();
    }
    for (int j = 0; j < 25; ++j) {
      B.pts.push_back(Pt{pos(rng), pos(rng), 0});
      B.mass.push_back(mass(rng));
      sb += B.mass.back();
    }
    for (double& x : B.mass) x *= sa / sb;
    const KantorovichResult lp = transport_lp(A, B);
    REQUIRE(lp.value >= 0.0);
    REQUIRE(lp.error_estimate <= 1e-8);  // dual feasibility at optimum
  }
}
