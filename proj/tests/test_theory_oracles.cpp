#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"
#include "hetvar/theory_oracles.hpp"
#include "hetvar/var_model.hpp"

using namespace hetvar;
using namespace hetvar::oracles;

TEST_CASE("two-regime integrals match adaptive quadrature") {
  TwoRegimeSpec spec{1.0, 0.5, 2.0, 1.25, 0.3, 0.7};
  PiecewiseVolIntegrals v = two_regime_integrals(spec);
  auto s1 = [&](double r) {
    return spec.s10 + (spec.s11 - spec.s10) * (r >= spec.tau1 ? 1.0 : 0.0);
  };
  auto s2 = [&](double r) {
    return spec.s20 + (spec.s21 - spec.s20) * (r >= spec.tau2 ? 1.0 : 0.0);
  };
  const std::vector<double> breaks{spec.tau1, spec.tau2};
  CHECK(std::abs(v.s1 - integrate_scalar(s1, breaks)) < 1e-10);
  CHECK(std::abs(v.s2 - integrate_scalar(s2, breaks)) < 1e-10);
  CHECK(std::abs(v.s1_sq - integrate_scalar(
                              [&](double r) { return s1(r) * s1(r); },
                              breaks)) < 1e-10);
  CHECK(std::abs(v.s1s2 - integrate_scalar(
                              [&](double r) { return s1(r) * s2(r); },
                              breaks)) < 1e-10);
  CHECK(std::abs(v.s1h_s2mh -
                 integrate_scalar(
                     [&](double r) { return std::sqrt(s1(r) / s2(r)); },
                     breaks)) < 1e-10);
  CHECK(std::abs(v.s1_over_s2 -
                 integrate_scalar([&](double r) { return s1(r) / s2(r); },
                                  breaks)) < 1e-10);
}

TEST_CASE("example 1 with constant volatility") {
  TwoRegimeSpec spec{1.0, 1.0, 1.0, 1.0, 0.5, 0.5};
  Example1Cov cov = example1_cov(spec, 3);
  Matrix expected = Matrix::Identity(12, 12);
  expected.topLeftCorner(4, 4).setZero();
  CHECK(matnum::max_abs(cov.sigma_gls - expected) < 1e-14);
  // OLS blocks: zero first block, Sigma_u^{(x)2} = I afterwards
  CHECK(matnum::max_abs(cov.sigma_ols - expected) < 1e-14);
  CHECK(matnum::max_abs(cov.sigma_ols_spurious - expected) < 1e-14);
}

TEST_CASE("example 1 closed-form entries") {
  TwoRegimeSpec spec{1.0, 0.5, 1.0, 1.0, 0.5, 0.5};
  Example1Cov cov = example1_cov(spec, 2);
  CHECK(cov.sigma_ols(4, 4) == doctest::Approx(0.625).epsilon(1e-14));
  const double num = 0.5 * (1.0 + std::sqrt(0.5));
  const double expected22 = 1.0 - num * num / 0.75;
  CHECK(cov.sigma_gls(1, 1) == doctest::Approx(expected22).epsilon(1e-12));
  CHECK(expected22 == doctest::Approx(0.0286).epsilon(1e-2));
  CHECK(cov.sigma_gls(0, 0) == 0.0);
  CHECK(cov.sigma_gls(3, 3) == 0.0);
  CHECK(cov.sigma_gls(5, 5) == 1.0);
}

TEST_CASE("example 2 closed form") {
  TwoRegimeSpec constant{2.0, 2.0, 0.7, 0.7, 0.4, 0.6};
  Matrix delta_const = example2_delta(constant, 3);
  for (int j = 4; j < 12; ++j) {
    CHECK(delta_const(j, j) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TwoRegimeSpec spec{1.0, 0.5, 1.0, 1.0, 0.5, 0.5};
  Matrix delta = example2_delta(spec, 2);
  CHECK(delta(4, 4) == doctest::Approx(0.625 / 0.5625).epsilon(1e-14));
  CHECK(delta(4, 4) == doctest::Approx(1.1111).epsilon(1e-3));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> level(0.2, 5.0), tau(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    TwoRegimeSpec r{level(rng), level(rng), level(rng), level(rng),
                    tau(rng), tau(rng)};
    Matrix dd = example2_delta(r, 2);
    CHECK(dd(4, 4) >= 1.0 - 1e-12);  // Jensen
    CHECK(dd(7, 7) >= 1.0 - 1e-12);
  }
}

TEST_CASE("c_sigma closed forms") {
  CHECK(c_sigma_two_regime(1.0, 1.0, 0.5) == doctest::Approx(1.0));
  CHECK(c_sigma_two_regime(1.0, 4.0, 0.5) ==
        doctest::Approx(8.5 / 6.25).epsilon(1e-14));
  CHECK(c_sigma_two_regime(1.0, 4.0, 0.5) == doctest::Approx(1.36));
  CHECK(c_sigma_affine_trend(150.0) ==
        doctest::Approx(7651.0 / 5776.0).epsilon(1e-14));
  CHECK(c_sigma_affine_trend(150.0) == doctest::Approx(1.3246).epsilon(1e-4));
  // against quadrature
  const double quad = integrate_scalar(
      [](double r) { return (1.0 + 150.0 * r) * (1.0 + 150.0 * r); }, {});
  CHECK(c_sigma_affine_trend(150.0) ==
        doctest::Approx(quad / (76.0 * 76.0)).epsilon(1e-12));
}

TEST_CASE("matrix integrals of the smooth trend curve") {
  VolCurve vol = VolCurve::smooth_trend(250.0, 5.0, 0.2);
  Matrix s = integrate_sigma(vol);
  CHECK(s(0, 0) == doctest::Approx(126.0 * 1.04).epsilon(1e-10));
  CHECK(s(1, 1) == doctest::Approx(2.6).epsilon(1e-10));
}

TEST_CASE("bahadur slopes vanish at the null") {
  VolCurve vol = VolCurve::scalar_trend(150.0, 2);
  SlopeReport rep = bahadur_slopes(Matrix::Zero(2, 2), vol, 5);
  CHECK(rep.raw_ols == 0.0);
  CHECK(rep.raw_underline == 0.0);
  CHECK(rep.raw_als == 0.0);
}

TEST_CASE("bahadur slopes collapse under constant identity volatility") {
  VolCurve vol = VolCurve::constant(Matrix::Identity(2, 2));
  Matrix b(2, 2);
  b << 0.4, 0.1, -0.2, 0.3;
  const int m = 4;
  SlopeReport rep = bahadur_slopes(b, vol, m);
  double norm2 = 0.0;
  Matrix bpow = Matrix::Identity(2, 2);
  for (int h = 1; h <= m; ++h) {
    bpow = bpow * b;
    norm2 += bpow.squaredNorm();
  }
  CHECK(rep.raw_ols == doctest::Approx(norm2).epsilon(1e-10));
  CHECK(rep.raw_underline == doctest::Approx(norm2).epsilon(1e-10));
  CHECK(rep.raw_als == doctest::Approx(norm2).epsilon(1e-10));
  CHECK(rep.max_delta_ols == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("scalar volatility makes ALS at least as steep") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coef(-0.45, 0.45);
  for (const VolCurve& vol :
       {VolCurve::scalar_trend(150.0, 2), VolCurve::scalar_break(10.0, 0.5, 2)}) {
    for (int rep = 0; rep < 10; ++rep) {
      Matrix b(2, 2);
      b << coef(rng), coef(rng), coef(rng), coef(rng);
      if (spectral_radius(b) >= 0.95) continue;
      SlopeReport r = bahadur_slopes(b, vol, 5);
      CHECK(r.slope_als >= r.slope_ols - 1e-10);
      CHECK(r.slope_als >= r.slope_underline - 1e-10);
      CHECK(r.are_als_vs_ols >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("modified form dominates the plain OLS slope") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> coef(-0.4, 0.4);
  std::uniform_real_distribution<double> level(0.3, 4.0), tau(0.1, 0.9);
  for (int rep = 0; rep < 25; ++rep) {
    VolCurve vol = VolCurve::two_regime(level(rng), level(rng), level(rng),
                                        level(rng), tau(rng), tau(rng));
    Matrix b(2, 2);
    b << coef(rng), coef(rng), coef(rng), coef(rng);
    if (spectral_radius(b) >= 0.9) continue;
    SlopeReport r = bahadur_slopes(b, vol, 4);
    CHECK(r.are_underline_vs_ols >= 1.0 - 1e-12);
  }
}

TEST_CASE("unstable alternatives are rejected") {
  VolCurve vol = VolCurve::constant(Matrix::Identity(2, 2));
  CHECK_THROWS_AS(bahadur_slopes(Matrix::Identity(2, 2), vol, 3),
                  UnstableAlternative);
}

TEST_CASE("oracle fixture round-trips through JSON") {
  TwoRegimeSpec spec{1.0, 0.5, 1.0, 1.0, 0.5, 0.5};
  const nlohmann::json fixture =
      nlohmann::json::parse(oracle_fixture(spec, 3).dump());
  CHECK(fixture["integrals"]["s1_sq"] == 0.625);
  Example1Cov cov = example1_cov(spec, 3);
  const auto sigma_gls =
      fixture["sigma_gls"].get<std::vector<std::vector<double>>>();
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      CHECK(sigma_gls[i][j] == cov.sigma_gls(i, j));
    }
  }
  const auto delta =
      fixture["delta_ols"].get<std::vector<std::vector<double>>>();
  Matrix d2 = example2_delta(spec, 3);
  for (int i = 0; i < 12; ++i) {
    CHECK(delta[i][i] == d2(i, i));
  }
}
