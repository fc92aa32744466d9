#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hetvar/diagnostics.hpp"
#include "hetvar/errors.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/matnum.hpp"
#include "hetvar/var_model.hpp"

using namespace hetvar;

namespace {

Matrix white_noise2(const VolCurve& vol, int T, std::uint64_t seed) {
  VarCoefficients c;
  c.d = 2;
  c.p = 0;
  SimConfig cfg;
  cfg.T = T;
  cfg.seed = seed;
  return simulate(c, vol, cfg);
}

}  // namespace

TEST_CASE("autocov panel basics") {
  Matrix zero = Matrix::Zero(50, 2);
  AutocovPanel p0 = autocov_panel(zero, 3, FitMethod::OLS);
  CHECK(p0.gamma.cwiseAbs().maxCoeff() == 0.0);

  const int T = 40;
  Matrix alt(T, 1);
  for (int t = 0; t < T; ++t) alt(t, 0) = (t % 2 == 0) ? 1.0 : -1.0;
  AutocovPanel p1 = autocov_panel(alt, 1, FitMethod::OLS);
  CHECK(p1.gamma[0] ==
        doctest::Approx(-(T - 1.0) / T).epsilon(1e-14));
  CHECK(p1.rho_a[0] ==
        doctest::Approx(-(T - 1.0) / T).epsilon(1e-14));
  CHECK(p1.rho_b.size() == 0);

  AutocovPanel p2 = autocov_panel(alt, 1, FitMethod::ALS);
  CHECK(p2.rho_b.size() == 1);
  CHECK(p2.rho_b[0] == p2.gamma[0]);

  CHECK_THROWS_AS(autocov_panel(alt, T, FitMethod::OLS), LagTooLarge);
}

TEST_CASE("autocovariances obey the CLT scale for white noise") {
  Matrix x = white_noise2(VolCurve::constant(Matrix::Identity(2, 2)), 100000,
                          606);
  AutocovPanel panel = autocov_panel(x, 4, FitMethod::OLS);
  CHECK(panel.gamma.cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(100000.0));
}

TEST_CASE("diag components in the p=0 case") {
  Matrix x = white_noise2(VolCurve::constant(Matrix::Identity(2, 2)), 500, 1);
  VarFit fit = fit_ols(x, 0);
  LambdaSet set = lambda_set(fit, x);
  DiagCovComponents comps = diag_components(fit, set, 3);
  CHECK(comps.phi_u.cols() == 0);
  CHECK(comps.lambda_u_theta.cols() == 0);
  Matrix expected =
      matnum::kron(Matrix::Identity(3, 3), set.sigma_G2_hat);
  CHECK(matnum::max_abs(comps.lambda_u_u - expected) == 0.0);
}

TEST_CASE("nilpotent companion keeps only the i=0 term") {
  const int T = 200;
  Matrix x = white_noise2(VolCurve::constant(Matrix::Identity(2, 2)), T, 2);
  VarFit fit = fit_ols(x, 1);
  fit.coeffs.mats[0].setZero();  // force K = 0
  fit.residuals_u = x;
  LambdaSet set = lambda_set(fit, x);
  DiagCovComponents comps = diag_components(fit, set, 3);
  Matrix block0 = comps.phi_u.topRows(4);
  CHECK(matnum::max_abs(
            block0 - matnum::kron(set.sigma_G_hat, Matrix::Identity(2, 2))) <
        1e-14);
  CHECK(matnum::max_abs(comps.phi_u.bottomRows(8)) == 0.0);
}

TEST_CASE("u-theta component matches the direct moment when homoscedastic") {
  Matrix a(2, 2);
  a << 0.3, -0.3, 0.0, -0.1;
  VarCoefficients c;
  c.d = 2;
  c.p = 1;
  c.mats = {a};
  SimConfig cfg;
  cfg.T = 100000;
  cfg.seed = 77;
  Matrix x = simulate(c, VolCurve::constant(Matrix::Identity(2, 2)), cfg);
  VarFit fit = fit_ols(x, 1);
  LambdaSet set = lambda_set(fit, x);
  const int m = 3;
  DiagCovComponents comps = diag_components(fit, set, m);

  // direct sample version of E[u_t^m X~_t'] (x) Sigma_u
  const int T = cfg.T;
  Matrix stacked = Matrix::Zero(T, 2 * m);
  for (int t = 0; t < T; ++t) {
    for (int lag = 0; lag < m; ++lag) {
      if (t - lag >= 0) {
        stacked.row(t).segment(2 * lag, 2) = fit.residuals_u.row(t - lag);
      }
    }
  }
  Matrix design = Matrix::Zero(T, 2);
  for (int t = 0; t < T; ++t) design.row(t) = x.row(t);
  Matrix cmoment = stacked.transpose() * design / T;
  Matrix direct = matnum::kron(cmoment, set.sigma_G_hat);
  CHECK(matnum::max_abs(comps.lambda_u_theta - direct) < 0.05);
}

TEST_CASE("residual covariances in the p=0 case are exact") {
  Matrix x = white_noise2(VolCurve::break_spec(0.2), 800, 3);
  VolCurve vol = VolCurve::break_spec(0.2);
  VarFit fit = fit_gls(x, 0, vol);
  LambdaSet set = lambda_set(fit, x);
  const int m = 4;
  DiagCovComponents comps = diag_components(fit, set, m);
  ResidualCovEstimate cov = residual_cov(fit, comps, set, m);
  CHECK(matnum::max_abs(cov.sigma_gls - Matrix::Identity(16, 16)) == 0.0);
  CHECK(matnum::max_abs(cov.sigma_ols - comps.lambda_u_u) == 0.0);
}

TEST_CASE("example 1 analytic value for the GLS covariance") {
  // two-regime diagonal volatility, tau = 0.5, levels (1, 0.5) and (1, 1)
  VolCurve vol = VolCurve::two_regime(1.0, 0.5, 1.0, 1.0, 0.5, 0.5);
  // analytic: 1 - (int S1^{1/2} S2^{-1/2})^2 / int S1 S2^{-1}
  const double num = 0.5 * (1.0 + std::sqrt(0.5));
  const double expected22 = 1.0 - num * num / 0.75;

  std::vector<double> values;
  for (int rep = 0; rep < 5; ++rep) {
    Matrix x = white_noise2(vol, 10000, derive_seed(500, rep));
    VarFit fit = fit_gls(x, 1, vol);
    LambdaSet set = lambda_set(fit, x);
    DiagCovComponents comps = diag_components(fit, set, 3);
    ResidualCovEstimate cov = residual_cov(fit, comps, set, 3);
    values.push_back(cov.sigma_gls(1, 1));
  }
  std::sort(values.begin(), values.end());
  CHECK(values[2] == doctest::Approx(expected22).epsilon(2.0));
  CHECK(std::abs(values[2] - expected22) < 0.05);
}

TEST_CASE("brute-force Monte Carlo covariance oracle") {
  Matrix a(2, 2);
  a << 0.3, -0.3, 0.0, -0.1;
  VarCoefficients c;
  c.d = 2;
  c.p = 1;
  c.mats = {a};
  const int T = 300;
  const int reps = 2000;
  const int m = 2;

  Matrix mean = Matrix::Zero(8, 1);
  std::vector<Vector> gs;
  gs.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    SimConfig cfg;
    cfg.T = T;
    cfg.seed = derive_seed(808, rep);
    Matrix x = simulate(c, VolCurve::constant(Matrix::Identity(2, 2)), cfg);
    VarFit fit = fit_ols(x, 1);
    AutocovPanel panel = autocov_panel(fit.residuals_u, m, FitMethod::OLS);
    gs.push_back(std::sqrt(static_cast<double>(T)) * panel.gamma);
    mean += gs.back() / reps;
  }
  Matrix cov_mc = Matrix::Zero(8, 8);
  for (const Vector& g : gs) {
    cov_mc += (g - mean) * (g - mean).transpose() / reps;
  }

  Matrix x = simulate(
      c, VolCurve::constant(Matrix::Identity(2, 2)),
      SimConfig{.T = 20000, .seed = 11, .burn_in = 0, .innovation = {}});
  VarFit fit = fit_ols(x, 1);
  LambdaSet set = lambda_set(fit, x);
  DiagCovComponents comps = diag_components(fit, set, m);
  ResidualCovEstimate cov = residual_cov(fit, comps, set, m);
  const double rel =
      (cov_mc - cov.sigma_ols).norm() / cov.sigma_ols.norm();
  CHECK(rel < 0.15);
}

TEST_CASE("sigma_gls eigenvalue window is enforced") {
  Matrix x = white_noise2(VolCurve::constant(Matrix::Identity(2, 2)), 400, 5);
  VolCurve vol = VolCurve::constant(Matrix::Identity(2, 2));
  VarFit fit = fit_gls(x, 1, vol);
  LambdaSet set = lambda_set(fit, x);
  DiagCovComponents comps = diag_components(fit, set, 3);
  // sabotage the weighted moment so the projection blows past 1
  set.lambda1_hat *= 1e-4;
  CHECK_THROWS_AS(residual_cov(fit, comps, set, 3), EigenvalueOutOfRange);
}

TEST_CASE("confidence bounds with identity covariance") {
  Matrix r = white_noise2(VolCurve::constant(Matrix::Identity(2, 2)), 400, 6);
  VarFit fit = fit_gls(r, 0, VolCurve::constant(Matrix::Identity(2, 2)));
  AutocovPanel panel = autocov_panel(fit.residuals_eps, 2, FitMethod::GLS);
  LambdaSet set = lambda_set(fit, r);
  DiagCovComponents comps = diag_components(fit, set, 2);
  ResidualCovEstimate cov = residual_cov(fit, comps, set, 2);
  ConfidenceBounds b = confidence_bounds(panel, cov, 0.95, fit, r);
  for (int j = 0; j < 8; ++j) {
    CHECK(b.robust[j] == doctest::Approx(1.96 / 20.0).epsilon(1e-4));
    CHECK(b.naive[j] == doctest::Approx(1.96 / 20.0).epsilon(1e-4));
  }
}

TEST_CASE("OLS bound inflation matches the example 1 ratio") {
  // cross entry at lags h >= 2: robust/naive -> sqrt(int S1 S2 /
  // (int S1 * int S2)) for the two-regime design
  VolCurve vol = VolCurve::two_regime(1.0, 4.0, 1.0, 1.0, 0.5, 0.5);
  const double int_s1 = 0.5 * (1.0 + 4.0);
  const double int_s2 = 1.0;
  const double int_s1s2 = 0.5 * (1.0 + 4.0);
  const double expected = std::sqrt(int_s1s2 / (int_s1 * int_s2));

  Matrix x = white_noise2(vol, 20000, 1001);
  VarFit fit = fit_ols(x, 1);
  AutocovPanel panel = autocov_panel(fit.residuals_u, 3, FitMethod::OLS);
  LambdaSet set = lambda_set(fit, x);
  DiagCovComponents comps = diag_components(fit, set, 3);
  ResidualCovEstimate cov = residual_cov(fit, comps, set, 3);
  ConfidenceBounds b = confidence_bounds(panel, cov, 0.95, fit, x);
  // lag-3 block, entry (2,1): index 2*4 + 0*2 + 1
  const int idx = 2 * 4 + 1;
  CHECK(b.robust[idx] / b.naive[idx] ==
        doctest::Approx(expected).epsilon(0.05));
}
