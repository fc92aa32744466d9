#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "hetvar/matrix.hpp"
#include "hetvar/var_model.hpp"

namespace hetvar::oracles {

// Pair of scalar two-regime volatilities Sigma_i(r) = s_i0 +
// (s_i1 - s_i0) 1{r >= tau_i} on (0,1].
struct TwoRegimeSpec {
  double s10 = 1.0, s11 = 1.0;
  double s20 = 1.0, s21 = 1.0;
  double tau1 = 0.5, tau2 = 0.5;
};

struct PiecewiseVolIntegrals {
  double s1 = 0, s2 = 0;        // int Sigma_i
  double s1_sq = 0, s2_sq = 0;  // int Sigma_i^2
  double s1s2 = 0;              // int Sigma_1 Sigma_2
  double s1h_s2mh = 0;          // int Sigma_1^{1/2} Sigma_2^{-1/2}
  double s1mh_s2h = 0;          // int Sigma_1^{-1/2} Sigma_2^{1/2}
  double s1_over_s2 = 0;        // int Sigma_1 / Sigma_2
  double s2_over_s1 = 0;        // int Sigma_2 / Sigma_1
};

// Exact segment sums.
PiecewiseVolIntegrals two_regime_integrals(const TwoRegimeSpec& spec);

// Closed-form asymptotic covariances of the bivariate white-noise example
// fitted as a VAR(1) with diagonal two-regime volatility.
struct Example1Cov {
  Matrix sigma_ols;           // d^2 m x d^2 m
  Matrix sigma_gls;
  Matrix sigma_ols_spurious;  // homoscedasticity wrongly assumed
};

Example1Cov example1_cov(const TwoRegimeSpec& spec, int m);

// Closed-form Delta_m^{OLS} for the same design.
Matrix example2_delta(const TwoRegimeSpec& spec, int m);

// [int sigma^2]^{-2} int sigma^4 for scalar volatilities.
double c_sigma_two_regime(double s0, double s1, double tau);
double c_sigma_affine_trend(double slope);  // sigma^2(r) = 1 + slope * r

// Adaptive Simpson with splits at the listed interior breakpoints.
double integrate_scalar(const std::function<double(double)>& f,
                        const std::vector<double>& breaks,
                        double tol = 1e-12);

// Matrix-valued integrals of a volatility curve over (0,1].
Matrix integrate_sigma(const VolCurve& vol);         // int Sigma
Matrix integrate_sigma_kron(const VolCurve& vol);    // int Sigma (x) Sigma
Matrix integrate_gt_kron_ginv(const VolCurve& vol);  // int G' (x) G^{-1}

// Bahadur slopes of the p=0 portmanteau statistics under a fixed VAR(1)
// alternative with coefficient B.
struct SlopeReport {
  double raw_ols = 0;        // limit of Q_m^{OLS} / T
  double raw_underline = 0;  // limit of the Lambda^{u,u}-weighted form / T
  double raw_als = 0;        // limit of Q_m^{ALS} / T
  double max_delta_ols = 1;  // largest weight of the OLS limit law
  double slope_ols = 0;      // raw_ols / max_delta_ols
  double slope_underline = 0;
  double slope_als = 0;
  double are_underline_vs_ols = 1;
  double are_als_vs_ols = 1;
  double are_als_vs_underline = 1;
};

SlopeReport bahadur_slopes(const Matrix& b, const VolCurve& vol, int m);

// Closed-form values bundled as a JSON fixture (integrals plus the
// example matrices) for consumption by test suites.
nlohmann::json oracle_fixture(const TwoRegimeSpec& spec, int m);

}  // namespace hetvar::oracles
