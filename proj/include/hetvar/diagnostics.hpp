#pragma once

#include <vector>

#include "hetvar/estimators.hpp"
#include "hetvar/matrix.hpp"

namespace hetvar {

// Stacked residual autocovariances gamma = vec(G(1), ..., G(m)) with
// G(h) = T^-1 sum_{t=h+1}^T r_t r'_{t-h} (divisor T throughout).
struct AutocovPanel {
  int m = 0;
  int d = 0;
  int T = 0;
  FitMethod method = FitMethod::OLS;
  Matrix gamma0;               // lag-0 autocovariance
  std::vector<Matrix> gammas;  // lags 1..m
  Vector gamma;                // length d^2 m
  Vector rho_a;                // S-normalized autocorrelations
  Vector rho_b;                // raw eps-scale variant; empty for OLS panels
  Vector sigma_hat;            // per-series sample standard deviations
};

AutocovPanel autocov_panel(const Matrix& residuals, int m, FitMethod method);

// Position of the (lag, i, j) autocovariance entry inside the stacked
// vector; lag, i, j are 1-based.
inline int gamma_index(int d, int lag, int i, int j) {
  return (lag - 1) * d * d + (j - 1) * d + (i - 1);
}

// Finite-sum estimates of Phi_m, Lambda_m^{u,theta}, Lambda_m^{eps,theta},
// Lambda_m^{u,u} built from companion powers of the fitted coefficients.
struct DiagCovComponents {
  int m = 0;
  int d = 0;
  int p = 0;
  Matrix phi_u;            // d^2 m x d^2 p (0 columns when p = 0)
  Matrix lambda_u_theta;   // d^2 m x d^2 p
  Matrix lambda_eps_theta; // d^2 m x d^2 p; empty unless the fit carries vol
  Matrix lambda_u_u;       // I_m (x) Sigma_{G2}
  Matrix companion;        // fitted companion matrix (empty when p = 0)
  Matrix s_u;              // Diag(Sigma_G)^{1/2}
};

DiagCovComponents diag_components(const VarFit& fit, const LambdaSet& lambdas,
                                  int m);

struct ResidualCovEstimate {
  Matrix sigma_ols;  // asymptotic covariance of sqrt(T) gamma_m (u-scale)
  Matrix sigma_gls;  // same for standardized residuals; eigenvalues in [0,1]
  Matrix psi_ols;    // autocorrelation-scale version of sigma_ols
};

ResidualCovEstimate residual_cov(const VarFit& fit,
                                 const DiagCovComponents& comps,
                                 const LambdaSet& lambdas, int m);

// Half-widths of the per-entry confidence intervals, in the stacking order
// of AutocovPanel::gamma. "robust" uses the heteroscedasticity-correct
// covariance, "naive" the classical iid formulas evaluated at sample
// moments.
struct ConfidenceBounds {
  double level = 0.95;
  Vector robust;
  Vector naive;
};

ConfidenceBounds confidence_bounds(const AutocovPanel& panel,
                                   const ResidualCovEstimate& cov,
                                   double level, const VarFit& fit,
                                   const Matrix& x);

}  // namespace hetvar
