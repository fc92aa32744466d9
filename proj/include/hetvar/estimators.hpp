#pragma once

#include <optional>

#include "hetvar/matrix.hpp"
#include "hetvar/var_model.hpp"
#include "hetvar/vol_kernel.hpp"

namespace hetvar {

enum class FitMethod { OLS, GLS, ALS };

const char* method_name(FitMethod m);

struct VarFit {
  FitMethod method = FitMethod::OLS;
  VarCoefficients coeffs;
  Matrix residuals_u;    // X_t minus the fitted one-step prediction, T x d
  Matrix residuals_eps;  // standardized residuals (GLS/ALS); 0x0 for OLS
  std::optional<VolPathEstimate> vol_estimate;  // ALS
  std::optional<VolCurve> vol_known;            // GLS
  Matrix theta_cov;  // asymptotic covariance of sqrt(T)(theta_hat - theta)

  // Bracketed standard errors, sqrt(diag(theta_cov) / T).
  Vector theta_se(int T) const;
};

// Sample moment matrices backing the asymptotic covariances.
struct LambdaSet {
  Matrix lambda1_hat;   // weighted design moment (GLS/ALS fits only)
  Matrix lambda2_hat;   // T^-1 sum X~X~' (x) u u'
  Matrix lambda3_hat;   // design moment (x) I_d
  Matrix sigma_G_hat;   // T^-1 sum u u'
  Matrix sigma_G2_hat;  // T^-1 sum_{t>=2} u_{t-1}u_{t-1}' (x) u_t u_t'
  Matrix g_mixed_hat;   // T^-1 sum H_t' (x) H_t^{-1} (GLS/ALS fits only)
};

// T x dp design with rows (X'_{t-1}, ..., X'_{t-p}) and zero-padded
// pre-sample values.
Matrix lagged_design(const Matrix& x, int p);

VarFit fit_ols(const Matrix& x, int p);
VarFit fit_gls(const Matrix& x, int p, const VolCurve& vol);
VarFit fit_als(const Matrix& x, int p, const KernelConfig& cfg);

LambdaSet lambda_set(const VarFit& fit, const Matrix& x);

}  // namespace hetvar
