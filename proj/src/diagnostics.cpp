#include "hetvar/diagnostics.hpp"

#include <cmath>

#include "hetvar/distributions.hpp"
#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar {

namespace {

// X~_t rows (X'_t, ..., X'_{t-p+1}) for t = 1..T, zero-padded; this is the
// same-index convention of the time-constant-variance representations.
Matrix same_index_design(const Matrix& x, int p) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Matrix design = Matrix::Zero(T, d * p);
  for (int t = 0; t < T; ++t) {
    for (int lag = 0; lag < p; ++lag) {
      if (t - lag >= 0) {
        design.row(t).segment(lag * d, d) = x.row(t - lag);
      }
    }
  }
  return design;
}

// Stacked residual blocks (r'_t, ..., r'_{t-m+1}) per row, zero-padded.
Matrix stacked_residuals(const Matrix& r, int m) {
  const int T = static_cast<int>(r.rows());
  const int d = static_cast<int>(r.cols());
  Matrix out = Matrix::Zero(T, d * m);
  for (int t = 0; t < T; ++t) {
    for (int lag = 0; lag < m; ++lag) {
      if (t - lag >= 0) {
        out.row(t).segment(lag * d, d) = r.row(t - lag);
      }
    }
  }
  return out;
}

}  // namespace

AutocovPanel autocov_panel(const Matrix& residuals, int m, FitMethod method) {
  const int T = static_cast<int>(residuals.rows());
  const int d = static_cast<int>(residuals.cols());
  if (m < 1) throw InvalidInput("autocov_panel requires m >= 1");
  if (m >= T) throw LagTooLarge("need m < T");

  AutocovPanel panel;
  panel.m = m;
  panel.d = d;
  panel.T = T;
  panel.method = method;
  panel.gamma0 = residuals.transpose() * residuals / T;
  panel.sigma_hat = panel.gamma0.diagonal().cwiseSqrt();

  panel.gamma.resize(static_cast<Eigen::Index>(d) * d * m);
  panel.rho_a.resize(panel.gamma.size());
  panel.gammas.reserve(m);
  for (int h = 1; h <= m; ++h) {
    Matrix g = Matrix::Zero(d, d);
    for (int t = h; t < T; ++t) {
      g += residuals.row(t).transpose() * residuals.row(t - h);
    }
    g /= T;
    panel.gammas.push_back(g);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        const Eigen::Index idx = (h - 1) * d * d + j * d + i;
        panel.gamma[idx] = g(i, j);
        panel.rho_a[idx] =
            g(i, j) / (panel.sigma_hat[i] * panel.sigma_hat[j]);
      }
    }
  }
  if (method != FitMethod::OLS) {
    panel.rho_b = panel.gamma;
  }
  return panel;
}

DiagCovComponents diag_components(const VarFit& fit, const LambdaSet& lambdas,
                                  int m) {
  const int d = fit.coeffs.d;
  const int p = fit.coeffs.p;
  DiagCovComponents comps;
  comps.m = m;
  comps.d = d;
  comps.p = p;

  comps.lambda_u_u =
      matnum::kron(Matrix::Identity(m, m), lambdas.sigma_G2_hat);
  Vector su = lambdas.sigma_G_hat.diagonal().cwiseSqrt();
  comps.s_u = su.asDiagonal();

  const int rows = d * d * m;
  const int cols = d * d * p;
  comps.phi_u = Matrix::Zero(rows, cols);
  comps.lambda_u_theta = Matrix::Zero(rows, cols);
  const bool have_mixed = lambdas.g_mixed_hat.size() > 0;
  if (have_mixed) comps.lambda_eps_theta = Matrix::Zero(rows, cols);
  if (p == 0) return comps;

  comps.companion = companion_matrix(fit.coeffs);
  const Matrix id = Matrix::Identity(d, d);
  Matrix kpow = Matrix::Identity(d * p, d * p);
  for (int i = 0; i < m; ++i) {
    Matrix emp = Matrix::Zero(m, p);
    emp(i, 0) = 1.0;
    const Matrix right = matnum::kron(kpow.transpose().eval(), id);
    comps.phi_u +=
        matnum::kron(matnum::kron(emp, lambdas.sigma_G_hat), id) * right;
    comps.lambda_u_theta +=
        matnum::kron(emp, lambdas.sigma_G2_hat) * right;
    if (have_mixed) {
      comps.lambda_eps_theta +=
          matnum::kron(emp, lambdas.g_mixed_hat) * right;
    }
    kpow = kpow * comps.companion;
  }
  return comps;
}

ResidualCovEstimate residual_cov(const VarFit& fit,
                                 const DiagCovComponents& comps,
                                 const LambdaSet& lambdas, int m) {
  const int d = fit.coeffs.d;
  const int p = fit.coeffs.p;
  const int n = d * d * m;
  ResidualCovEstimate cov;

  if (p == 0) {
    cov.sigma_ols = comps.lambda_u_u;
  } else {
    const Matrix l3inv = matnum::pd_inverse(lambdas.lambda3_hat);
    const Matrix proj = comps.phi_u * l3inv;
    cov.sigma_ols = comps.lambda_u_u -
                    comps.lambda_u_theta * proj.transpose() -
                    proj * comps.lambda_u_theta.transpose() +
                    proj * lambdas.lambda2_hat * proj.transpose();
    cov.sigma_ols = matnum::symmetrize(cov.sigma_ols);
  }

  Vector s_scale(n);
  for (int h = 0; h < m; ++h) {
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        s_scale[h * d * d + j * d + i] =
            1.0 / (comps.s_u(i, i) * comps.s_u(j, j));
      }
    }
  }
  cov.psi_ols = s_scale.asDiagonal() * cov.sigma_ols * s_scale.asDiagonal();

  const bool have_eps = comps.lambda_eps_theta.size() > 0 || p == 0;
  const bool is_standardized = fit.method != FitMethod::OLS;
  if (is_standardized && have_eps) {
    Matrix sg;
    if (p == 0) {
      sg = Matrix::Identity(n, n);
    } else {
      const Matrix l1inv = matnum::pd_inverse(lambdas.lambda1_hat);
      sg = Matrix::Identity(n, n) -
           comps.lambda_eps_theta * l1inv * comps.lambda_eps_theta.transpose();
      sg = matnum::symmetrize(sg);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sg);
    Vector lam = es.eigenvalues();
    // Population eigenvalues lie in [0,1]; the projected directions sit at 0
    // exactly, so plug-in estimates dip below zero at the sampling scale
    // T^{-1/2}. Tolerate that, fail loudly on anything grosser.
    const double T_len = static_cast<double>(fit.residuals_u.rows());
    const double window = std::max(1e-3, 10.0 / std::sqrt(T_len));
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam[i] < -window || lam[i] > 1.0 + window) {
        throw EigenvalueOutOfRange(
            "sigma_gls eigenvalue " + std::to_string(lam[i]) +
            " outside [0,1]: upstream estimation problem");
      }
      lam[i] = std::min(1.0, std::max(0.0, lam[i]));
    }
    cov.sigma_gls = matnum::symmetrize(
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
  }
  return cov;
}

ConfidenceBounds confidence_bounds(const AutocovPanel& panel,
                                   const ResidualCovEstimate& cov,
                                   double level, const VarFit& fit,
                                   const Matrix& x) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidInput("confidence level must lie in (0,1)");
  }
  const int T = panel.T;
  const int d = panel.d;
  const int m = panel.m;
  const int n = d * d * m;
  const int p = fit.coeffs.p;
  const double z = dist::normal_quantile(0.5 * (1.0 + level));

  ConfidenceBounds bounds;
  bounds.level = level;
  bounds.robust.resize(n);
  const Matrix& robust_cov =
      panel.method == FitMethod::OLS ? cov.psi_ols : cov.sigma_gls;
  if (robust_cov.rows() != n) {
    throw InvalidInput("covariance estimate does not match the panel");
  }
  for (int j = 0; j < n; ++j) {
    bounds.robust[j] = z * std::sqrt(std::max(robust_cov(j, j), 0.0) / T);
  }

  // Classical iid-case covariance evaluated at sample moments.
  const Matrix& r =
      panel.method == FitMethod::OLS ? fit.residuals_u : fit.residuals_eps;
  Matrix naive = Matrix::Zero(n, n);
  Matrix proj;  // E[r^m X~'] E[X~X~']^{-1} E[r^m X~']', dm x dm
  if (p > 0) {
    const Matrix design = same_index_design(x, p);
    const Matrix stacked = stacked_residuals(r, m);
    const Matrix c = stacked.transpose() * design / T;
    const Matrix omega =
        matnum::symmetrize(design.transpose() * design / T);
    proj = c * matnum::pd_inverse(omega) * c.transpose();
  }
  if (panel.method == FitMethod::OLS) {
    const Matrix sigma_u = matnum::symmetrize(r.transpose() * r / T);
    naive = matnum::kron(Matrix::Identity(m, m),
                         matnum::kron(sigma_u, sigma_u));
    if (p > 0) naive -= matnum::kron(proj, sigma_u);
    Vector s_scale(n);
    for (int h = 0; h < m; ++h) {
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
          s_scale[h * d * d + j * d + i] =
              1.0 / (panel.sigma_hat[i] * panel.sigma_hat[j]);
        }
      }
    }
    naive = s_scale.asDiagonal() * naive * s_scale.asDiagonal();
  } else {
    naive = Matrix::Identity(n, n);
    if (p > 0) naive -= matnum::kron(proj, Matrix::Identity(d, d));
  }
  bounds.naive.resize(n);
  for (int j = 0; j < n; ++j) {
    bounds.naive[j] = z * std::sqrt(std::max(naive(j, j), 0.0) / T);
  }
  return bounds;
}

}  // namespace hetvar
