#include "hetvar/estimators.hpp"

#include <vector>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar {

namespace {

// A += scale * (xx' (x) s) for the rank-one outer product of xtilde.
void add_weighted_kron(Matrix& a, const Vector& xtilde, const Matrix& s,
                       double scale) {
  const int dp = static_cast<int>(xtilde.size());
  const int d = static_cast<int>(s.rows());
  for (int i = 0; i < dp; ++i) {
    if (xtilde[i] == 0.0) continue;
    for (int j = 0; j < dp; ++j) {
      const double w = scale * xtilde[i] * xtilde[j];
      if (w == 0.0) continue;
      a.block(i * d, j * d, d, d) += w * s;
    }
  }
}

Matrix design_moment(const Matrix& design, int T) {
  return design.transpose() * design / T;
}

void check_invertible(const Matrix& s, const char* what) {
  Vector ev = matnum::eigvals_sym(matnum::symmetrize(s));
  const double scale = ev.cwiseAbs().maxCoeff();
  if (scale == 0.0 || ev[ev.size() - 1] <= 1e-12 * scale) {
    throw SingularDesign(std::string(what) + " is numerically singular");
  }
}

Matrix residuals_from(const Matrix& x, const Matrix& design,
                      const VarCoefficients& coeffs) {
  if (coeffs.p == 0) return x;
  const int d = coeffs.d;
  Matrix m(d, d * coeffs.p);  // (A_1 ... A_p)
  for (int i = 0; i < coeffs.p; ++i) {
    m.block(0, i * d, d, d) = coeffs.mats[i];
  }
  return x - design * m.transpose();
}

struct WeightedFit {
  VarCoefficients coeffs;
  Matrix a;  // weighted design moment, pd^2 x pd^2
};

// Solves the weighted normal equations with per-time weights sigma_inv_t.
WeightedFit weighted_fit(const Matrix& x, const Matrix& design, int p,
                         const std::vector<Matrix>& sigma_inv) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int dim = p * d * d;
  Matrix a = Matrix::Zero(dim, dim);
  Matrix sx = Matrix::Zero(d, d * p);  // weighted cross moment
  for (int t = 0; t < T; ++t) {
    const Vector xt = design.row(t).transpose();
    add_weighted_kron(a, xt, sigma_inv[t], 1.0 / T);
    sx += sigma_inv[t] * x.row(t).transpose() * xt.transpose() / T;
  }
  check_invertible(a, "weighted design moment");
  const Vector theta =
      matnum::symmetrize(a).ldlt().solve(matnum::vec(sx));
  WeightedFit fit;
  fit.coeffs = VarCoefficients::from_theta(d, p, theta);
  fit.a = matnum::symmetrize(a);
  return fit;
}

}  // namespace

const char* method_name(FitMethod m) {
  switch (m) {
    case FitMethod::OLS:
      return "OLS";
    case FitMethod::GLS:
      return "GLS";
    case FitMethod::ALS:
      return "ALS";
  }
  return "?";
}

Vector VarFit::theta_se(int T) const {
  Vector se(theta_cov.rows());
  for (Eigen::Index i = 0; i < se.size(); ++i) {
    se[i] = std::sqrt(std::max(theta_cov(i, i), 0.0) / T);
  }
  return se;
}

Matrix lagged_design(const Matrix& x, int p) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Matrix design = Matrix::Zero(T, d * p);
  for (int t = 0; t < T; ++t) {
    for (int lag = 1; lag <= p; ++lag) {
      if (t - lag >= 0) {
        design.row(t).segment((lag - 1) * d, d) = x.row(t - lag);
      }
    }
  }
  return design;
}

VarFit fit_ols(const Matrix& x, int p) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (p < 0) throw InvalidInput("order must be nonnegative");
  if (T <= d * p + 1) throw InvalidInput("sample too short for the order");

  VarFit fit;
  fit.method = FitMethod::OLS;
  fit.coeffs.d = d;
  fit.coeffs.p = p;
  if (p == 0) {
    fit.residuals_u = x;
    return fit;
  }

  const Matrix design = lagged_design(x, p);
  const Matrix s = design_moment(design, T);
  check_invertible(s, "design moment");
  const Matrix sx = x.transpose() * design / T;  // d x dp
  const Matrix coeff = s.ldlt().solve(sx.transpose()).transpose();
  for (int i = 0; i < p; ++i) {
    fit.coeffs.mats.push_back(coeff.block(0, i * d, d, d));
  }
  fit.residuals_u = residuals_from(x, design, fit.coeffs);

  // Lambda_3^{-1} Lambda_2 Lambda_3^{-1} with Lambda_3 = S (x) I_d.
  const Matrix s_inv = matnum::pd_inverse(matnum::symmetrize(s));
  Matrix lambda2 = Matrix::Zero(p * d * d, p * d * d);
  for (int t = 0; t < T; ++t) {
    const Matrix uu =
        fit.residuals_u.row(t).transpose() * fit.residuals_u.row(t);
    add_weighted_kron(lambda2, design.row(t).transpose(), uu, 1.0 / T);
  }
  const Matrix l3inv = matnum::kron(s_inv, Matrix::Identity(d, d));
  fit.theta_cov = matnum::symmetrize(l3inv * lambda2 * l3inv);
  return fit;
}

VarFit fit_gls(const Matrix& x, int p, const VolCurve& vol) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (d != vol.dim()) throw InvalidInput("volatility dimension mismatch");
  if (T <= d * p + 1) throw InvalidInput("sample too short for the order");

  std::vector<Matrix> sigma_inv(T);
  std::vector<Matrix> h_inv(T);
  for (int t = 1; t <= T; ++t) {
    const Matrix sig = vol.sigma(static_cast<double>(t) / T);
    try {
      h_inv[t - 1] = matnum::pd_inv_sqrt(sig);
    } catch (const SingularMatrix&) {
      throw NotPositiveDefinite("volatility not PD at t=" + std::to_string(t));
    }
    sigma_inv[t - 1] = h_inv[t - 1] * h_inv[t - 1];
  }

  VarFit fit;
  fit.method = FitMethod::GLS;
  fit.vol_known = vol;
  fit.coeffs.d = d;
  fit.coeffs.p = p;
  const Matrix design = lagged_design(x, p);
  if (p > 0) {
    WeightedFit wf = weighted_fit(x, design, p, sigma_inv);
    fit.coeffs = wf.coeffs;
    fit.theta_cov = matnum::symmetrize(matnum::pd_inverse(wf.a));
  }
  fit.residuals_u = residuals_from(x, design, fit.coeffs);
  fit.residuals_eps.resize(T, d);
  for (int t = 0; t < T; ++t) {
    fit.residuals_eps.row(t) =
        (h_inv[t] * fit.residuals_u.row(t).transpose()).transpose();
  }
  return fit;
}

VarFit fit_als(const Matrix& x, int p, const KernelConfig& cfg) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  VarFit ols = fit_ols(x, p);
  VolPathEstimate vol = estimate_vol_path(ols.residuals_u, cfg);

  std::vector<Matrix> sigma_inv(T);
  std::vector<Matrix> h_inv(T);
  for (int t = 0; t < T; ++t) {
    h_inv[t] = matnum::pd_inv_sqrt(vol.sigma_t[t]);
    sigma_inv[t] = h_inv[t] * h_inv[t];
  }

  VarFit fit;
  fit.method = FitMethod::ALS;
  fit.coeffs.d = d;
  fit.coeffs.p = p;
  const Matrix design = lagged_design(x, p);
  if (p > 0) {
    WeightedFit wf = weighted_fit(x, design, p, sigma_inv);
    fit.coeffs = wf.coeffs;
    fit.theta_cov = matnum::symmetrize(matnum::pd_inverse(wf.a));
  }
  fit.residuals_u = residuals_from(x, design, fit.coeffs);
  fit.residuals_eps.resize(T, d);
  for (int t = 0; t < T; ++t) {
    fit.residuals_eps.row(t) =
        (h_inv[t] * fit.residuals_u.row(t).transpose()).transpose();
  }
  fit.vol_estimate = std::move(vol);
  return fit;
}

LambdaSet lambda_set(const VarFit& fit, const Matrix& x) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int p = fit.coeffs.p;
  if (fit.residuals_u.rows() != T) {
    throw InvalidInput("fit residuals do not match the sample");
  }
  const Matrix& u = fit.residuals_u;

  LambdaSet set;
  set.sigma_G_hat = u.transpose() * u / T;
  set.sigma_G2_hat = Matrix::Zero(d * d, d * d);
  for (int t = 1; t < T; ++t) {
    set.sigma_G2_hat += matnum::kron(
        (u.row(t - 1).transpose() * u.row(t - 1)).eval(),
        (u.row(t).transpose() * u.row(t)).eval()) /
        T;
  }

  if (p > 0) {
    const Matrix design = lagged_design(x, p);
    const Matrix s = design_moment(design, T);
    set.lambda3_hat = matnum::kron(s, Matrix::Identity(d, d));
    Matrix lambda2 = Matrix::Zero(p * d * d, p * d * d);
    for (int t = 0; t < T; ++t) {
      const Matrix uu = u.row(t).transpose() * u.row(t);
      add_weighted_kron(lambda2, design.row(t).transpose(), uu, 1.0 / T);
    }
    set.lambda2_hat = matnum::symmetrize(lambda2);
  }

  // Volatility-standardized moments exist only when a path is available.
  std::vector<Matrix> h(T), h_inv(T);
  bool have_vol = false;
  if (fit.method == FitMethod::GLS && fit.vol_known) {
    for (int t = 1; t <= T; ++t) {
      const Matrix sig = fit.vol_known->sigma(static_cast<double>(t) / T);
      h[t - 1] = matnum::pd_sqrt(sig);
      h_inv[t - 1] = matnum::pd_inv_sqrt(sig);
    }
    have_vol = true;
  } else if (fit.method == FitMethod::ALS && fit.vol_estimate) {
    for (int t = 0; t < T; ++t) {
      h[t] = fit.vol_estimate->h_t[t];
      h_inv[t] = matnum::pd_inv_sqrt(fit.vol_estimate->sigma_t[t]);
    }
    have_vol = true;
  }
  if (have_vol) {
    set.g_mixed_hat = Matrix::Zero(d * d, d * d);
    for (int t = 0; t < T; ++t) {
      set.g_mixed_hat +=
          matnum::kron(h[t].transpose().eval(), h_inv[t]) / T;
    }
    if (p > 0) {
      const Matrix design = lagged_design(x, p);
      Matrix lambda1 = Matrix::Zero(p * d * d, p * d * d);
      for (int t = 0; t < T; ++t) {
        add_weighted_kron(lambda1, design.row(t).transpose(),
                          (h_inv[t] * h_inv[t]).eval(), 1.0 / T);
      }
      set.lambda1_hat = matnum::symmetrize(lambda1);
    }
  }
  return set;
}

}  // namespace hetvar
