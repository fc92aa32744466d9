#include "hetvar/portmanteau.hpp"

#include <cmath>

#include "hetvar/distributions.hpp"
#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar {

namespace {

// Condition number of a symmetric PSD matrix; infinite when not PD.
double sym_condition(const Matrix& a) {
  Vector ev = matnum::eigvals_sym(matnum::symmetrize(a));
  const double lo = ev[ev.size() - 1];
  const double hi = ev[0];
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

constexpr double kConditionGate = 1e12;

// Lag-h block of gamma scaled by sqrt(T/(T-h)); turns the plain quadratic
// form into its Ljung-Box counterpart.
Vector scaled_gamma(const AutocovPanel& panel, bool ljung_box) {
  if (!ljung_box) return panel.gamma;
  Vector g = panel.gamma;
  const int block = panel.d * panel.d;
  for (int h = 1; h <= panel.m; ++h) {
    g.segment((h - 1) * block, block) *=
        std::sqrt(static_cast<double>(panel.T) / (panel.T - h));
  }
  return g;
}

double chi2_pvalue(int df, double stat) { return dist::chi2_sf(df, stat); }

TestReport weighted_report(std::string name, const AutocovPanel& panel,
                           double stat,
                           const quadform::WeightedChiSq& law) {
  TestReport r;
  r.name = std::move(name);
  r.m = panel.m;
  r.statistic = stat;
  r.law.type = TestLaw::Type::WeightedChiSq;
  r.law.weights = law.weights;
  r.p_value = quadform::upper_tail(law, stat);
  return r;
}

}  // namespace

nlohmann::json TestReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["m"] = m;
  j["feasible"] = feasible;
  if (!feasible) {
    j["statistic"] = nullptr;
    j["p_value"] = nullptr;
  } else {
    j["statistic"] = statistic;
    j["p_value"] = p_value;
  }
  switch (law.type) {
    case TestLaw::Type::WeightedChiSq: {
      std::vector<double> w(law.weights.data(),
                            law.weights.data() + law.weights.size());
      j["law"] = {{"type", "weighted-chisq"}, {"weights", w}};
      break;
    }
    case TestLaw::Type::ChiSq:
      j["law"] = {{"type", "chisq"}, {"df", law.df}};
      break;
    case TestLaw::Type::ChiSqNaive:
      j["law"] = {{"type", "chisq-naive"}, {"df", law.df}};
      break;
  }
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

double bp_stat(const AutocovPanel& panel, bool ljung_box, char variant) {
  const int T = panel.T;
  const int d = panel.d;
  if (variant != 'a' && variant != 'b') {
    throw InvalidInput("variant must be 'a' or 'b'");
  }
  Matrix g0inv;
  if (variant == 'a') {
    Vector ev = matnum::eigvals_sym(panel.gamma0);
    if (!(ev[ev.size() - 1] > 1e-12 * std::max(ev[0], 1e-300))) {
      throw SingularGamma0("lag-zero autocovariance is singular");
    }
    g0inv = matnum::pd_inverse(panel.gamma0);
  }

  double stat = 0.0;
  for (int h = 1; h <= panel.m; ++h) {
    const Matrix& g = panel.gammas[h - 1];
    const double w =
        ljung_box ? static_cast<double>(T) * T / (T - h) : static_cast<double>(T);
    if (variant == 'a') {
      stat += w * (g.transpose() * g0inv * g * g0inv).trace();
    } else {
      stat += w * g.squaredNorm();
    }
  }

  // Cross-check the trace form against the Kronecker quadratic form.
  const Vector gam = scaled_gamma(panel, ljung_box);
  double qform;
  if (variant == 'a') {
    const Matrix weight =
        matnum::kron(Matrix::Identity(panel.m, panel.m),
                     matnum::kron(g0inv, g0inv));
    qform = T * gam.dot(weight * gam);
  } else {
    qform = T * gam.squaredNorm();
  }
  if (std::abs(stat - qform) > 1e-10 * std::max(1.0, std::abs(stat))) {
    throw Error("trace and quadratic-form statistics disagree");
  }
  (void)d;
  return stat;
}

double bp_ols(const AutocovPanel& panel) { return bp_stat(panel, false, 'a'); }
double lb_ols(const AutocovPanel& panel) { return bp_stat(panel, true, 'a'); }
double bp_als(const AutocovPanel& panel, char variant) {
  return bp_stat(panel, false, variant);
}
double lb_als(const AutocovPanel& panel, char variant) {
  return bp_stat(panel, true, variant);
}

quadform::WeightedChiSq weights_ols(const ResidualCovEstimate& cov,
                                    const Matrix& sigma_G) {
  const Matrix w = matnum::pd_inv_sqrt(sigma_G);
  const int m = static_cast<int>(cov.sigma_ols.rows()) /
                static_cast<int>(w.rows() * w.rows());
  const Matrix scale =
      matnum::kron(Matrix::Identity(m, m), matnum::kron(w, w));
  const Matrix delta = matnum::symmetrize(scale * cov.sigma_ols * scale);
  Vector ev = matnum::eigvals_sym(delta);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev[i] = std::max(ev[i], 0.0);
  }
  return quadform::make_weighted_chisq(ev);
}

quadform::WeightedChiSq weights_als(const ResidualCovEstimate& cov) {
  if (cov.sigma_gls.size() == 0) {
    throw InvalidInput("weights_als needs a standardized-residual fit");
  }
  Vector ev = matnum::eigvals_sym(cov.sigma_gls);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev[i] = std::min(1.0, std::max(ev[i], 0.0));
  }
  return quadform::make_weighted_chisq(ev);
}

TestReport modified_ols(const AutocovPanel& panel,
                        const DiagCovComponents& comps, bool ljung_box) {
  const int d = panel.d;
  const int m = panel.m;
  const int p = comps.p;
  const int n = d * d * m;
  if (p > 0 && m <= p) throw InvalidInput("modified tests need m > p");

  TestReport r;
  r.name = ljung_box ? "LBmod_OLS" : "BPmod_OLS";
  r.m = m;
  r.law.type = TestLaw::Type::ChiSq;
  r.law.df = d * d * (m - p);

  const Matrix& a = comps.lambda_u_u;
  if (sym_condition(a) > kConditionGate) {
    r.feasible = false;
    r.notes = "Lambda_m^{u,u} is numerically singular";
    return r;
  }
  const Matrix a_inv = matnum::pd_inverse(a);
  const Vector gam = scaled_gamma(panel, ljung_box);
  if (p == 0) {
    r.statistic = panel.T * gam.dot(a_inv * gam);
    r.law.df = n;
  } else {
    const Matrix gram = matnum::symmetrize(comps.phi_u.transpose() * a_inv *
                                           comps.phi_u);
    if (sym_condition(gram) > kConditionGate) {
      r.feasible = false;
      r.notes = "Phi' (Lambda^{u,u})^{-1} Phi is numerically singular";
      return r;
    }
    const Matrix dmat =
        comps.phi_u * matnum::pd_inverse(gram) * comps.phi_u.transpose() *
        a_inv;
    const Vector resid = (Matrix::Identity(n, n) - dmat) * gam;
    r.statistic = panel.T * resid.dot(a_inv * resid);
  }
  r.p_value = chi2_pvalue(r.law.df, r.statistic);
  return r;
}

TestReport modified_als(const AutocovPanel& panel,
                        const DiagCovComponents& comps, bool ljung_box) {
  const int d = panel.d;
  const int m = panel.m;
  const int p = comps.p;
  const int n = d * d * m;
  if (p > 0 && m <= p) throw InvalidInput("modified tests need m > p");

  TestReport r;
  r.name = ljung_box ? "LBmod_ALS" : "BPmod_ALS";
  r.m = m;
  r.law.type = TestLaw::Type::ChiSq;
  r.law.df = d * d * (m - p);

  const Vector gam = scaled_gamma(panel, ljung_box);
  if (p == 0) {
    r.statistic = panel.T * gam.squaredNorm();
    r.law.df = n;
  } else {
    const Matrix& lam = comps.lambda_eps_theta;
    if (lam.size() == 0) {
      r.feasible = false;
      r.notes = "no standardized-volatility components available";
      return r;
    }
    const Matrix gram = matnum::symmetrize(lam.transpose() * lam);
    if (sym_condition(gram) > kConditionGate) {
      r.feasible = false;
      r.notes = "Lambda^{eps,theta'} Lambda^{eps,theta} is numerically singular";
      return r;
    }
    const Matrix dmat = lam * matnum::pd_inverse(gram) * lam.transpose();
    const Vector resid = (Matrix::Identity(n, n) - dmat) * gam;
    r.statistic = panel.T * gam.dot(resid);
  }
  r.p_value = chi2_pvalue(r.law.df, r.statistic);
  return r;
}

std::vector<TestReport> run_all(const Matrix& x, int p, int m, double level,
                                const KernelConfig& cfg,
                                const VolCurve* known_vol) {
  std::vector<TestReport> reports;
  auto guard = [&reports, m](const std::string& name, auto&& fn) {
    try {
      reports.push_back(fn());
    } catch (const Error& e) {
      TestReport r;
      r.name = name;
      r.m = m;
      r.feasible = false;
      r.notes = e.what();
      reports.push_back(r);
    }
  };

  // OLS side
  VarFit ols = fit_ols(x, p);
  AutocovPanel panel_u = autocov_panel(ols.residuals_u, m, FitMethod::OLS);
  LambdaSet set_ols = lambda_set(ols, x);
  DiagCovComponents comps_ols = diag_components(ols, set_ols, m);

  guard("LB_S", [&] {
    TestReport r;
    r.name = "LB_S";
    r.m = m;
    r.statistic = lb_ols(panel_u);
    r.law.type = TestLaw::Type::ChiSqNaive;
    r.law.df = std::max(1, panel_u.d * panel_u.d * (m - p));
    r.p_value = chi2_pvalue(r.law.df, r.statistic);
    return r;
  });
  guard("LB_OLS", [&] {
    ResidualCovEstimate cov = residual_cov(ols, comps_ols, set_ols, m);
    auto law = weights_ols(cov, set_ols.sigma_G_hat);
    TestReport bp = weighted_report("BP_OLS", panel_u, bp_ols(panel_u), law);
    reports.push_back(bp);
    return weighted_report("LB_OLS", panel_u, lb_ols(panel_u), law);
  });
  guard("LBmod_OLS", [&] { return modified_ols(panel_u, comps_ols, true); });

  // ALS side
  guard("LB_ALS", [&] {
    VarFit als = fit_als(x, p, cfg);
    AutocovPanel panel_eps =
        autocov_panel(als.residuals_eps, m, FitMethod::ALS);
    LambdaSet set_als = lambda_set(als, x);
    DiagCovComponents comps_als = diag_components(als, set_als, m);
    ResidualCovEstimate cov = residual_cov(als, comps_als, set_als, m);
    auto law = weights_als(cov);
    reports.push_back(weighted_report("BP_ALS_a", panel_eps,
                                      bp_als(panel_eps, 'a'), law));
    reports.push_back(weighted_report("BP_ALS_b", panel_eps,
                                      bp_als(panel_eps, 'b'), law));
    reports.push_back(weighted_report("LB_ALS_b", panel_eps,
                                      lb_als(panel_eps, 'b'), law));
    reports.push_back(modified_als(panel_eps, comps_als, true));
    return weighted_report("LB_ALS", panel_eps, lb_als(panel_eps, 'a'), law);
  });

  // Infeasible GLS benchmark, only with a known volatility path.
  if (known_vol != nullptr) {
    guard("LB_GLS", [&] {
      VarFit gls = fit_gls(x, p, *known_vol);
      AutocovPanel panel_eps =
          autocov_panel(gls.residuals_eps, m, FitMethod::GLS);
      LambdaSet set_gls = lambda_set(gls, x);
      DiagCovComponents comps_gls = diag_components(gls, set_gls, m);
      ResidualCovEstimate cov = residual_cov(gls, comps_gls, set_gls, m);
      auto law = weights_als(cov);
      TestReport mod = modified_als(panel_eps, comps_gls, true);
      mod.name = "LBmod_GLS";
      reports.push_back(mod);
      return weighted_report("LB_GLS", panel_eps, lb_als(panel_eps, 'a'),
                             law);
    });
  }

  for (TestReport& r : reports) {
    if (r.feasible && r.p_value < level) {
      r.notes = r.notes.empty() ? "reject" : r.notes + "; reject";
    }
  }
  return reports;
}

}  // namespace hetvar
