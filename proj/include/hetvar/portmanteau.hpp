#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hetvar/diagnostics.hpp"
#include "hetvar/quadform.hpp"

namespace hetvar {

struct TestLaw {
  enum class Type { WeightedChiSq, ChiSq, ChiSqNaive };
  Type type = Type::ChiSq;
  Vector weights;  // weighted-chisq case
  int df = 0;      // chi-square cases
};

struct TestReport {
  std::string name;
  int m = 0;
  double statistic = 0.0;
  TestLaw law;
  double p_value = 1.0;
  bool feasible = true;
  std::string notes;

  nlohmann::json to_json() const;
};

// Box-Pierce / Ljung-Box trace statistics on a residual panel. The a-variant
// weights by Gamma(0)^{-1}; the b-variant (standardized panels) does not.
double bp_stat(const AutocovPanel& panel, bool ljung_box, char variant);

double bp_ols(const AutocovPanel& panel);
double lb_ols(const AutocovPanel& panel);
double bp_als(const AutocovPanel& panel, char variant);
double lb_als(const AutocovPanel& panel, char variant);

// Eigenvalue weights of Delta_m^{OLS}; nonnegative.
quadform::WeightedChiSq weights_ols(const ResidualCovEstimate& cov,
                                    const Matrix& sigma_G);
// Eigenvalue weights of Sigma^{GLS}; in [0,1].
quadform::WeightedChiSq weights_als(const ResidualCovEstimate& cov);

// Wald-type statistics with chi-square(d^2(m-p)) laws (d^2 m when p = 0).
// ljung_box rescales the lag-h autocovariance block by sqrt(T/(T-h)).
// A numerically singular inner Gram matrix is reported as infeasible.
TestReport modified_ols(const AutocovPanel& panel,
                        const DiagCovComponents& comps, bool ljung_box);
TestReport modified_als(const AutocovPanel& panel,
                        const DiagCovComponents& comps, bool ljung_box);

// Full battery on one series: naive LB, corrected OLS BP/LB, ALS BP/LB in
// both variants, the modified statistics, and (when known_vol is given) the
// infeasible GLS versions.
std::vector<TestReport> run_all(const Matrix& x, int p, int m, double level,
                                const KernelConfig& cfg,
                                const VolCurve* known_vol = nullptr);

}  // namespace hetvar
