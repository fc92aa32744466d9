#pragma once

namespace hetvar::dist {

double normal_cdf(double z);
double normal_sf(double z);

// Inverse standard normal CDF, accurate to ~1e-15 after refinement.
double normal_quantile(double p);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// P(chi2_df > x).
double chi2_sf(int df, double x);

// x with P(chi2_df > x) = p.
double chi2_quantile_upper(int df, double p);

}  // namespace hetvar::dist
