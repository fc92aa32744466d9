#include "hetvar/theory_oracles.hpp"

#include <algorithm>
#include <cmath>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar::oracles {

namespace {

struct Segment {
  double length;
  double v1;  // Sigma_1 level
  double v2;  // Sigma_2 level
};

std::vector<Segment> segments(const TwoRegimeSpec& spec) {
  std::vector<double> cuts{0.0, 1.0};
  for (double tau : {spec.tau1, spec.tau2}) {
    if (tau > 0.0 && tau < 1.0) cuts.push_back(tau);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    segs.push_back({cuts[i + 1] - cuts[i],
                    mid >= spec.tau1 ? spec.s11 : spec.s10,
                    mid >= spec.tau2 ? spec.s21 : spec.s20});
  }
  return segs;
}

double simpson_rec(const std::function<double(double)>& f, double a,
                   double fa, double b, double fb, double fm, double whole,
                   double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * eps, depth - 1);
}

double simpson(const std::function<double(double)>& f, double a, double b,
               double eps) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, b, fb, fm, whole, eps, 48);
}

Matrix integrate_matrix(const std::function<Matrix(double)>& f,
                        const std::vector<double>& breaks, double tol) {
  std::vector<double> cuts{0.0, 1.0};
  for (double b : breaks) {
    if (b > 0.0 && b < 1.0) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Matrix probe = f(0.5);
  Matrix out = Matrix::Zero(probe.rows(), probe.cols());
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    for (Eigen::Index j = 0; j < probe.cols(); ++j) {
      double total = 0.0;
      for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        total += simpson([&](double r) { return f(r)(i, j); }, cuts[s],
                         cuts[s + 1], tol);
      }
      out(i, j) = total;
    }
  }
  return out;
}

}  // namespace

PiecewiseVolIntegrals two_regime_integrals(const TwoRegimeSpec& spec) {
  if (spec.s10 <= 0 || spec.s11 <= 0 || spec.s20 <= 0 || spec.s21 <= 0) {
    throw NonPositiveVariance("two-regime levels must be positive");
  }
  PiecewiseVolIntegrals out;
  for (const Segment& s : segments(spec)) {
    out.s1 += s.length * s.v1;
    out.s2 += s.length * s.v2;
    out.s1_sq += s.length * s.v1 * s.v1;
    out.s2_sq += s.length * s.v2 * s.v2;
    out.s1s2 += s.length * s.v1 * s.v2;
    out.s1h_s2mh += s.length * std::sqrt(s.v1 / s.v2);
    out.s1mh_s2h += s.length * std::sqrt(s.v2 / s.v1);
    out.s1_over_s2 += s.length * s.v1 / s.v2;
    out.s2_over_s1 += s.length * s.v2 / s.v1;
  }
  return out;
}

Example1Cov example1_cov(const TwoRegimeSpec& spec, int m) {
  if (m < 1) throw InvalidInput("m must be positive");
  const PiecewiseVolIntegrals v = two_regime_integrals(spec);
  const int n = 4 * m;
  Example1Cov out;
  out.sigma_ols = Matrix::Zero(n, n);
  out.sigma_gls = Matrix::Zero(n, n);
  out.sigma_ols_spurious = Matrix::Zero(n, n);

  Vector breve_ols(4);
  breve_ols << v.s1_sq, v.s1s2, v.s1s2, v.s2_sq;
  Vector breve_spur(4);
  breve_spur << v.s1 * v.s1, v.s1 * v.s2, v.s2 * v.s1, v.s2 * v.s2;
  for (int h = 1; h < m; ++h) {
    for (int k = 0; k < 4; ++k) {
      out.sigma_ols(4 * h + k, 4 * h + k) = breve_ols[k];
      out.sigma_ols_spurious(4 * h + k, 4 * h + k) = breve_spur[k];
    }
  }

  Vector breve_gls(4);
  breve_gls << 0.0,
      1.0 - v.s1h_s2mh * v.s1h_s2mh / v.s1_over_s2,
      1.0 - v.s1mh_s2h * v.s1mh_s2h / v.s2_over_s1, 0.0;
  for (int k = 0; k < 4; ++k) {
    out.sigma_gls(k, k) = breve_gls[k];
  }
  for (int j = 4; j < n; ++j) out.sigma_gls(j, j) = 1.0;
  return out;
}

Matrix example2_delta(const TwoRegimeSpec& spec, int m) {
  if (m < 1) throw InvalidInput("m must be positive");
  const PiecewiseVolIntegrals v = two_regime_integrals(spec);
  Matrix delta = Matrix::Zero(4 * m, 4 * m);
  Vector breve(4);
  breve << v.s1_sq / (v.s1 * v.s1), v.s1s2 / (v.s1 * v.s2),
      v.s1s2 / (v.s1 * v.s2), v.s2_sq / (v.s2 * v.s2);
  for (int h = 1; h < m; ++h) {
    for (int k = 0; k < 4; ++k) {
      delta(4 * h + k, 4 * h + k) = breve[k];
    }
  }
  return delta;
}

double c_sigma_two_regime(double s0, double s1, double tau) {
  if (s0 <= 0 || s1 <= 0) throw NonPositiveVariance("levels must be positive");
  if (tau < 0 || tau > 1) throw InvalidBreakDate("tau must lie in [0,1]");
  const double m2 = tau * s0 + (1.0 - tau) * s1;
  const double m4 = tau * s0 * s0 + (1.0 - tau) * s1 * s1;
  return m4 / (m2 * m2);
}

double c_sigma_affine_trend(double slope) {
  const double m2 = 1.0 + 0.5 * slope;
  const double m4 = 1.0 + slope + slope * slope / 3.0;
  return m4 / (m2 * m2);
}

double integrate_scalar(const std::function<double(double)>& f,
                        const std::vector<double>& breaks, double tol) {
  std::vector<double> cuts{0.0, 1.0};
  for (double b : breaks) {
    if (b > 0.0 && b < 1.0) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    total += simpson(f, cuts[s], cuts[s + 1], tol);
  }
  return total;
}

Matrix integrate_sigma(const VolCurve& vol) {
  return integrate_matrix([&](double r) { return vol.sigma(r); },
                          vol.breakpoints(), 1e-12);
}

Matrix integrate_sigma_kron(const VolCurve& vol) {
  return integrate_matrix(
      [&](double r) {
        const Matrix s = vol.sigma(r);
        return matnum::kron(s, s);
      },
      vol.breakpoints(), 1e-12);
}

Matrix integrate_gt_kron_ginv(const VolCurve& vol) {
  return integrate_matrix(
      [&](double r) {
        const Matrix s = vol.sigma(r);
        return matnum::kron(matnum::pd_sqrt(s).transpose().eval(),
                            matnum::pd_inv_sqrt(s));
      },
      vol.breakpoints(), 1e-12);
}

SlopeReport bahadur_slopes(const Matrix& b, const VolCurve& vol, int m) {
  const int d = static_cast<int>(b.rows());
  if (b.cols() != d || d != vol.dim()) {
    throw InvalidInput("alternative matrix does not match the curve");
  }
  if (spectral_radius(b) >= 1.0 - 1e-10) {
    throw UnstableAlternative("bahadur_slopes requires a stable alternative");
  }

  const Matrix s = integrate_sigma(vol);
  const Matrix s_kron = integrate_sigma_kron(vol);
  const Matrix g_mixed = integrate_gt_kron_ginv(vol);
  const Matrix id = Matrix::Identity(d, d);

  const Matrix w_ols = matnum::kron(s, matnum::pd_inverse(s));
  const Matrix s_ext = matnum::kron(s, id);
  const Matrix w_und =
      s_ext * matnum::pd_inverse(matnum::symmetrize(s_kron)) * s_ext;
  const Matrix w_als = g_mixed * g_mixed;

  SlopeReport rep;
  Matrix bpow = id;
  for (int h = 1; h <= m; ++h) {
    bpow = bpow * b;
    const Vector v = matnum::vec(bpow);
    rep.raw_ols += v.dot(w_ols * v);
    rep.raw_underline += v.dot(w_und * v);
    rep.raw_als += v.dot(w_als * v);
  }

  const Matrix rt = matnum::pd_inv_sqrt(s);
  const Matrix scale = matnum::kron(rt, rt);
  rep.max_delta_ols =
      matnum::eigvals_sym(matnum::symmetrize(scale * s_kron * scale))[0];

  rep.slope_ols = rep.raw_ols / rep.max_delta_ols;
  rep.slope_underline = rep.raw_underline;
  rep.slope_als = rep.raw_als;
  auto ratio = [](double a, double bb) {
    if (a == 0.0 && bb == 0.0) return 1.0;
    return a / bb;
  };
  rep.are_underline_vs_ols = ratio(rep.slope_underline, rep.slope_ols);
  rep.are_als_vs_ols = ratio(rep.slope_als, rep.slope_ols);
  rep.are_als_vs_underline = ratio(rep.slope_als, rep.slope_underline);
  return rep;
}

namespace {
nlohmann::json matrix_json(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}
}  // namespace

nlohmann::json oracle_fixture(const TwoRegimeSpec& spec, int m) {
  const PiecewiseVolIntegrals v = two_regime_integrals(spec);
  const Example1Cov cov = example1_cov(spec, m);
  nlohmann::json j;
  j["spec"] = {{"s10", spec.s10}, {"s11", spec.s11}, {"s20", spec.s20},
               {"s21", spec.s21}, {"tau1", spec.tau1}, {"tau2", spec.tau2}};
  j["m"] = m;
  j["integrals"] = {
      {"s1", v.s1},           {"s2", v.s2},
      {"s1_sq", v.s1_sq},     {"s2_sq", v.s2_sq},
      {"s1s2", v.s1s2},       {"s1h_s2mh", v.s1h_s2mh},
      {"s1mh_s2h", v.s1mh_s2h}, {"s1_over_s2", v.s1_over_s2},
      {"s2_over_s1", v.s2_over_s1}};
  j["sigma_ols"] = matrix_json(cov.sigma_ols);
  j["sigma_gls"] = matrix_json(cov.sigma_gls);
  j["sigma_ols_spurious"] = matrix_json(cov.sigma_ols_spurious);
  j["delta_ols"] = matrix_json(example2_delta(spec, m));
  return j;
}

}  // namespace hetvar::oracles
