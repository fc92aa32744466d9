#include "hetvar/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hetvar/errors.hpp"

namespace hetvar::quadform {

namespace {

struct Integrand {
  std::vector<double> delta;  // active (positive) weights
  double x = 0.0;

  double theta(double u) const {
    double s = 0.0;
    for (double d : delta) s += std::atan(d * u);
    return 0.5 * s - 0.5 * x * u;
  }

  double dtheta(double u) const {
    double s = 0.0;
    for (double d : delta) s += d / (1.0 + d * d * u * u);
    return 0.5 * (s - x);
  }

  // log of rho(u) = prod (1 + d^2 u^2)^{1/4}, kept in log space so that
  // n ~ 60 weights cannot overflow.
  double log_rho(double u) const {
    double s = 0.0;
    for (double d : delta) s += std::log1p(d * d * u * u);
    return 0.25 * s;
  }

  double operator()(double u) const {
    if (u == 0.0) return dtheta(0.0);
    return std::sin(theta(u)) / (u * std::exp(log_rho(u)));
  }
};

double adaptive_simpson(const Integrand& f, double a, double fa, double b,
                        double fb, double fm, double whole, double eps,
                        int depth) {
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
  return adaptive_simpson(f, a, fa, m, fm, flm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, fm, b, fb, frm, right, 0.5 * eps, depth - 1);
}

double integrate_segment(const Integrand& f, double a, double b, double eps) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, fa, b, fb, fm, whole, eps, 40);
}

// Root of theta(u) = target on an interval where theta is monotone.
double bisect_theta(const Integrand& f, double lo, double hi, double target,
                    bool increasing) {
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = f.theta(mid) < target;
    if (below == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

// Repeated-averaging (Euler) acceleration of an alternating tail.
double euler_sum(const std::vector<double>& terms) {
  std::vector<double> s(terms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    acc += terms[i];
    s[i] = acc;
  }
  for (std::size_t k = 1; k < terms.size(); ++k) {
    for (std::size_t i = 0; i + k < terms.size(); ++i) {
      s[i] = 0.5 * (s[i] + s[i + 1]);
    }
  }
  return s[0];
}

}  // namespace

WeightedChiSq make_weighted_chisq(Vector w, double tolerance) {
  if (w.size() == 0) throw InvalidInput("weight vector is empty");
  const double wmax = w.size() ? w.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < -1e-9 * std::max(1.0, wmax)) {
      throw InvalidInput("negative weight in weighted chi-square law");
    }
    if (w[i] < 0.0) w[i] = 0.0;
  }
  std::sort(w.data(), w.data() + w.size(), std::greater<double>());
  return WeightedChiSq{std::move(w), tolerance};
}

double upper_tail(const WeightedChiSq& law, double x) {
  const double tol = law.tolerance > 0 ? law.tolerance : 1e-8;
  Integrand f;
  const double wmax = law.weights.size() ? law.weights.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < law.weights.size(); ++i) {
    // Eigenvalues this far below the largest carry no distributional mass.
    if (law.weights[i] > 1e-12 * wmax) f.delta.push_back(law.weights[i]);
  }
  if (f.delta.empty()) return 0.0;  // point mass at zero
  if (x <= 0.0) return 1.0;
  f.x = x;

  // Locate the maximum of theta; theta is 0 at u=0, has at most one interior
  // maximum, and decreases to -infinity.
  double sum_delta = 0.0;
  double sum_inv = 0.0;
  for (double d : f.delta) {
    sum_delta += d;
    sum_inv += 1.0 / d;
  }
  double ustar = 0.0;
  if (sum_delta > x) {
    double hi = std::sqrt(sum_inv / x) + 1.0;
    while (f.dtheta(hi) > 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 120; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f.dtheta(mid) > 0.0 ? lo : hi) = mid;
    }
    ustar = 0.5 * (lo + hi);
  }
  const double theta_max = f.theta(ustar);

  // Segment boundaries where theta crosses integer multiples of pi; the sign
  // of sin(theta) is constant within each segment.
  std::vector<double> bounds{0.0};
  const int k_up = static_cast<int>(std::floor(theta_max / M_PI));
  for (int k = 1; k <= k_up; ++k) {
    bounds.push_back(bisect_theta(f, 0.0, ustar, k * M_PI, true));
  }

  const double seg_eps = tol * 1e-4;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    total += integrate_segment(f, bounds[i], bounds[i + 1], seg_eps);
  }

  // Descending chain: targets k_up*pi, (k_up-1)*pi, ..., 0, -pi, -2pi, ...
  double prev = bounds.back();
  double prev_width = std::max(2.0 * M_PI / x, 0.25 * (ustar + 1e-6));
  int k = k_up;
  const int max_terms = 200000;
  std::vector<double> tail;  // candidate terms for Euler acceleration
  bool converged = false;
  double direct = 0.0;
  int small_count = 0;
  for (int j = 0; j < max_terms; ++j) {
    --k;
    const double target = k * M_PI;
    double lo = prev;
    double hi = prev + prev_width;
    int guard = 0;
    while (f.theta(hi) > target) {
      lo = hi;
      hi += prev_width;
      prev_width *= 2.0;
      if (++guard > 400) throw ConvergenceFailure("imhof bracket expansion");
    }
    const double root = bisect_theta(f, lo, hi, target, false);
    const double term = integrate_segment(f, prev, root, seg_eps);
    prev_width = std::max(root - prev, 1e-12);
    prev = root;

    if (tail.empty() && j < 64) {
      direct += term;
      if (std::abs(term) < 0.5 * tol) {
        if (++small_count >= 2) {
          converged = true;
          break;
        }
      } else {
        small_count = 0;
      }
    } else {
      tail.push_back(term);
      if (tail.size() >= 32) {
        const double full = euler_sum(tail);
        std::vector<double> shorter(tail.begin(), tail.end() - 4);
        const double check = euler_sum(shorter);
        if (std::abs(full - check) < 0.25 * tol) {
          direct += full;
          converged = true;
          break;
        }
        // Fold the oldest terms into the direct sum and keep collecting.
        direct += tail.front();
        tail.erase(tail.begin());
      }
    }
  }
  if (!converged) throw ConvergenceFailure("imhof series did not converge");
  total += direct;

  const double p = 0.5 + total / M_PI;
  return std::min(1.0, std::max(0.0, p));
}

double quantile(const WeightedChiSq& law, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw InvalidInput("quantile requires prob in (0,1)");
  }
  double mean = 0.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < law.weights.size(); ++i) {
    mean += law.weights[i];
    var += 2.0 * law.weights[i] * law.weights[i];
  }
  if (mean == 0.0) throw InvalidInput("quantile of a degenerate law");
  double lo = 0.0;
  double hi = mean + 10.0 * std::sqrt(var);
  int guard = 0;
  while (upper_tail(law, hi) > prob) {
    hi *= 2.0;
    if (++guard > 200) throw ConvergenceFailure("quantile bracket expansion");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (upper_tail(law, mid) > prob) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace hetvar::quadform
