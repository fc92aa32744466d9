#pragma once

#include "hetvar/matrix.hpp"

namespace hetvar::quadform {

// Law of sum_i delta_i * U_i^2 with U_i independent standard normal.
struct WeightedChiSq {
  Vector weights;          // nonnegative, sorted descending
  double tolerance = 1e-8; // absolute target for tail probabilities
};

// Sorts descending; tiny negatives from eigensolves are clamped to zero,
// genuine negatives are rejected.
WeightedChiSq make_weighted_chisq(Vector w, double tolerance = 1e-8);

// P(Q > x) via Imhof (1961) integration of the characteristic function.
double upper_tail(const WeightedChiSq& law, double x);

// x such that upper_tail(law, x) = prob, by bracketed bisection.
double quantile(const WeightedChiSq& law, double prob);

}  // namespace hetvar::quadform
