#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "hetvar/matrix.hpp"

namespace hetvar {

enum class KernelType { Gaussian, Triangular, Epanechnikov };

enum class BandwidthMode { Single, PerCell };

// Bandwidths are scanned over [c_min * b_T, c_max * b_T] with b_T = T^{-1/3}
// on a log-spaced grid.
struct KernelConfig {
  KernelType kernel = KernelType::Gaussian;
  BandwidthMode bandwidth_mode = BandwidthMode::Single;
  double c_min = 0.2;
  double c_max = 5.0;
  int grid_points = 200;
  double nu_t = 0.0;

  // T^{-3/5}: one decade inside the T nu^2 -> 0 constraint, for use when
  // per-cell bandwidths call for regularization.
  static double recommended_nu(int T);

  nlohmann::json to_json() const;
  static KernelConfig from_json(const nlohmann::json& j);
};

struct VolPathEstimate {
  std::vector<Matrix> sigma_t;  // regularized path
  std::vector<Matrix> h_t;      // PD square roots
  Matrix bandwidths;            // d x d symmetric
  double cv_score = 0.0;
};

double kernel_value(KernelType kernel, double z);

// Leave-one-out weights w_{t.} for 1 <= t <= T; nonnegative, w_tt = 0,
// summing to one. Throws DegenerateKernel when every K_ti vanishes.
Vector kernel_weights(int t, int T, double b, KernelType kernel);

// Entrywise smoothed outer products: entry (k,l) of the t-th matrix is
// sum_i w_ti(b_kl) u_ki u_li.
std::vector<Matrix> smooth_residual_covariance(const Matrix& residuals,
                                               const KernelConfig& cfg,
                                               const Matrix& bandwidths);

// {(S^0)^2 + nu I}^{1/2} applied per time point.
std::vector<Matrix> regularize(const std::vector<Matrix>& sigma0,
                               double nu_t);

struct CvResult {
  Matrix bandwidths;
  double score = 0.0;
  std::vector<std::pair<double, double>> trace;  // (bandwidth, score)
};

CvResult cross_validate(const Matrix& residuals, const KernelConfig& cfg);

// cross_validate + smooth + regularize + square roots.
VolPathEstimate estimate_vol_path(const Matrix& residuals,
                                  const KernelConfig& cfg);

}  // namespace hetvar
