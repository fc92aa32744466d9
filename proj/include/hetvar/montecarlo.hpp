#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hetvar/var_model.hpp"
#include "hetvar/vol_kernel.hpp"

namespace hetvar::mc {

// Simulation designs: the bivariate VAR(2) with second-lag coefficient a*I
// (a = 0 under the null), and the uncorrelatedness design X_t = -0.3 X_{t-1}
// + u_t tested at p = 0.
enum class DgpKind { Var2, Uncorr };

enum class VolKind { Iid, Break, Trend, ScalarTrend, ScalarBreak };

struct ExperimentConfig {
  DgpKind dgp = DgpKind::Var2;
  double a = 0.0;
  VolKind vol = VolKind::Iid;
  double varpi = 0.2;
  double rho = 0.0;
  double scalar_trend_slope = 150.0;
  double scalar_break_jump = 10.0;
  std::vector<int> T_list{50, 100, 200};
  int N = 1000;
  std::vector<int> m_list{5, 15};
  double level = 0.05;
  int fit_p = 1;
  std::vector<std::string> tests;  // empty -> full battery
  std::uint64_t seed_root = 20120421;
  int workers = 1;
  KernelConfig kernel;

  VarCoefficients dgp_coefficients() const;
  VolCurve vol_curve() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Built-in study presets: 1-3 the size tables, 4 the weight table,
// 5 the underspecified-order power design, 6 the uncorrelatedness power
// design (scalar trend), 7 its scalar-break twin.
ExperimentConfig study_preset(int table);

struct RejectionTable {
  std::vector<std::string> rows;
  std::vector<std::pair<int, int>> cols;  // (T, m)
  Matrix cells;                           // percent rejections
  std::vector<std::vector<int>> infeasible;
  int attempted = 0;
  int failures = 0;
  double level = 0.05;
  double band_lo = 0.0;  // percent
  double band_hi = 0.0;

  double cell(const std::string& row, int T, int m) const;
  std::string to_csv() const;
  std::string to_text() const;
};

RejectionTable run_size(const ExperimentConfig& cfg);
RejectionTable run_power(const ExperimentConfig& cfg);

struct WeightSummary {
  int T = 0;
  int m = 0;
  int attempted = 0;
  int failures = 0;
  std::vector<std::string> rows;  // methods
  Matrix mean;                    // rows x d^2 m, ascending weight index
  Matrix sd;

  std::string to_csv() const;
  std::string to_text() const;
};

WeightSummary weight_summary(const ExperimentConfig& cfg);

}  // namespace hetvar::mc
