#include "hetvar/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "hetvar/diagnostics.hpp"
#include "hetvar/distributions.hpp"
#include "hetvar/errors.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/portmanteau.hpp"

namespace hetvar::mc {

namespace {

const std::vector<std::string> kDefaultTests{
    "LB_S", "LB_OLS", "LB_ALS", "LB_GLS",
    "LBmod_OLS", "LBmod_ALS", "LBmod_GLS"};

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int count = std::min(workers, n);
  pool.reserve(count);
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Cell states for one replication.
enum : std::int8_t { kAccept = 0, kReject = 1, kInfeasible = 2, kFailed = 3 };

struct RepOutcome {
  bool failed = false;
  std::vector<std::int8_t> cells;  // m_list x tests, row-major
  Vector w_ols, w_als, w_gls;      // ascending; only in weight mode
};

struct Battery {
  bool ols = false, als = false, gls = false;
  bool cov_ols = false;  // corrected OLS law needed
};

Battery battery_for(const std::vector<std::string>& tests) {
  Battery b;
  for (const std::string& t : tests) {
    if (t == "LB_S" || t == "LB_OLS" || t == "LBmod_OLS") b.ols = true;
    if (t == "LB_OLS") b.cov_ols = true;
    if (t == "LB_ALS" || t == "LBmod_ALS") b.als = true;
    if (t == "LB_GLS" || t == "LBmod_GLS") b.gls = true;
  }
  return b;
}

RepOutcome run_replication(const ExperimentConfig& cfg, int T, int rep,
                           const std::vector<std::string>& tests,
                           bool collect_weights) {
  RepOutcome out;
  out.cells.assign(cfg.m_list.size() * tests.size(), kFailed);
  const Battery need = battery_for(tests);
  try {
    const VarCoefficients coeffs = cfg.dgp_coefficients();
    const VolCurve vol = cfg.vol_curve();
    SimConfig sim;
    sim.T = T;
    sim.seed = derive_seed(cfg.seed_root, static_cast<std::uint64_t>(T),
                           static_cast<std::uint64_t>(rep));
    const Matrix x = simulate(coeffs, vol, sim);
    const int p = cfg.fit_p;

    VarFit ols, als, gls;
    LambdaSet set_ols, set_als, set_gls;
    if (need.ols || collect_weights) {
      ols = fit_ols(x, p);
      set_ols = lambda_set(ols, x);
    }
    if (need.als || collect_weights) {
      als = fit_als(x, p, cfg.kernel);
      set_als = lambda_set(als, x);
    }
    if (need.gls || collect_weights) {
      gls = fit_gls(x, p, vol);
      set_gls = lambda_set(gls, x);
    }

    for (std::size_t mi = 0; mi < cfg.m_list.size(); ++mi) {
      const int m = cfg.m_list[mi];
      AutocovPanel panel_u, panel_als, panel_gls;
      DiagCovComponents comps_ols, comps_als, comps_gls;
      quadform::WeightedChiSq law_ols{Vector(), 1e-8}, law_als{Vector(), 1e-8},
          law_gls{Vector(), 1e-8};
      bool have_law_ols = false, have_law_als = false, have_law_gls = false;

      if (need.ols || collect_weights) {
        panel_u = autocov_panel(ols.residuals_u, m, FitMethod::OLS);
        comps_ols = diag_components(ols, set_ols, m);
        if (need.cov_ols || collect_weights) {
          try {
            ResidualCovEstimate cov = residual_cov(ols, comps_ols, set_ols, m);
            law_ols = weights_ols(cov, set_ols.sigma_G_hat);
            have_law_ols = true;
          } catch (const Error&) {
          }
        }
      }
      if (need.als || collect_weights) {
        panel_als = autocov_panel(als.residuals_eps, m, FitMethod::ALS);
        comps_als = diag_components(als, set_als, m);
        try {
          ResidualCovEstimate cov = residual_cov(als, comps_als, set_als, m);
          law_als = weights_als(cov);
          have_law_als = true;
        } catch (const Error&) {
        }
      }
      if (need.gls || collect_weights) {
        panel_gls = autocov_panel(gls.residuals_eps, m, FitMethod::GLS);
        comps_gls = diag_components(gls, set_gls, m);
        try {
          ResidualCovEstimate cov = residual_cov(gls, comps_gls, set_gls, m);
          law_gls = weights_als(cov);
          have_law_gls = true;
        } catch (const Error&) {
        }
      }

      if (collect_weights && mi == 0) {
        if (have_law_ols) out.w_ols = law_ols.weights.reverse();
        if (have_law_als) out.w_als = law_als.weights.reverse();
        if (have_law_gls) out.w_gls = law_gls.weights.reverse();
      }

      for (std::size_t ti = 0; ti < tests.size(); ++ti) {
        const std::string& name = tests[ti];
        std::int8_t state = kInfeasible;
        try {
          double pval = -1.0;
          if (name == "LB_S") {
            const double stat = lb_ols(panel_u);
            pval = dist::chi2_sf(std::max(1, panel_u.d * panel_u.d * (m - p)),
                                 stat);
          } else if (name == "LB_OLS") {
            if (have_law_ols) {
              pval = quadform::upper_tail(law_ols, lb_ols(panel_u));
            }
          } else if (name == "LB_ALS") {
            if (have_law_als) {
              pval = quadform::upper_tail(law_als, lb_als(panel_als, 'a'));
            }
          } else if (name == "LB_GLS") {
            if (have_law_gls) {
              pval = quadform::upper_tail(law_gls, lb_als(panel_gls, 'a'));
            }
          } else if (name == "LBmod_OLS") {
            TestReport r = modified_ols(panel_u, comps_ols, true);
            if (r.feasible) pval = r.p_value;
          } else if (name == "LBmod_ALS") {
            TestReport r = modified_als(panel_als, comps_als, true);
            if (r.feasible) pval = r.p_value;
          } else if (name == "LBmod_GLS") {
            TestReport r = modified_als(panel_gls, comps_gls, true);
            if (r.feasible) pval = r.p_value;
          } else {
            throw InvalidInput("unknown test name: " + name);
          }
          if (pval >= 0.0) {
            state = pval < cfg.level ? kReject : kAccept;
          }
        } catch (const Error&) {
          state = kInfeasible;
        }
        out.cells[mi * tests.size() + ti] = state;
      }
    }
  } catch (const Error&) {
    out.failed = true;
  }
  return out;
}

RejectionTable run_table(const ExperimentConfig& cfg) {
  if (cfg.N < 1) throw InvalidInput("N must be at least 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    throw InvalidInput("level must lie in (0,1)");
  }
  const std::vector<std::string> tests =
      cfg.tests.empty() ? kDefaultTests : cfg.tests;

  RejectionTable table;
  table.rows = tests;
  table.level = cfg.level;
  table.attempted = cfg.N;
  const double half = dist::normal_quantile(0.975) *
                      std::sqrt(cfg.level * (1.0 - cfg.level) / cfg.N);
  table.band_lo = 100.0 * (cfg.level - half);
  table.band_hi = 100.0 * (cfg.level + half);
  for (int T : cfg.T_list) {
    for (int m : cfg.m_list) table.cols.emplace_back(T, m);
  }
  table.cells = Matrix::Zero(static_cast<Eigen::Index>(tests.size()),
                             static_cast<Eigen::Index>(table.cols.size()));
  table.infeasible.assign(tests.size(),
                          std::vector<int>(table.cols.size(), 0));

  for (std::size_t Ti = 0; Ti < cfg.T_list.size(); ++Ti) {
    const int T = cfg.T_list[Ti];
    std::vector<RepOutcome> outcomes(cfg.N);
    parallel_for(cfg.N, cfg.workers, [&](int rep) {
      outcomes[rep] = run_replication(cfg, T, rep, tests, false);
    });
    for (int rep = 0; rep < cfg.N; ++rep) {
      const RepOutcome& out = outcomes[rep];
      if (out.failed) {
        ++table.failures;
        continue;
      }
      for (std::size_t mi = 0; mi < cfg.m_list.size(); ++mi) {
        const std::size_t col = Ti * cfg.m_list.size() + mi;
        for (std::size_t ti = 0; ti < tests.size(); ++ti) {
          const std::int8_t state = out.cells[mi * tests.size() + ti];
          if (state == kReject) {
            table.cells(ti, col) += 100.0 / cfg.N;
          } else if (state == kInfeasible || state == kFailed) {
            ++table.infeasible[ti][col];
          }
        }
      }
    }
  }
  return table;
}

}  // namespace

VarCoefficients ExperimentConfig::dgp_coefficients() const {
  VarCoefficients c;
  c.d = 2;
  if (dgp == DgpKind::Var2) {
    Matrix a1(2, 2);
    a1 << 0.3, -0.3, 0.0, -0.1;
    Matrix a2 = a * Matrix::Identity(2, 2);
    c.p = 2;
    c.mats = {a1, a2};
  } else {
    c.p = 1;
    c.mats = {-0.3 * Matrix::Identity(2, 2)};
  }
  return c;
}

VolCurve ExperimentConfig::vol_curve() const {
  switch (vol) {
    case VolKind::Iid:
      return VolCurve::constant(Matrix::Identity(2, 2));
    case VolKind::Break:
      return VolCurve::break_spec(varpi, rho);
    case VolKind::Trend:
      return VolCurve::smooth_trend(250.0, 5.0, varpi);
    case VolKind::ScalarTrend:
      return VolCurve::scalar_trend(scalar_trend_slope, 2);
    case VolKind::ScalarBreak:
      return VolCurve::scalar_break(scalar_break_jump, 0.5, 2);
  }
  throw Error("unreachable volatility kind");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["dgp"] = dgp == DgpKind::Var2 ? "var2" : "uncorrelatedness";
  j["a"] = a;
  const char* vname = vol == VolKind::Iid            ? "iid"
                      : vol == VolKind::Break        ? "break"
                      : vol == VolKind::Trend        ? "trend"
                      : vol == VolKind::ScalarTrend  ? "scalar-trend"
                                                     : "scalar-break";
  j["vol"] = vname;
  j["varpi"] = varpi;
  j["rho"] = rho;
  j["scalar_trend_slope"] = scalar_trend_slope;
  j["scalar_break_jump"] = scalar_break_jump;
  j["T_list"] = T_list;
  j["N"] = N;
  j["m_list"] = m_list;
  j["level"] = level;
  j["fit_p"] = fit_p;
  j["tests"] = tests;
  j["seed_root"] = seed_root;
  j["workers"] = workers;
  j["kernel"] = kernel.to_json();
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const std::string dname = j.value("dgp", "var2");
  if (dname == "var2" || dname == "var2-size" || dname == "var1-power") {
    cfg.dgp = DgpKind::Var2;
  } else if (dname == "uncorrelatedness" || dname == "uncorr") {
    cfg.dgp = DgpKind::Uncorr;
  } else {
    throw InvalidInput("unknown dgp: " + dname);
  }
  cfg.a = j.value("a", 0.0);
  const std::string vname = j.value("vol", "iid");
  if (vname == "iid") {
    cfg.vol = VolKind::Iid;
  } else if (vname == "break") {
    cfg.vol = VolKind::Break;
  } else if (vname == "trend") {
    cfg.vol = VolKind::Trend;
  } else if (vname == "scalar-trend") {
    cfg.vol = VolKind::ScalarTrend;
  } else if (vname == "scalar-break") {
    cfg.vol = VolKind::ScalarBreak;
  } else {
    throw InvalidInput("unknown vol kind: " + vname);
  }
  cfg.varpi = j.value("varpi", 0.2);
  cfg.rho = j.value("rho", 0.0);
  cfg.scalar_trend_slope = j.value("scalar_trend_slope", 150.0);
  cfg.scalar_break_jump = j.value("scalar_break_jump", 10.0);
  cfg.T_list = j.value("T_list", std::vector<int>{50, 100, 200});
  cfg.N = j.value("N", 1000);
  cfg.m_list = j.value("m_list", std::vector<int>{5, 15});
  cfg.level = j.value("level", 0.05);
  cfg.fit_p = j.value("fit_p", 1);
  cfg.tests = j.value("tests", std::vector<std::string>{});
  cfg.seed_root = j.value("seed_root", std::uint64_t{20120421});
  cfg.workers = j.value("workers", 1);
  if (j.contains("kernel")) {
    cfg.kernel = KernelConfig::from_json(j.at("kernel"));
  }
  return cfg;
}

ExperimentConfig study_preset(int table) {
  ExperimentConfig cfg;
  switch (table) {
    case 1:
      break;  // defaults: iid size grid
    case 2:
      cfg.vol = VolKind::Break;
      break;
    case 3:
      cfg.vol = VolKind::Trend;
      break;
    case 4:
      cfg.vol = VolKind::Trend;
      cfg.T_list = {200};
      cfg.m_list = {5};
      break;
    case 5:
      cfg.a = -0.3;
      cfg.T_list = {50, 100, 200, 300};
      cfg.m_list = {10};
      break;
    case 6:
      cfg.dgp = DgpKind::Uncorr;
      cfg.vol = VolKind::ScalarTrend;
      cfg.fit_p = 0;
      cfg.T_list = {50, 100, 200};
      cfg.m_list = {10};
      break;
    case 7:
      cfg.dgp = DgpKind::Uncorr;
      cfg.vol = VolKind::ScalarBreak;
      cfg.fit_p = 0;
      cfg.T_list = {50, 100, 200};
      cfg.m_list = {10};
      break;
    default:
      throw InvalidInput("no such experiment preset");
  }
  return cfg;
}

double RejectionTable::cell(const std::string& row, int T, int m) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] != row) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].first == T && cols[c].second == m) {
        return cells(r, c);
      }
    }
  }
  throw InvalidInput("no such table cell");
}

std::string RejectionTable::to_csv() const {
  std::string out = "test";
  for (const auto& [T, m] : cols) {
    out += ",T" + std::to_string(T) + "_m" + std::to_string(m);
    out += ",T" + std::to_string(T) + "_m" + std::to_string(m) + "_flag";
    out += ",T" + std::to_string(T) + "_m" + std::to_string(m) + "_infeasible";
  }
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += rows[r];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = cells(r, c);
      out += "," + format_g17(v);
      out += (v < band_lo || v > band_hi) ? ",1" : ",0";
      out += "," + std::to_string(infeasible[r][c]);
    }
    out += "\n";
  }
  out += "# attempted=" + std::to_string(attempted) +
         " failures=" + std::to_string(failures) +
         " band=[" + format_g17(band_lo) + "," + format_g17(band_hi) + "]\n";
  return out;
}

std::string RejectionTable::to_text() const {
  char buf[64];
  std::string out = "rejection frequencies in %, N=" +
                    std::to_string(attempted) + ", level=" +
                    std::to_string(level) + "\n";
  std::snprintf(buf, sizeof(buf), "significance band [%.2f, %.2f]\n", band_lo,
                band_hi);
  out += buf;
  out += "          ";
  for (const auto& [T, m] : cols) {
    std::snprintf(buf, sizeof(buf), " T=%-4d m=%-3d", T, m);
    out += buf;
  }
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%-10s", rows[r].c_str());
    out += buf;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = cells(r, c);
      const bool outside = v < band_lo || v > band_hi;
      std::snprintf(buf, sizeof(buf), " %8.1f%s", v, outside ? "*" : " ");
      out += buf;
      out += "   ";
    }
    out += "\n";
  }
  if (failures > 0) {
    out += "replication failures: " + std::to_string(failures) + "\n";
  }
  return out;
}

RejectionTable run_size(const ExperimentConfig& cfg) {
  if (cfg.dgp == DgpKind::Var2 && cfg.a != 0.0) {
    throw InvalidInput("size study requires a = 0");
  }
  if (cfg.dgp == DgpKind::Uncorr && cfg.fit_p == 0) {
    throw InvalidInput("the uncorrelatedness design is an alternative");
  }
  return run_table(cfg);
}

RejectionTable run_power(const ExperimentConfig& cfg) {
  const bool var2_alt = cfg.dgp == DgpKind::Var2 && cfg.a != 0.0 &&
                        cfg.fit_p < 2;
  const bool uncorr_alt = cfg.dgp == DgpKind::Uncorr && cfg.fit_p == 0;
  if (!var2_alt && !uncorr_alt) {
    throw InvalidInput("power study requires an underspecified fit");
  }
  return run_table(cfg);
}

std::string WeightSummary::to_csv() const {
  std::string out = "method";
  for (int i = 0; i < mean.cols(); ++i) {
    out += ",mean_" + std::to_string(i + 1) + ",sd_" + std::to_string(i + 1);
  }
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += rows[r];
    for (int i = 0; i < mean.cols(); ++i) {
      out += "," + format_g17(mean(r, i)) + "," + format_g17(sd(r, i));
    }
    out += "\n";
  }
  out += "# T=" + std::to_string(T) + " m=" + std::to_string(m) +
         " attempted=" + std::to_string(attempted) +
         " failures=" + std::to_string(failures) + "\n";
  return out;
}

std::string WeightSummary::to_text() const {
  char buf[64];
  std::string out = "estimated weights, ascending (mean [sd]), T=" +
                    std::to_string(T) + ", m=" + std::to_string(m) + "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%-6s", rows[r].c_str());
    out += buf;
    for (int i = 0; i < mean.cols(); ++i) {
      std::snprintf(buf, sizeof(buf), " %5.2f[%4.2f]", mean(r, i), sd(r, i));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

WeightSummary weight_summary(const ExperimentConfig& cfg) {
  if (cfg.T_list.empty() || cfg.m_list.empty()) {
    throw InvalidInput("weight summary needs T and m");
  }
  const int T = cfg.T_list.front();
  const int m = cfg.m_list.front();
  const int n = 4 * m;  // d = 2 throughout the study designs
  const std::vector<std::string> tests{"LB_OLS", "LB_ALS", "LB_GLS"};

  std::vector<RepOutcome> outcomes(cfg.N);
  ExperimentConfig local = cfg;
  local.m_list = {m};
  parallel_for(cfg.N, cfg.workers, [&](int rep) {
    outcomes[rep] = run_replication(local, T, rep, tests, true);
  });

  WeightSummary summary;
  summary.T = T;
  summary.m = m;
  summary.attempted = cfg.N;
  summary.rows = {"ols", "als", "gls"};
  summary.mean = Matrix::Zero(3, n);
  summary.sd = Matrix::Zero(3, n);
  Matrix sumsq = Matrix::Zero(3, n);
  std::array<int, 3> counts{0, 0, 0};
  for (int rep = 0; rep < cfg.N; ++rep) {
    const RepOutcome& out = outcomes[rep];
    if (out.failed) {
      ++summary.failures;
      continue;
    }
    const Vector* ws[3] = {&out.w_ols, &out.w_als, &out.w_gls};
    for (int r = 0; r < 3; ++r) {
      if (ws[r]->size() != n) continue;
      ++counts[r];
      for (int i = 0; i < n; ++i) {
        summary.mean(r, i) += (*ws[r])[i];
        sumsq(r, i) += (*ws[r])[i] * (*ws[r])[i];
      }
    }
  }
  for (int r = 0; r < 3; ++r) {
    if (counts[r] == 0) continue;
    for (int i = 0; i < n; ++i) {
      summary.mean(r, i) /= counts[r];
      const double var =
          std::max(0.0, sumsq(r, i) / counts[r] -
                            summary.mean(r, i) * summary.mean(r, i));
      summary.sd(r, i) = std::sqrt(var);
    }
  }
  return summary;
}

}  // namespace hetvar::mc
