#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetvar/dataset.hpp"
#include "hetvar/diagnostics.hpp"
#include "hetvar/errors.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/matnum.hpp"
#include "hetvar/montecarlo.hpp"
#include "hetvar/portmanteau.hpp"
#include "hetvar/var_model.hpp"

namespace {

using nlohmann::json;
using namespace hetvar;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct DataOptions {
  std::string path;
  std::string delimiter = ",";
  bool header = false;
  std::vector<int> columns;
  std::string transform = "none";

  DatasetSpec spec() const {
    DatasetSpec s;
    s.path = path;
    if (delimiter.size() != 1) {
      throw InvalidInput("delimiter must be a single character");
    }
    s.delimiter = delimiter[0];
    s.has_header = header;
    s.columns = columns;
    if (transform == "none") {
      s.transform = DatasetSpec::Transform::None;
    } else if (transform == "diff") {
      s.transform = DatasetSpec::Transform::FirstDifference;
    } else {
      throw InvalidInput("transform must be none or diff");
    }
    return s;
  }
};

struct KernelOptions {
  std::string kernel = "gaussian";
  std::string mode = "single";
  double c_min = 0.2;
  double c_max = 5.0;
  int grid = 200;
  double nu = 0.0;

  KernelConfig config() const {
    json j{{"kernel", kernel},     {"bandwidth_mode", mode},
           {"c_min", c_min},       {"c_max", c_max},
           {"grid_points", grid},  {"nu_t", nu}};
    return KernelConfig::from_json(j);
  }
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--data", opts.path, "input CSV file")->required();
  cmd->add_option("--delimiter", opts.delimiter, "field delimiter");
  cmd->add_flag("--header", opts.header, "first row is a header");
  cmd->add_option("--columns", opts.columns,
                  "zero-based column selection (default: all)");
  cmd->add_option("--transform", opts.transform,
                  "none | diff (first differences)");
}

void add_kernel_options(CLI::App* cmd, KernelOptions& opts) {
  cmd->add_option("--kernel", opts.kernel,
                  "gaussian | triangular | epanechnikov");
  cmd->add_option("--bw-mode", opts.mode, "single | per-cell");
  cmd->add_option("--cmin", opts.c_min, "lower bandwidth constant");
  cmd->add_option("--cmax", opts.c_max, "upper bandwidth constant");
  cmd->add_option("--grid", opts.grid, "bandwidth grid points");
  cmd->add_option("--nu", opts.nu, "regularization nu_T");
}

VolCurve load_vol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open volatility file: " + path);
  json j;
  in >> j;
  return VolCurve::from_json(j);
}

json fit_to_json(const VarFit& fit, int T) {
  json j;
  j["schema_version"] = 1;
  j["method"] = method_name(fit.method);
  j["d"] = fit.coeffs.d;
  j["p"] = fit.coeffs.p;
  j["T"] = T;
  const Vector theta = fit.coeffs.theta();
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  if (fit.theta_cov.size() > 0) {
    const Vector se = fit.theta_se(T);
    j["se"] = std::vector<double>(se.data(), se.data() + se.size());
  } else {
    j["se"] = std::vector<double>{};
  }
  if (fit.vol_estimate) {
    j["bandwidth"] = fit.vol_estimate->bandwidths(0, 0);
    std::vector<std::vector<double>> bw;
    for (int r = 0; r < fit.vol_estimate->bandwidths.rows(); ++r) {
      std::vector<double> row;
      for (int c = 0; c < fit.vol_estimate->bandwidths.cols(); ++c) {
        row.push_back(fit.vol_estimate->bandwidths(r, c));
      }
      bw.push_back(row);
    }
    j["bandwidths"] = bw;
    j["cv_score"] = fit.vol_estimate->cv_score;
  }
  return j;
}

void print_fit(const VarFit& fit, int T) {
  const int d = fit.coeffs.d;
  std::printf("method %s, d=%d, p=%d, T=%d\n", method_name(fit.method), d,
              fit.coeffs.p, T);
  if (fit.coeffs.p == 0) {
    std::printf("no autoregressive coefficients (p=0)\n");
  } else {
    const Vector se = fit.theta_cov.size() > 0 ? fit.theta_se(T)
                                               : Vector::Zero(d * d *
                                                              fit.coeffs.p);
    std::printf("coefficients (bracketed standard errors):\n");
    for (int lag = 0; lag < fit.coeffs.p; ++lag) {
      std::printf("A%d:\n", lag + 1);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const int idx = lag * d * d + j * d + i;
          std::printf("  % .4f [%.4f]", fit.coeffs.mats[lag](i, j), se[idx]);
        }
        std::printf("\n");
      }
    }
  }
  if (fit.vol_estimate) {
    std::printf("selected bandwidth %.6g, cv score %.6g\n",
                fit.vol_estimate->bandwidths(0, 0),
                fit.vol_estimate->cv_score);
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << content;
}

int cmd_fit(const DataOptions& data, const KernelOptions& kernel, int p,
            const std::string& method, const std::string& vol_path,
            const std::string& json_path, const std::string& cv_trace_path) {
  const Matrix x = load_dataset(data.spec());
  const int T = static_cast<int>(x.rows());
  VarFit fit;
  if (method == "ols") {
    fit = fit_ols(x, p);
  } else if (method == "gls") {
    if (vol_path.empty()) {
      throw InvalidInput("--vol is required for method=gls");
    }
    fit = fit_gls(x, p, load_vol(vol_path));
  } else if (method == "als") {
    fit = fit_als(x, p, kernel.config());
  } else {
    throw InvalidInput("method must be ols, gls or als");
  }
  print_fit(fit, T);
  if (!json_path.empty()) {
    write_file(json_path, fit_to_json(fit, T).dump(2) + "\n");
  }
  if (!cv_trace_path.empty()) {
    if (method != "als") {
      throw InvalidInput("--cv-trace requires method=als");
    }
    VarFit ols = fit_ols(x, p);
    CvResult cv = cross_validate(ols.residuals_u, kernel.config());
    std::string csv = "bandwidth,score\n";
    for (const auto& [b, s] : cv.trace) {
      csv += format_g17(b) + "," + format_g17(s) + "\n";
    }
    write_file(cv_trace_path, csv);
  }
  return kExitOk;
}

int cmd_diagnose(const DataOptions& data, const KernelOptions& kernel, int p,
                 int m, double level, const std::string& vol_path,
                 const std::string& json_path,
                 const std::string& bounds_path) {
  const Matrix x = load_dataset(data.spec());
  std::optional<VolCurve> vol;
  if (!vol_path.empty()) vol = load_vol(vol_path);
  const auto reports =
      run_all(x, p, m, level, kernel.config(), vol ? &*vol : nullptr);

  std::printf("%-12s %12s %18s %10s\n", "test", "statistic", "law", "p-value");
  json jreports = json::array();
  for (const TestReport& r : reports) {
    std::string law;
    switch (r.law.type) {
      case TestLaw::Type::WeightedChiSq:
        law = "weighted-chisq";
        break;
      case TestLaw::Type::ChiSq:
        law = "chisq(" + std::to_string(r.law.df) + ")";
        break;
      case TestLaw::Type::ChiSqNaive:
        law = "chisq-naive(" + std::to_string(r.law.df) + ")";
        break;
    }
    if (r.feasible) {
      std::printf("%-12s %12.4f %18s %10.4f\n", r.name.c_str(), r.statistic,
                  law.c_str(), r.p_value);
    } else {
      std::printf("%-12s %12s %18s %10s\n", r.name.c_str(), "n.a.",
                  law.c_str(), "n.a.");
    }
    jreports.push_back(r.to_json());
  }
  if (!json_path.empty()) {
    json wrapper{{"schema_version", 1}, {"reports", jreports}};
    write_file(json_path, wrapper.dump(2) + "\n");
  }

  if (!bounds_path.empty()) {
    // robust and naive half-widths on the ALS panel (or OLS when no ALS)
    VarFit fit = fit_als(x, p, kernel.config());
    AutocovPanel panel = autocov_panel(fit.residuals_eps, m, FitMethod::ALS);
    LambdaSet set = lambda_set(fit, x);
    DiagCovComponents comps = diag_components(fit, set, m);
    ResidualCovEstimate cov = residual_cov(fit, comps, set, m);
    ConfidenceBounds bounds = confidence_bounds(panel, cov, level, fit, x);
    std::string csv = "lag,i,j,autocorrelation,bound_robust,bound_naive\n";
    const int d = panel.d;
    for (int lag = 1; lag <= m; ++lag) {
      for (int j = 1; j <= d; ++j) {
        for (int i = 1; i <= d; ++i) {
          const int idx = gamma_index(d, lag, i, j);
          csv += std::to_string(lag) + "," + std::to_string(i) + "," +
                 std::to_string(j) + "," + format_g17(panel.rho_a[idx]) + "," +
                 format_g17(bounds.robust[idx]) + "," +
                 format_g17(bounds.naive[idx]) + "\n";
        }
      }
    }
    write_file(bounds_path, csv);
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 int T_override, std::int64_t seed_override) {
  VarCoefficients coeffs;
  VolCurve vol = VolCurve::constant(Matrix::Identity(2, 2));
  SimConfig sim;
  sim.T = 200;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InvalidInput("cannot open config: " + config_path);
    json j;
    in >> j;
    if (j.contains("mc")) {
      mc::ExperimentConfig mccfg = mc::ExperimentConfig::from_json(j["mc"]);
      coeffs = mccfg.dgp_coefficients();
      vol = mccfg.vol_curve();
    } else {
      if (j.contains("coeffs")) {
        const auto& jc = j["coeffs"];
        const int d = jc.at("d").get<int>();
        const int p = jc.at("p").get<int>();
        std::vector<double> theta = jc.at("theta").get<std::vector<double>>();
        coeffs = VarCoefficients::from_theta(
            d, p, Eigen::Map<Vector>(theta.data(), theta.size()));
      } else {
        coeffs = mc::ExperimentConfig{}.dgp_coefficients();
      }
      if (j.contains("vol")) vol = VolCurve::from_json(j["vol"]);
    }
    sim.T = j.value("T", 200);
    sim.seed = j.value("seed", std::uint64_t{0});
    sim.burn_in = j.value("burn_in", 0);
  } else {
    coeffs = mc::ExperimentConfig{}.dgp_coefficients();
  }
  if (T_override > 0) sim.T = T_override;
  if (seed_override >= 0) sim.seed = static_cast<std::uint64_t>(seed_override);

  const Matrix x = simulate(coeffs, vol, sim);
  std::ofstream out(out_path);
  if (!out) throw InvalidInput("cannot write " + out_path);
  std::vector<std::string> header;
  for (int i = 1; i <= x.cols(); ++i) header.push_back("x" + std::to_string(i));
  write_csv_matrix(out, x, header);
  std::printf("wrote %s (%d x %d)\n", out_path.c_str(),
              static_cast<int>(x.rows()), static_cast<int>(x.cols()));
  return kExitOk;
}

int cmd_mc(const std::string& config_path, int table, const std::string& mode,
           const std::string& out_dir, int workers, int N,
           std::int64_t seed_root) {
  mc::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InvalidInput("cannot open config: " + config_path);
    json j;
    in >> j;
    cfg = mc::ExperimentConfig::from_json(j);
  } else if (table > 0) {
    cfg = mc::study_preset(table);
  } else {
    throw InvalidInput("either --config or --table is required");
  }
  if (workers > 0) cfg.workers = workers;
  if (N > 0) cfg.N = N;
  if (seed_root >= 0) cfg.seed_root = static_cast<std::uint64_t>(seed_root);

  std::string resolved = mode;
  if (resolved == "auto") {
    if (table == 4) {
      resolved = "weights";
    } else if ((cfg.dgp == mc::DgpKind::Var2 && cfg.a != 0.0) ||
               (cfg.dgp == mc::DgpKind::Uncorr && cfg.fit_p == 0)) {
      resolved = "power";
    } else {
      resolved = "size";
    }
  }

  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/" +
                           (table > 0 ? "table" + std::to_string(table)
                                      : std::string("experiment"));
  if (resolved == "weights") {
    mc::WeightSummary s = mc::weight_summary(cfg);
    std::fputs(s.to_text().c_str(), stdout);
    write_file(base + "_weights.csv", s.to_csv());
  } else {
    mc::RejectionTable t =
        resolved == "power" ? mc::run_power(cfg) : mc::run_size(cfg);
    std::fputs(t.to_text().c_str(), stdout);
    write_file(base + "_rejections.csv", t.to_csv());
  }
  write_file(base + "_config.json", cfg.to_json().dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VAR models with time-varying volatility: estimation and "
               "portmanteau goodness-of-fit"};
  app.require_subcommand(1);

  DataOptions fit_data, diag_data;
  KernelOptions fit_kernel, diag_kernel;
  int fit_p = 1, diag_p = 1, diag_m = 5;
  double diag_level = 0.05;
  std::string fit_method = "ols", fit_vol, fit_json, fit_cv_trace;
  std::string diag_vol, diag_json, diag_bounds;

  CLI::App* fit = app.add_subcommand("fit", "estimate a VAR(p)");
  add_data_options(fit, fit_data);
  add_kernel_options(fit, fit_kernel);
  fit->add_option("--p", fit_p, "autoregressive order")->required();
  fit->add_option("--method", fit_method, "ols | gls | als");
  fit->add_option("--vol", fit_vol, "volatility JSON (gls)");
  fit->add_option("--json", fit_json, "write the fit as JSON");
  fit->add_option("--cv-trace", fit_cv_trace,
                  "write the bandwidth/score grid as CSV");

  CLI::App* diag = app.add_subcommand("diagnose", "portmanteau test battery");
  add_data_options(diag, diag_data);
  add_kernel_options(diag, diag_kernel);
  diag->add_option("--p", diag_p, "autoregressive order")->required();
  diag->add_option("--m", diag_m, "number of residual autocovariance lags")
      ->required();
  diag->add_option("--level", diag_level, "test level (default 0.05)");
  diag->add_option("--vol", diag_vol, "known volatility JSON (adds GLS rows)");
  diag->add_option("--json", diag_json, "write the reports as JSON");
  diag->add_option("--bounds-csv", diag_bounds,
                   "write per-lag confidence bounds as CSV");

  std::string sim_config, sim_out = "simulated.csv";
  int sim_T = 0;
  std::int64_t sim_seed = -1;
  CLI::App* sim = app.add_subcommand("simulate", "simulate a model path");
  sim->add_option("--config", sim_config, "simulation config JSON");
  sim->add_option("--out", sim_out, "output CSV path");
  sim->add_option("--T", sim_T, "override the sample length");
  sim->add_option("--seed", sim_seed, "override the RNG seed");

  std::string mc_config, mc_out = ".", mc_mode = "auto";
  int mc_table = 0, mc_workers = 0, mc_N = 0;
  std::int64_t mc_seed = -1;
  CLI::App* mcc = app.add_subcommand("mc", "Monte Carlo experiments");
  mcc->add_option("--config", mc_config, "experiment config JSON");
  mcc->add_option("--table", mc_table,
                  "built-in study preset (1-3 size, 4 weights, 5-7 power)");
  mcc->add_option("--mode", mc_mode, "auto | size | power | weights");
  mcc->add_option("--out-dir", mc_out, "output directory");
  mcc->add_option("--workers", mc_workers, "worker thread count");
  mcc->add_option("--N", mc_N, "override replication count");
  mcc->add_option("--seed-root", mc_seed, "override the seed root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      return cmd_fit(fit_data, fit_kernel, fit_p, fit_method, fit_vol,
                     fit_json, fit_cv_trace);
    }
    if (diag->parsed()) {
      return cmd_diagnose(diag_data, diag_kernel, diag_p, diag_m, diag_level,
                          diag_vol, diag_json, diag_bounds);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_config, sim_out, sim_T, sim_seed);
    }
    if (mcc->parsed()) {
      return cmd_mc(mc_config, mc_table, mc_mode, mc_out, mc_workers, mc_N,
                    mc_seed);
    }
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitOk;
}
