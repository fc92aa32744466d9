#include "hetvar/var_model.hpp"

#include <cmath>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar {

Vector VarCoefficients::theta() const {
  Vector out(static_cast<Eigen::Index>(p) * d * d);
  for (int i = 0; i < p; ++i) {
    out.segment(static_cast<Eigen::Index>(i) * d * d, d * d) =
        matnum::vec(mats[i]);
  }
  return out;
}

VarCoefficients VarCoefficients::from_theta(int d, int p,
                                            const Vector& theta) {
  if (theta.size() != static_cast<Eigen::Index>(p) * d * d) {
    throw InvalidInput("theta length does not match (d, p)");
  }
  VarCoefficients c;
  c.d = d;
  c.p = p;
  c.mats.reserve(p);
  for (int i = 0; i < p; ++i) {
    Matrix a(d, d);
    for (int col = 0; col < d; ++col) {
      a.col(col) = theta.segment(
          static_cast<Eigen::Index>(i) * d * d + col * d, d);
    }
    c.mats.push_back(std::move(a));
  }
  return c;
}

Matrix companion_matrix(const VarCoefficients& c) {
  if (c.p == 0) throw OrderZero("companion matrix requires p >= 1");
  const int d = c.d;
  const int p = c.p;
  Matrix k = Matrix::Zero(static_cast<Eigen::Index>(d) * p,
                          static_cast<Eigen::Index>(d) * p);
  for (int i = 0; i < p; ++i) {
    k.block(0, i * d, d, d) = c.mats[i];
  }
  for (int i = 1; i < p; ++i) {
    k.block(i * d, (i - 1) * d, d, d) = Matrix::Identity(d, d);
  }
  return k;
}

double spectral_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const VarCoefficients& c) {
  if (c.p == 0) return true;
  return spectral_radius(companion_matrix(c)) < 1.0 - 1e-10;
}

namespace {

double indicator_ge(double r, double tau) { return r >= tau ? 1.0 : 0.0; }

}  // namespace

VolCurve VolCurve::constant(Matrix sigma) {
  matnum::require_symmetric(sigma);
  if (!matnum::is_psd(sigma, 1e-12) ||
      matnum::eigvals_sym(sigma).minCoeff() <= 0.0) {
    throw NotPositiveDefinite("constant volatility matrix must be PD");
  }
  VolCurve v;
  v.kind_ = Kind::Constant;
  v.d_ = static_cast<int>(sigma.rows());
  v.constant_ = std::move(sigma);
  return v;
}

VolCurve VolCurve::two_regime(double s10, double s11, double s20, double s21,
                              double tau1, double tau2, double corr) {
  if (s10 <= 0 || s11 <= 0 || s20 <= 0 || s21 <= 0) {
    throw NonPositiveVariance("two_regime requires positive variances");
  }
  if (tau1 < 0 || tau1 > 1 || tau2 < 0 || tau2 > 1) {
    throw InvalidBreakDate("break dates must lie in [0,1]");
  }
  if (std::abs(corr) >= 1.0) {
    throw NotPositiveDefinite("cross correlation must satisfy |corr| < 1");
  }
  VolCurve v;
  v.kind_ = Kind::TwoRegime;
  v.d_ = 2;
  v.s10_ = s10;
  v.s11_ = s11;
  v.s20_ = s20;
  v.s21_ = s21;
  v.tau1_ = tau1;
  v.tau2_ = tau2;
  v.corr_ = corr;
  return v;
}

VolCurve VolCurve::smooth_trend(double pi1, double pi2, double varpi) {
  VolCurve v;
  v.kind_ = Kind::SmoothTrend;
  v.d_ = 2;
  v.pi1_ = pi1;
  v.pi2_ = pi2;
  v.varpi_ = varpi;
  for (int i = 0; i <= 1000; ++i) {
    const double r = static_cast<double>(i) / 1000.0;
    Matrix s = v.sigma(r);
    if (s(0, 0) <= 0 || s.determinant() <= 0) {
      throw NotPositiveDefinite("smooth_trend curve not PD on the grid");
    }
  }
  return v;
}

VolCurve VolCurve::break_spec(double varpi, double rho) {
  VolCurve v;
  v.kind_ = Kind::BreakSpec;
  v.d_ = 2;
  v.varpi_ = varpi;
  v.rho_ = rho;
  return v;
}

VolCurve VolCurve::scalar_trend(double pi1, int d) {
  if (pi1 < 0) throw NonPositiveVariance("scalar_trend requires pi1 >= 0");
  VolCurve v;
  v.kind_ = Kind::ScalarTrend;
  v.d_ = d;
  v.pi1_ = pi1;
  return v;
}

VolCurve VolCurve::scalar_break(double jump, double tau, int d) {
  if (jump < 0) throw NonPositiveVariance("scalar_break requires jump >= 0");
  if (tau < 0 || tau > 1) throw InvalidBreakDate("tau must lie in [0,1]");
  VolCurve v;
  v.kind_ = Kind::ScalarBreak;
  v.d_ = d;
  v.jump_ = jump;
  v.tau_ = tau;
  return v;
}

VolCurve VolCurve::custom_grid(std::vector<Matrix> grid) {
  if (grid.empty()) throw InvalidInput("custom grid must be nonempty");
  const int d = static_cast<int>(grid.front().rows());
  for (const Matrix& g : grid) {
    matnum::require_symmetric(g);
    if (g.rows() != d || matnum::eigvals_sym(g).minCoeff() <= 0.0) {
      throw NotPositiveDefinite("custom grid matrices must be PD");
    }
  }
  VolCurve v;
  v.kind_ = Kind::CustomGrid;
  v.d_ = d;
  v.grid_ = std::move(grid);
  return v;
}

Matrix VolCurve::sigma(double r) const {
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::TwoRegime: {
      const double v1 = s10_ + (s11_ - s10_) * indicator_ge(r, tau1_);
      const double v2 = s20_ + (s21_ - s20_) * indicator_ge(r, tau2_);
      Matrix s(2, 2);
      s << v1, corr_ * std::sqrt(v1 * v2), corr_ * std::sqrt(v1 * v2), v2;
      return s;
    }
    case Kind::SmoothTrend: {
      const double a = 1.0 + pi1_ * r;
      const double b = 0.1 + pi2_ * r;
      Matrix s(2, 2);
      s << a * (1.0 + varpi_ * varpi_), varpi_ * std::sqrt(a) * std::sqrt(b),
          varpi_ * std::sqrt(a) * std::sqrt(b), b;
      return s;
    }
    case Kind::BreakSpec: {
      const double f1 = 54.0 * indicator_ge(r, 0.5);
      const double f2 = 3.0 * indicator_ge(r, 0.5);
      const double a = 6.0 + f1;
      const double b = 0.5 + f2;
      Matrix s(2, 2);
      s << a * (1.0 + varpi_ * varpi_), varpi_ * std::sqrt(a) * std::sqrt(b),
          varpi_ * std::sqrt(a) * std::sqrt(b), b * (1.0 + rho_ * rho_);
      return s;
    }
    case Kind::ScalarTrend:
      return (1.0 + pi1_ * r) * Matrix::Identity(d_, d_);
    case Kind::ScalarBreak:
      return (1.0 + jump_ * indicator_ge(r, tau_)) * Matrix::Identity(d_, d_);
    case Kind::CustomGrid: {
      const int n = static_cast<int>(grid_.size());
      int idx = static_cast<int>(std::ceil(r * n)) - 1;
      idx = std::min(std::max(idx, 0), n - 1);
      return grid_[idx];
    }
  }
  throw Error("unreachable volatility kind");
}

Matrix VolCurve::sqrt_at(double r) const { return matnum::pd_sqrt(sigma(r)); }

std::vector<double> VolCurve::breakpoints() const {
  switch (kind_) {
    case Kind::TwoRegime: {
      std::vector<double> b;
      for (double tau : {tau1_, tau2_}) {
        if (tau > 0.0 && tau < 1.0) b.push_back(tau);
      }
      return b;
    }
    case Kind::BreakSpec:
      return {0.5};
    case Kind::ScalarBreak:
      return (tau_ > 0.0 && tau_ < 1.0) ? std::vector<double>{tau_}
                                        : std::vector<double>{};
    case Kind::CustomGrid: {
      std::vector<double> b;
      const int n = static_cast<int>(grid_.size());
      for (int i = 1; i < n; ++i) b.push_back(static_cast<double>(i) / n);
      return b;
    }
    default:
      return {};
  }
}

nlohmann::json VolCurve::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::Constant: {
      j["kind"] = "constant";
      std::vector<std::vector<double>> rows;
      for (Eigen::Index i = 0; i < constant_.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < constant_.cols(); ++k) {
          row.push_back(constant_(i, k));
        }
        rows.push_back(row);
      }
      j["params"] = {{"sigma", rows}};
      break;
    }
    case Kind::TwoRegime:
      j["kind"] = "two-regime";
      j["params"] = {{"s10", s10_}, {"s11", s11_}, {"s20", s20_},
                     {"s21", s21_}, {"tau1", tau1_}, {"tau2", tau2_},
                     {"corr", corr_}};
      break;
    case Kind::SmoothTrend:
      j["kind"] = "smooth-trend";
      j["params"] = {{"pi1", pi1_}, {"pi2", pi2_}, {"varpi", varpi_}};
      break;
    case Kind::BreakSpec:
      j["kind"] = "break-spec";
      j["params"] = {{"varpi", varpi_}, {"rho", rho_}};
      break;
    case Kind::ScalarTrend:
      j["kind"] = "scalar-trend";
      j["params"] = {{"pi1", pi1_}, {"d", d_}};
      break;
    case Kind::ScalarBreak:
      j["kind"] = "scalar-break";
      j["params"] = {{"jump", jump_}, {"tau", tau_}, {"d", d_}};
      break;
    case Kind::CustomGrid: {
      j["kind"] = "custom-grid";
      std::vector<std::vector<std::vector<double>>> grids;
      for (const Matrix& g : grid_) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          std::vector<double> row;
          for (Eigen::Index k = 0; k < g.cols(); ++k) row.push_back(g(i, k));
          rows.push_back(row);
        }
        grids.push_back(rows);
      }
      j["params"] = {{"grid", grids}};
      break;
    }
  }
  return j;
}

namespace {
Matrix matrix_from_json(const nlohmann::json& rows) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.at(0).size());
  Matrix out(n, m);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) out(i, k) = rows.at(i).at(k).get<double>();
  }
  return out;
}
}  // namespace

VolCurve VolCurve::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const nlohmann::json& p = j.at("params");
  if (kind == "constant") return constant(matrix_from_json(p.at("sigma")));
  if (kind == "two-regime") {
    return two_regime(p.at("s10").get<double>(), p.at("s11").get<double>(),
                      p.at("s20").get<double>(), p.at("s21").get<double>(),
                      p.at("tau1").get<double>(), p.at("tau2").get<double>(),
                      p.value("corr", 0.0));
  }
  if (kind == "smooth-trend") {
    return smooth_trend(p.at("pi1").get<double>(), p.at("pi2").get<double>(),
                        p.at("varpi").get<double>());
  }
  if (kind == "break-spec") {
    return break_spec(p.at("varpi").get<double>(), p.value("rho", 0.0));
  }
  if (kind == "scalar-trend") {
    return scalar_trend(p.at("pi1").get<double>(), p.at("d").get<int>());
  }
  if (kind == "scalar-break") {
    return scalar_break(p.at("jump").get<double>(), p.at("tau").get<double>(),
                        p.at("d").get<int>());
  }
  if (kind == "custom-grid") {
    std::vector<Matrix> grid;
    for (const auto& g : p.at("grid")) grid.push_back(matrix_from_json(g));
    return custom_grid(std::move(grid));
  }
  throw InvalidInput("unknown volatility kind: " + kind);
}

namespace {

// Box-Muller on explicit 53-bit uniforms so paths are reproducible across
// standard-library implementations.
struct NormalSampler {
  std::mt19937_64& rng;
  bool has_spare = false;
  double spare = 0.0;

  double uniform_open() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  }

  double operator()() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare = radius * std::sin(angle);
    has_spare = true;
    return radius * std::cos(angle);
  }
};

}  // namespace

Matrix simulate(const VarCoefficients& c, const VolCurve& vol,
                const SimConfig& cfg) {
  if (c.d != vol.dim()) throw InvalidInput("dimension mismatch");
  if (cfg.T < c.p + 1) throw InvalidInput("T must be at least p + 1");
  if (cfg.burn_in < 0) throw InvalidInput("burn_in must be nonnegative");
  if (!is_stable(c)) throw UnstableModel("simulate requires a stable model");

  const int d = c.d;
  const int p = c.p;
  const int T = cfg.T;
  std::mt19937_64 rng(cfg.seed);
  NormalSampler gauss{rng};

  auto draw_eps = [&]() -> Vector {
    if (cfg.innovation) return cfg.innovation(rng, d);
    Vector e(d);
    for (int i = 0; i < d; ++i) e[i] = gauss();
    return e;
  };

  std::vector<Vector> state(p, Vector::Zero(d));  // X_{t-1}, ..., X_{t-p}
  auto step = [&](const Matrix& g) {
    Vector x = g * draw_eps();
    for (int i = 0; i < p; ++i) x += c.mats[i] * state[i];
    for (int i = p - 1; i > 0; --i) state[i] = state[i - 1];
    if (p > 0) state[0] = x;
    return x;
  };

  if (cfg.burn_in > 0) {
    const Matrix g0 = vol.sqrt_at(0.0);
    for (int b = 0; b < cfg.burn_in; ++b) step(g0);
  }

  Matrix out(T, d);
  for (int t = 1; t <= T; ++t) {
    const Matrix g = vol.sqrt_at(static_cast<double>(t) / T);
    out.row(t - 1) = step(g).transpose();
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                          std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(root) ^ a) ^ b);
}

}  // namespace hetvar
