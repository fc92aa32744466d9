#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <json.hpp>

#include "hetvar/matrix.hpp"

namespace hetvar {

// VAR(p) coefficient set A_1..A_p with the stacked parameter vector
// theta = (vec(A_1)', ..., vec(A_p)')'.
struct VarCoefficients {
  int d = 0;
  int p = 0;
  std::vector<Matrix> mats;

  Vector theta() const;
  static VarCoefficients from_theta(int d, int p, const Vector& theta);
};

// Block companion matrix (dp x dp); throws OrderZero when p = 0.
Matrix companion_matrix(const VarCoefficients& c);

double spectral_radius(const Matrix& a);

// True iff the companion spectral radius is below 1 - 1e-10 (p = 0 is
// vacuously stable).
bool is_stable(const VarCoefficients& c);

// Deterministic volatility path r in (0,1] -> Sigma(r) positive definite.
// sigma(0) returns the limit from the right, used for burn-in.
class VolCurve {
 public:
  enum class Kind {
    Constant,
    TwoRegime,
    SmoothTrend,
    BreakSpec,
    ScalarTrend,
    ScalarBreak,
    CustomGrid,
  };

  static VolCurve constant(Matrix sigma);
  // Diagonal two-regime curve with optional constant cross correlation.
  static VolCurve two_regime(double s10, double s11, double s20, double s21,
                             double tau1, double tau2, double corr = 0.0);
  // Bivariate trending specification (pi1, pi2 slopes, varpi cross term).
  static VolCurve smooth_trend(double pi1, double pi2, double varpi);
  // Bivariate common-break specification with jump at r = 1/2; rho is the
  // extra factor on the (2,2) entry and defaults to 0.
  static VolCurve break_spec(double varpi, double rho = 0.0);
  // Scalar specifications sigma^2(r) I_d.
  static VolCurve scalar_trend(double pi1, int d);
  static VolCurve scalar_break(double jump, double tau, int d);
  // Piecewise-constant on equal cells of (0,1].
  static VolCurve custom_grid(std::vector<Matrix> grid);

  Matrix sigma(double r) const;
  Matrix sqrt_at(double r) const;  // G(r) = Sigma(r)^{1/2}
  int dim() const { return d_; }
  Kind kind() const { return kind_; }
  // Discontinuity locations in (0,1); used by quadrature.
  std::vector<double> breakpoints() const;

  nlohmann::json to_json() const;
  static VolCurve from_json(const nlohmann::json& j);

 private:
  VolCurve() = default;
  Kind kind_ = Kind::Constant;
  int d_ = 0;
  Matrix constant_;
  double s10_ = 0, s11_ = 0, s20_ = 0, s21_ = 0, tau1_ = 0, tau2_ = 0,
         corr_ = 0;
  double pi1_ = 0, pi2_ = 0, varpi_ = 0, rho_ = 0;
  double jump_ = 0, tau_ = 0;
  std::vector<Matrix> grid_;
};

struct SimConfig {
  int T = 200;
  std::uint64_t seed = 0;
  int burn_in = 0;
  // Innovation hook; must produce a d-vector with conditional mean zero and
  // identity conditional variance. Empty -> iid standard Gaussian.
  std::function<Vector(std::mt19937_64&, int)> innovation;
};

// Simulates X_t = sum_i A_i X_{t-i} + G(t/T) eps_t with zero initial values;
// burn-in uses G frozen at the r -> 0+ level. Returns a T x d matrix.
Matrix simulate(const VarCoefficients& c, const VolCurve& vol,
                const SimConfig& cfg);

// Deterministic seed stream derivation for parallel replication.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                          std::uint64_t b = 0);

}  // namespace hetvar
