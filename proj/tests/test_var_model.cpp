#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"
#include "hetvar/var_model.hpp"

using namespace hetvar;

namespace {

VarCoefficients var1(const Matrix& a) {
  VarCoefficients c;
  c.d = static_cast<int>(a.rows());
  c.p = 1;
  c.mats = {a};
  return c;
}

VarCoefficients study_dgp(double a) {
  Matrix a1(2, 2);
  a1 << 0.3, -0.3, 0.0, -0.1;
  Matrix a2 = a * Matrix::Identity(2, 2);
  VarCoefficients c;
  c.d = 2;
  c.p = 2;
  c.mats = {a1, a2};
  return c;
}

}  // namespace

TEST_CASE("companion matrix layout") {
  Matrix m(2, 2);
  m << 0.2, 0.1, -0.4, 0.5;
  CHECK(matnum::max_abs(companion_matrix(var1(m)) - m) == 0.0);

  VarCoefficients c;
  c.d = 1;
  c.p = 2;
  c.mats = {Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.2)};
  Matrix k = companion_matrix(c);
  Matrix expected(2, 2);
  expected << 0.5, 0.2, 1.0, 0.0;
  CHECK(matnum::max_abs(k - expected) == 0.0);

  VarCoefficients zero;
  zero.d = 2;
  zero.p = 0;
  CHECK_THROWS_AS(companion_matrix(zero), OrderZero);
}

TEST_CASE("study DGP companion is stable for a = -0.3") {
  VarCoefficients c = study_dgp(-0.3);
  Matrix k = companion_matrix(c);
  CHECK(k.rows() == 4);
  const double radius = spectral_radius(k);
  CHECK(radius < 1.0);
  // det(z^2 - 0.3 z + 0.3) and det(z^2 + 0.1 z + 0.3) factors give |z|^2=0.3.
  CHECK(radius == doctest::Approx(std::sqrt(0.3)).epsilon(1e-10));
  CHECK(is_stable(c));
}

TEST_CASE("is_stable basics") {
  Matrix a(2, 2);
  a << 0.3, -0.3, 0.0, -0.1;
  CHECK(is_stable(var1(a)));
  CHECK_FALSE(is_stable(var1(Matrix::Identity(2, 2))));
  CHECK(is_stable(var1((-0.3 * Matrix::Identity(2, 2)).eval())));

  VarCoefficients empty;
  empty.d = 3;
  empty.p = 0;
  CHECK(is_stable(empty));
}

TEST_CASE("is_stable agrees with explicit AR(2) root finding") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = unif(rng);
    const double b = unif(rng);
    VarCoefficients c;
    c.d = 1;
    c.p = 2;
    c.mats = {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b)};
    // roots of 1 - a z - b z^2 = 0
    bool stable_by_roots;
    if (std::abs(b) < 1e-14) {
      stable_by_roots = std::abs(a) < 1.0;
    } else {
      const std::complex<double> disc =
          std::sqrt(std::complex<double>(a * a + 4.0 * b, 0.0));
      const std::complex<double> z1 = (-a + disc) / (-2.0 * b);
      const std::complex<double> z2 = (-a - disc) / (-2.0 * b);
      stable_by_roots = std::abs(z1) > 1.0 && std::abs(z2) > 1.0;
    }
    if (std::abs(1.0 - spectral_radius(companion_matrix(c))) > 1e-6) {
      CHECK(is_stable(c) == stable_by_roots);
    }
  }
}

TEST_CASE("theta round-trips with the coefficient matrices") {
  VarCoefficients c = study_dgp(-0.3);
  VarCoefficients back = VarCoefficients::from_theta(2, 2, c.theta());
  for (int i = 0; i < 2; ++i) {
    CHECK(matnum::max_abs(back.mats[i] - c.mats[i]) == 0.0);
  }
}

TEST_CASE("two-regime volatility curve") {
  VolCurve flat = VolCurve::two_regime(1, 1, 1, 1, 0.4, 0.6);
  for (double r : {0.1, 0.5, 0.9}) {
    CHECK(matnum::max_abs(flat.sigma(r) - Matrix::Identity(2, 2)) == 0.0);
  }

  VolCurve v = VolCurve::two_regime(1.0, 0.5, 1.0, 1.0, 0.5, 0.5);
  double integral = 0.0;
  const int n = 20000;
  for (int i = 1; i <= n; ++i) {
    integral += v.sigma((i - 0.5) / n)(0, 0) / n;
  }
  CHECK(integral == doctest::Approx(0.75).epsilon(1e-4));

  VolCurve fig2 = VolCurve::two_regime(1.0, 4.0, 1.0, 4.0, 0.3, 0.3);
  CHECK(fig2.sigma(0.2)(0, 0) == 1.0);
  CHECK(fig2.sigma(0.35)(0, 0) == 4.0);

  CHECK_THROWS_AS(VolCurve::two_regime(1, 1, 1, 1, -0.1, 0.5),
                  InvalidBreakDate);
  CHECK_THROWS_AS(VolCurve::two_regime(0.0, 1, 1, 1, 0.5, 0.5),
                  NonPositiveVariance);
}

TEST_CASE("smooth trend volatility curve") {
  VolCurve flat = VolCurve::smooth_trend(0.0, 0.0, 0.0);
  Matrix expected(2, 2);
  expected << 1.0, 0.0, 0.0, 0.1;
  CHECK(matnum::max_abs(flat.sigma(0.7) - expected) < 1e-15);

  VolCurve v = VolCurve::smooth_trend(250.0, 5.0, 0.2);
  CHECK(v.sigma(1.0)(0, 0) == doctest::Approx(251.0 * 1.04).epsilon(1e-12));
  CHECK(v.sigma(1.0)(1, 1) == doctest::Approx(5.1).epsilon(1e-12));
}

TEST_CASE("break specification volatility curve") {
  VolCurve v0 = VolCurve::break_spec(0.0);
  Matrix pre = v0.sigma(0.25);
  CHECK(pre(0, 0) == doctest::Approx(6.0));
  CHECK(pre(1, 1) == doctest::Approx(0.5));
  CHECK(pre(0, 1) == 0.0);
  CHECK(v0.sigma(0.75)(0, 0) == doctest::Approx(60.0));

  // jump exactly at r = 1/2
  CHECK(v0.sigma(0.4999999)(0, 0) == doctest::Approx(6.0));
  CHECK(v0.sigma(0.5)(0, 0) == doctest::Approx(60.0));

  VolCurve v = VolCurve::break_spec(0.2);
  CHECK(v.sigma(0.25)(0, 0) == doctest::Approx(6.0 * 1.04));
  CHECK(v.sigma(0.25)(0, 1) ==
        doctest::Approx(0.2 * std::sqrt(6.0) * std::sqrt(0.5)));
}

TEST_CASE("volatility JSON round-trip") {
  for (const VolCurve& v :
       {VolCurve::two_regime(1.0, 0.5, 2.0, 1.5, 0.25, 0.75, 0.3),
        VolCurve::smooth_trend(250.0, 5.0, 0.2), VolCurve::break_spec(0.2),
        VolCurve::scalar_trend(150.0, 2),
        VolCurve::scalar_break(10.0, 0.5, 2),
        VolCurve::constant((Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished())}) {
    VolCurve back = VolCurve::from_json(v.to_json());
    for (double r : {0.01, 0.3, 0.5, 0.77, 1.0}) {
      CHECK(matnum::max_abs(back.sigma(r) - v.sigma(r)) == 0.0);
    }
  }
}

TEST_CASE("simulate p=0 identity volatility reproduces raw draws") {
  VarCoefficients c;
  c.d = 2;
  c.p = 0;
  SimConfig cfg;
  cfg.T = 4;
  cfg.seed = 12345;
  Matrix x = simulate(c, VolCurve::constant(Matrix::Identity(2, 2)), cfg);

  std::mt19937_64 rng(12345);
  auto uniform = [&]() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  bool has_spare = false;
  double spare = 0.0;
  auto gauss = [&]() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare = radius * std::sin(2.0 * M_PI * u2);
    has_spare = true;
    return radius * std::cos(2.0 * M_PI * u2);
  };
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < 2; ++i) {
      CHECK(x(t, i) == gauss());
    }
  }
}

TEST_CASE("simulate is deterministic given the seed") {
  VarCoefficients c = study_dgp(0.0);
  SimConfig cfg;
  cfg.T = 150;
  cfg.seed = 777;
  cfg.burn_in = 10;
  VolCurve v = VolCurve::break_spec(0.2);
  Matrix x1 = simulate(c, v, cfg);
  Matrix x2 = simulate(c, v, cfg);
  CHECK(matnum::max_abs(x1 - x2) == 0.0);

  cfg.seed = 778;
  CHECK(matnum::max_abs(simulate(c, v, cfg) - x1) > 0.0);
}

TEST_CASE("simulated innovations have the prescribed moments") {
  VarCoefficients c;
  c.d = 2;
  c.p = 0;
  SimConfig cfg;
  cfg.T = 100000;
  cfg.seed = 2024;

  // sample mean near zero under a constant curve
  Matrix sigma0(2, 2);
  sigma0 << 1.5, 0.4, 0.4, 0.8;
  Matrix x = simulate(c, VolCurve::constant(sigma0), cfg);
  for (int i = 0; i < 2; ++i) {
    const double mean = x.col(i).mean();
    const double sd = std::sqrt(x.col(i).squaredNorm() / cfg.T);
    CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(cfg.T)));
  }
  Matrix cov = x.transpose() * x / cfg.T;
  CHECK(matnum::max_abs(cov - sigma0) < 3.0 * 2.0 / std::sqrt(cfg.T / 1.0));

  // second half under the break specification matches the post-break level
  Matrix xb = simulate(c, VolCurve::break_spec(0.2), cfg);
  Matrix second = xb.bottomRows(cfg.T / 2);
  Matrix cov2 = second.transpose() * second / (cfg.T / 2);
  Matrix post = VolCurve::break_spec(0.2).sigma(0.75);
  CHECK(((cov2 - post).cwiseAbs().array() / post.norm()).maxCoeff() < 0.05);
}

TEST_CASE("simulate rejects unstable models") {
  SimConfig cfg;
  cfg.T = 50;
  CHECK_THROWS_AS(
      simulate(var1(Matrix::Identity(2, 2)),
               VolCurve::constant(Matrix::Identity(2, 2)), cfg),
      UnstableModel);
}

TEST_CASE("a user-supplied innovation generator is honored") {
  VarCoefficients c;
  c.d = 2;
  c.p = 0;
  SimConfig cfg;
  cfg.T = 64;
  cfg.seed = 1;
  // Rademacher signs: conditional mean zero, identity conditional variance
  cfg.innovation = [](std::mt19937_64& rng, int d) {
    Vector e(d);
    for (int i = 0; i < d; ++i) e[i] = (rng() & 1) ? 1.0 : -1.0;
    return e;
  };
  Matrix x = simulate(c, VolCurve::constant(Matrix::Identity(2, 2)), cfg);
  for (int t = 0; t < cfg.T; ++t) {
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(x(t, i)) == 1.0);
    }
  }
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}
