#include "hetvar/vol_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "hetvar/errors.hpp"
#include "hetvar/matnum.hpp"

namespace hetvar {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Direct summation below this length, circular FFT convolution above. The
// path is a fixed function of T, so results stay reproducible run to run.
constexpr int kFftThreshold = 512;

void fft_inplace(std::vector<std::complex<double>>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * M_PI / static_cast<double>(len) * (invert ? -1.0 : 1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (invert) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Smooths the d(d+1)/2 upper-triangle series of u_t u_t'. The FFT of each
// series is cached so a cross-validation grid pays it only once.
class ResidualSmoother {
 public:
  // Kernel values at integer lags plus normalizing sums; the FFT of the
  // symmetric filter is attached when the fast path is active.
  struct Prepared {
    std::vector<double> kv;   // kv[j] = K(j/(Tb)), kv[0] = 0
    std::vector<double> den;  // sum_{i != t} K_ti
    std::vector<std::complex<double>> h_fft;
  };

  ResidualSmoother(const Matrix& residuals, KernelType kernel)
      : T_(static_cast<int>(residuals.rows())),
        d_(static_cast<int>(residuals.cols())),
        kernel_(kernel),
        use_fft_(T_ > kFftThreshold),
        fft_n_(use_fft_ ? next_pow2(2 * static_cast<std::size_t>(T_)) : 0),
        cell_idx_(static_cast<std::size_t>(d_) * d_, -1) {
    cells_.reserve(d_ * (d_ + 1) / 2);
    for (int k = 0; k < d_; ++k) {
      for (int l = k; l < d_; ++l) {
        Vector c(T_);
        for (int t = 0; t < T_; ++t) {
          c[t] = residuals(t, k) * residuals(t, l);
        }
        cell_idx_[k * d_ + l] = static_cast<int>(cells_.size());
        cells_.push_back(std::move(c));
      }
    }
    if (use_fft_) {
      cell_fft_.reserve(cells_.size());
      for (const Vector& c : cells_) {
        std::vector<std::complex<double>> f(fft_n_, {0.0, 0.0});
        for (int t = 0; t < T_; ++t) f[t] = c[t];
        fft_inplace(f, false);
        cell_fft_.push_back(std::move(f));
      }
    }
  }

  int T() const { return T_; }
  int d() const { return d_; }
  int cell_index(int k, int l) const {
    return cell_idx_[std::min(k, l) * d_ + std::max(k, l)];
  }

  Prepared prepare(double b) const {
    Prepared prep;
    prep.kv.assign(T_, 0.0);
    for (int j = 1; j < T_; ++j) {
      prep.kv[j] = kernel_value(kernel_, static_cast<double>(j) / (T_ * b));
    }
    std::vector<double> prefix(T_, 0.0);
    for (int j = 1; j < T_; ++j) prefix[j] = prefix[j - 1] + prep.kv[j];
    prep.den.assign(T_, 0.0);
    for (int t = 0; t < T_; ++t) {
      prep.den[t] = prefix[t] + prefix[T_ - 1 - t];
    }
    if (use_fft_) {
      prep.h_fft.assign(fft_n_, {0.0, 0.0});
      for (int j = 1; j < T_; ++j) {
        prep.h_fft[j] = prep.kv[j];
        prep.h_fft[fft_n_ - j] = prep.kv[j];
      }
      fft_inplace(prep.h_fft, false);
    }
    return prep;
  }

  Vector smooth_cell(const Prepared& prep, int k, int l) const {
    const Vector& c = cells_[cell_index(k, l)];
    Vector num(T_);
    if (use_fft_) {
      std::vector<std::complex<double>> prod(fft_n_);
      const auto& cf = cell_fft_[cell_index(k, l)];
      for (std::size_t i = 0; i < fft_n_; ++i) {
        prod[i] = cf[i] * prep.h_fft[i];
      }
      fft_inplace(prod, true);
      for (int t = 0; t < T_; ++t) num[t] = prod[t].real();
    } else {
      for (int t = 0; t < T_; ++t) {
        double acc = 0.0;
        for (int j = 1; j < T_; ++j) {
          const double kj = prep.kv[j];
          if (kj == 0.0) continue;
          double pair = 0.0;
          if (t - j >= 0) pair += c[t - j];
          if (t + j < T_) pair += c[t + j];
          acc += kj * pair;
        }
        num[t] = acc;
      }
    }
    for (int t = 0; t < T_; ++t) {
      if (!(prep.den[t] > 0.0)) {
        throw DegenerateKernel("all kernel values vanish at t=" +
                               std::to_string(t + 1));
      }
      num[t] /= prep.den[t];
    }
    return num;
  }

  std::vector<Vector> smooth_cells(const Matrix& bandwidths) const {
    std::vector<Vector> smoothed(cells_.size());
    bool single = true;
    for (int k = 0; k < d_ && single; ++k) {
      for (int l = k; l < d_; ++l) {
        if (bandwidths(k, l) != bandwidths(0, 0)) {
          single = false;
          break;
        }
      }
    }
    if (single) {
      const Prepared prep = prepare(bandwidths(0, 0));
      for (int k = 0; k < d_; ++k) {
        for (int l = k; l < d_; ++l) {
          smoothed[cell_index(k, l)] = smooth_cell(prep, k, l);
        }
      }
    } else {
      for (int k = 0; k < d_; ++k) {
        for (int l = k; l < d_; ++l) {
          smoothed[cell_index(k, l)] =
              smooth_cell(prepare(bandwidths(k, l)), k, l);
        }
      }
    }
    return smoothed;
  }

  std::vector<Matrix> assemble(const std::vector<Vector>& smoothed) const {
    std::vector<Matrix> out(T_, Matrix(d_, d_));
    for (int t = 0; t < T_; ++t) {
      for (int k = 0; k < d_; ++k) {
        for (int l = k; l < d_; ++l) {
          const double v = smoothed[cell_index(k, l)][t];
          out[t](k, l) = v;
          out[t](l, k) = v;
        }
      }
    }
    return out;
  }

 private:
  int T_;
  int d_;
  KernelType kernel_;
  bool use_fft_;
  std::size_t fft_n_;
  std::vector<Vector> cells_;
  std::vector<int> cell_idx_;
  std::vector<std::vector<std::complex<double>>> cell_fft_;
};

std::vector<double> bandwidth_grid(int T, const KernelConfig& cfg) {
  if (cfg.grid_points < 2) throw EmptyGrid("grid needs at least two points");
  if (!(cfg.c_min > 0.0) || !(cfg.c_max > cfg.c_min)) {
    throw InvalidInput("bandwidth range requires 0 < c_min < c_max");
  }
  const double b_T = std::pow(static_cast<double>(T), -1.0 / 3.0);
  const double lo = std::log(cfg.c_min * b_T);
  const double hi = std::log(cfg.c_max * b_T);
  std::vector<double> grid(cfg.grid_points);
  for (int i = 0; i < cfg.grid_points; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * i / (cfg.grid_points - 1));
  }
  return grid;
}

double cv_criterion(const std::vector<Matrix>& sigma_check,
                    const Matrix& residuals) {
  const int T = static_cast<int>(residuals.rows());
  double score = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto u = residuals.row(t).transpose();
    score += (sigma_check[t] - u * u.transpose()).squaredNorm();
  }
  return score;
}

}  // namespace

double KernelConfig::recommended_nu(int T) {
  if (T < 1) throw InvalidInput("recommended_nu requires T >= 1");
  return std::pow(static_cast<double>(T), -0.6);
}

nlohmann::json KernelConfig::to_json() const {
  const char* kname = kernel == KernelType::Gaussian     ? "gaussian"
                      : kernel == KernelType::Triangular ? "triangular"
                                                         : "epanechnikov";
  return {{"kernel", kname},
          {"bandwidth_mode",
           bandwidth_mode == BandwidthMode::Single ? "single" : "per-cell"},
          {"c_min", c_min},
          {"c_max", c_max},
          {"grid_points", grid_points},
          {"nu_t", nu_t}};
}

KernelConfig KernelConfig::from_json(const nlohmann::json& j) {
  KernelConfig cfg;
  const std::string kname = j.value("kernel", "gaussian");
  if (kname == "gaussian") {
    cfg.kernel = KernelType::Gaussian;
  } else if (kname == "triangular") {
    cfg.kernel = KernelType::Triangular;
  } else if (kname == "epanechnikov") {
    cfg.kernel = KernelType::Epanechnikov;
  } else {
    throw InvalidInput("unknown kernel: " + kname);
  }
  const std::string mode = j.value("bandwidth_mode", "single");
  if (mode == "single") {
    cfg.bandwidth_mode = BandwidthMode::Single;
  } else if (mode == "per-cell") {
    cfg.bandwidth_mode = BandwidthMode::PerCell;
  } else {
    throw InvalidInput("unknown bandwidth mode: " + mode);
  }
  cfg.c_min = j.value("c_min", 0.2);
  cfg.c_max = j.value("c_max", 5.0);
  cfg.grid_points = j.value("grid_points", 200);
  cfg.nu_t = j.value("nu_t", 0.0);
  return cfg;
}

double kernel_value(KernelType kernel, double z) {
  switch (kernel) {
    case KernelType::Gaussian:
      return kInvSqrt2Pi * std::exp(-0.5 * z * z);
    case KernelType::Triangular:
      return std::max(0.0, 1.0 - std::abs(z));
    case KernelType::Epanechnikov:
      return std::abs(z) < 1.0 ? 0.75 * (1.0 - z * z) : 0.0;
  }
  throw Error("unreachable kernel type");
}

Vector kernel_weights(int t, int T, double b, KernelType kernel) {
  if (t < 1 || t > T) throw InvalidInput("kernel_weights requires 1<=t<=T");
  if (!(b > 0.0)) throw InvalidInput("kernel_weights requires b > 0");
  Vector w = Vector::Zero(T);
  double sum = 0.0;
  for (int i = 1; i <= T; ++i) {
    if (i == t) continue;
    const double v =
        kernel_value(kernel, static_cast<double>(t - i) / (T * b));
    w[i - 1] = v;
    sum += v;
  }
  if (!(sum > 0.0)) {
    throw DegenerateKernel("all kernel values vanish for t=" +
                           std::to_string(t));
  }
  return w / sum;
}

std::vector<Matrix> smooth_residual_covariance(const Matrix& residuals,
                                               const KernelConfig& cfg,
                                               const Matrix& bandwidths) {
  if (residuals.rows() < 2) throw InvalidInput("residual panel too short");
  ResidualSmoother smoother(residuals, cfg.kernel);
  return smoother.assemble(smoother.smooth_cells(bandwidths));
}

std::vector<Matrix> regularize(const std::vector<Matrix>& sigma0,
                               double nu_t) {
  std::vector<Matrix> out;
  out.reserve(sigma0.size());
  for (const Matrix& s : sigma0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matnum::symmetrize(s));
    Vector lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      lam[i] = std::sqrt(lam[i] * lam[i] + nu_t);
    }
    out.push_back(es.eigenvectors() * lam.asDiagonal() *
                  es.eigenvectors().transpose());
  }
  return out;
}

CvResult cross_validate(const Matrix& residuals, const KernelConfig& cfg) {
  const int T = static_cast<int>(residuals.rows());
  const int d = static_cast<int>(residuals.cols());
  if (T < 2) throw InvalidInput("residual panel too short");
  const auto grid = bandwidth_grid(T, cfg);
  ResidualSmoother smoother(residuals, cfg.kernel);

  CvResult result;
  result.trace.reserve(grid.size());
  double best_score = std::numeric_limits<double>::infinity();
  double best_b = grid.front();
  for (double b : grid) {
    const Matrix bw = Matrix::Constant(d, d, b);
    const double score = cv_criterion(
        regularize(smoother.assemble(smoother.smooth_cells(bw)), cfg.nu_t),
        residuals);
    result.trace.emplace_back(b, score);
    if (score < best_score) {
      best_score = score;
      best_b = b;
    }
  }
  result.bandwidths = Matrix::Constant(d, d, best_b);
  result.score = best_score;

  if (cfg.bandwidth_mode == BandwidthMode::PerCell) {
    Matrix bw = result.bandwidths;
    std::vector<Vector> smoothed = smoother.smooth_cells(bw);
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (int k = 0; k < d; ++k) {
        for (int l = k; l < d; ++l) {
          const int idx = smoother.cell_index(k, l);
          Vector best_series = smoothed[idx];
          for (double b : grid) {
            smoothed[idx] = smoother.smooth_cell(smoother.prepare(b), k, l);
            const double score = cv_criterion(
                regularize(smoother.assemble(smoothed), cfg.nu_t), residuals);
            if (score < best_score) {
              best_score = score;
              bw(k, l) = b;
              bw(l, k) = b;
              best_series = smoothed[idx];
            }
          }
          smoothed[idx] = best_series;
        }
      }
    }
    result.bandwidths = bw;
    result.score = best_score;
  }
  return result;
}

VolPathEstimate estimate_vol_path(const Matrix& residuals,
                                  const KernelConfig& cfg) {
  CvResult cv = cross_validate(residuals, cfg);
  VolPathEstimate est;
  est.bandwidths = cv.bandwidths;
  est.cv_score = cv.score;
  est.sigma_t = regularize(
      smooth_residual_covariance(residuals, cfg, cv.bandwidths), cfg.nu_t);
  est.h_t.reserve(est.sigma_t.size());
  for (const Matrix& s : est.sigma_t) {
    est.h_t.push_back(matnum::pd_sqrt(s));
  }
  return est;
}

}  // namespace hetvar
