#include "hetvar/matnum.hpp"

#include <algorithm>

#include "hetvar/errors.hpp"

namespace hetvar::matnum {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> solve_sym(const Matrix& a) {
  require_symmetric(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.info() != Eigen::Success) {
    throw Error("symmetric eigendecomposition failed");
  }
  return es;
}

}  // namespace

double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  if (scale == 0.0) return true;
  return max_abs(a - a.transpose()) <= tol * scale;
}

void require_symmetric(const Matrix& a, double tol) {
  if (!is_symmetric(a, tol)) {
    throw NotSymmetric("matrix is not symmetric within tolerance");
  }
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix pd_sqrt(const Matrix& a) {
  auto es = solve_sym(a);
  Vector ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Vector root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10 * scale) {
      throw IndefiniteMatrix("negative eigenvalue beyond clamping tolerance");
    }
    root[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix pd_inv_sqrt(const Matrix& a) {
  auto es = solve_sym(a);
  Vector ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Vector root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 1e-12 * scale || scale == 0.0) {
      throw SingularMatrix("matrix is not positive definite");
    }
    root[i] = 1.0 / std::sqrt(ev[i]);
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix pd_inverse(const Matrix& a) {
  auto es = solve_sym(a);
  Vector ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Vector inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 1e-12 * scale || scale == 0.0) {
      throw SingularMatrix("matrix is not positive definite");
    }
    inv[i] = 1.0 / ev[i];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Vector eigvals_sym(const Matrix& a) {
  require_symmetric(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a),
                                           Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error("symmetric eigendecomposition failed");
  }
  return es.eigenvalues().reverse();
}

bool is_psd(const Matrix& a, double tol) {
  Vector ev = eigvals_sym(a);
  if (ev.size() == 0) return true;
  const double scale = ev.cwiseAbs().maxCoeff();
  return ev[ev.size() - 1] >= -tol * scale;
}

}  // namespace hetvar::matnum
