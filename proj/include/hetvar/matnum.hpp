#pragma once

#include "hetvar/matrix.hpp"

namespace hetvar::matnum {

// Entrywise max-abs norm used by all symmetry/definiteness tolerances.
double max_abs(const Matrix& a);

// True iff max|A - A'| <= tol * max|A| (a zero matrix is symmetric).
bool is_symmetric(const Matrix& a, double tol = 1e-10);

// Throws NotSymmetric when the tolerance is violated.
void require_symmetric(const Matrix& a, double tol = 1e-10);

Matrix symmetrize(const Matrix& a);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-1e-10*|a|, 0) are clamped to zero; anything lower throws IndefiniteMatrix.
Matrix pd_sqrt(const Matrix& a);

// Inverse square root of a positive definite matrix; throws SingularMatrix
// when the smallest eigenvalue is below 1e-12*|a|.
Matrix pd_inv_sqrt(const Matrix& a);

// Positive definite inverse through the same eigendecomposition route.
Matrix pd_inverse(const Matrix& a);

Matrix kron(const Matrix& a, const Matrix& b);

// Column-stacking vectorization.
Vector vec(const Matrix& a);

// Eigenvalues of a symmetric matrix, descending.
Vector eigvals_sym(const Matrix& a);

// min eigenvalue >= -tol * max|eigenvalue|.
bool is_psd(const Matrix& a, double tol);

}  // namespace hetvar::matnum
