#pragma once

#include "xferlab/matrix.hpp"

namespace xferlab {

// Eigenpairs of a symmetric matrix, values descending, vectors as columns.
struct EigResult {
    Matrix vectors;
    Vector values;
};

// a == u * diag(sigma) * v^T with u (m x m), v (n x n) orthogonal and sigma
// of length min(m, n), descending. Both factors always carry the full
// orthonormal basis; zero singular values get completed basis columns.
struct SvdResult {
    Matrix u;
    Vector sigma;
    Matrix v;
};

// Cyclic Jacobi. Stops once the off-diagonal Frobenius mass falls below
// 1e-14 * ||a||_F. Input must be square and symmetric to 1e-9 relative.
EigResult sym_eig(const Matrix& a);

// One-sided Jacobi on the tall side: column pairs are rotated until
// mutually orthogonal, so small singular values keep full accuracy and a
// rank-deficient input yields trailing sigmas at roundoff level rather
// than at sqrt(roundoff). Sign convention: the largest-magnitude entry of
// every right singular vector is positive, ties broken by the lowest
// index.
SvdResult svd(const Matrix& a);

// Moore-Penrose inverse; singular values below rel_tol * sigma_max are
// treated as zero.
Matrix pinv(const Matrix& a, double rel_tol = 1e-12);

// tr(w^T s m); shapes w (p x q), s (p x r), m (r x q).
double trace_inner(const Matrix& w, const Matrix& s, const Matrix& m);

}  // namespace xferlab
