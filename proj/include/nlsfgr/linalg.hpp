#pragma once

#include "nlsfgr/types.hpp"

namespace nlsfgr {

// Eigenvalues ascending, eigenvectors in the matching columns.
struct SymmetricEigen {
    RVec values;
    RMat vectors;
};

// Dense symmetric eigendecomposition (LAPACK divide and conquer).
SymmetricEigen eigh(const RMat& m);

// Full eigendecomposition of the symmetric tridiagonal matrix with the given
// diagonal and off-diagonal.
SymmetricEigen eigh_tridiagonal(const RVec& diag, const RVec& offdiag);

// The `count` lowest eigenpairs of a symmetric tridiagonal matrix.
SymmetricEigen eigh_tridiagonal_lowest(const RVec& diag, const RVec& offdiag, int count);

// Number of eigenvalues strictly below x, by Sturm sequence (LDL^T inertia).
int count_eigenvalues_below(const RVec& diag, const RVec& offdiag, double x);

// Solves T x = rhs for the general tridiagonal T = (sub, diag, super) with
// partial pivoting. Throws SolveError when T is numerically singular.
RVec solve_tridiagonal(const RVec& sub, const RVec& diag, const RVec& super, const RVec& rhs);

// Principal square root of a symmetric positive semidefinite matrix.
// Eigenvalues in [-1e-6, 0) are treated as roundoff and clipped to zero;
// anything more negative raises NotPSDError.
RMat matrix_sqrt_psd(const RMat& m);

}  // namespace nlsfgr
