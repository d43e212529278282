#include "nlsfgr/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "nlsfgr/errors.hpp"

namespace nlsfgr {

SymmetricEigen eigh(const RMat& m) {
    const lapack_int n = static_cast<lapack_int>(m.rows());
    if (m.cols() != m.rows()) throw ConfigError("eigh: matrix is not square");
    SymmetricEigen out;
    out.vectors = m;
    out.values.resize(n);
    if (n == 0) return out;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) throw SpectralError("dsyevd failed with info=" + std::to_string(info));
    return out;
}

SymmetricEigen eigh_tridiagonal(const RVec& diag, const RVec& offdiag) {
    const lapack_int n = static_cast<lapack_int>(diag.size());
    SymmetricEigen out;
    out.values = diag;
    RVec e = offdiag;
    out.vectors.resize(n, n);
    if (n == 0) return out;
    const lapack_int info =
        LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, out.values.data(), e.data(), out.vectors.data(), n);
    if (info != 0) throw SpectralError("dstevd failed with info=" + std::to_string(info));
    return out;
}

SymmetricEigen eigh_tridiagonal_lowest(const RVec& diag, const RVec& offdiag, int count) {
    const lapack_int n = static_cast<lapack_int>(diag.size());
    count = std::clamp(count, 0, static_cast<int>(n));
    SymmetricEigen out;
    if (count == 0) return out;
    RVec d = diag;
    RVec e(n);
    e.head(n - 1) = offdiag;
    e(n - 1) = 0.0;
    RVec w(n);
    RMat z(n, count);
    Eigen::Matrix<lapack_int, Eigen::Dynamic, 1> isuppz(2 * count);
    lapack_int found = 0;
    const lapack_int info =
        LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, count, 0.0,
                       &found, w.data(), z.data(), n, isuppz.data());
    if (info != 0 || found != count)
        throw SpectralError("dstevr failed with info=" + std::to_string(info));
    out.values = w.head(count);
    out.vectors = z;
    return out;
}

int count_eigenvalues_below(const RVec& diag, const RVec& offdiag, double x) {
    const Eigen::Index n = diag.size();
    int count = 0;
    double d = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double off2 = i > 0 ? offdiag(i - 1) * offdiag(i - 1) : 0.0;
        d = (diag(i) - x) - (i > 0 ? off2 / d : 0.0);
        if (d == 0.0) d = -1e-300;
        if (d < 0.0) ++count;
    }
    return count;
}

RVec solve_tridiagonal(const RVec& sub, const RVec& diag, const RVec& super, const RVec& rhs) {
    const lapack_int n = static_cast<lapack_int>(diag.size());
    RVec dl = sub, d = diag, du = super, b = rhs;
    const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, dl.data(), d.data(), du.data(),
                                          b.data(), n);
    if (info != 0) throw SolveError("tridiagonal system is singular (dgtsv info=" +
                                    std::to_string(info) + ")");
    return b;
}

RMat matrix_sqrt_psd(const RMat& m) {
    if (m.rows() != m.cols()) throw ConfigError("matrix_sqrt_psd: matrix is not square");
    const RMat sym = 0.5 * (m + m.transpose());
    SymmetricEigen eig = eigh(sym);
    const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) < -1e-6 * scale)
            throw NotPSDError("matrix_sqrt_psd: eigenvalue " + std::to_string(eig.values(i)) +
                              " is negative");
        eig.values(i) = std::sqrt(std::max(eig.values(i), 0.0));
    }
    return eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
}

}  // namespace nlsfgr
