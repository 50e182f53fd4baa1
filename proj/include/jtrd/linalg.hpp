#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>

#include "jtrd/core.hpp"

namespace jtrd {

inline constexpr double kHermitianTol = 1e-9;
inline constexpr double kSingularRatio = 1e-12;

/// Max entrywise |A - A^H|.
inline double hermitian_defect(const ComplexMatrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& a, double tol = kHermitianTol) {
    return a.rows() == a.cols() && hermitian_defect(a) <= tol;
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<ComplexMatrix> hermitian_eig(
    const ComplexMatrix& a, const char* what) {
    require_finite(a, what);
    if (a.rows() != a.cols())
        throw DimensionMismatch(std::string(what) + ": matrix not square");
    if (!is_hermitian(a))
        throw NonHermitian(std::string(what) + ": symmetry tolerance violated");
    // Symmetrize before factoring so the result is exactly Hermitian.
    ComplexMatrix sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
    if (es.info() != Eigen::Success)
        throw Error(std::string(what) + ": eigen decomposition failed");
    return es;
}

}  // namespace detail

/// Smallest eigenvalue of a Hermitian matrix.
inline double hermitian_min_eigenvalue(const ComplexMatrix& a) {
    auto es = detail::hermitian_eig(a, "hermitian_min_eigenvalue");
    return es.eigenvalues().minCoeff();
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix& a) {
    auto es = detail::hermitian_eig(a, "hermitian_eigenvalues");
    return es.eigenvalues();
}

/**
 * Solve A X = B for Hermitian positive semi-definite A.
 *
 * Throws Singular when the smallest eigenvalue falls below
 * kSingularRatio times the largest; callers that want a least-squares
 * answer for rank-deficient A use pseudo_solve_hermitian_psd instead.
 */
inline ComplexMatrix solve_hermitian_psd(const ComplexMatrix& a,
                                         const ComplexMatrix& b) {
    if (b.rows() != a.rows())
        throw DimensionMismatch("solve_hermitian_psd: B row count mismatch");
    require_finite(b, "solve_hermitian_psd");
    auto es = detail::hermitian_eig(a, "solve_hermitian_psd");
    const RealVector& lam = es.eigenvalues();
    const double lam_max = lam.cwiseAbs().maxCoeff();
    if (lam_max == 0.0 || lam.minCoeff() < kSingularRatio * lam_max)
        throw Singular("solve_hermitian_psd: matrix numerically singular");
    ComplexMatrix y = es.eigenvectors().adjoint() * b;
    for (Eigen::Index i = 0; i < lam.size(); ++i) y.row(i) /= lam(i);
    return es.eigenvectors() * y;
}

/// Minimum-norm least-squares solve, truncating eigenvalues below tol*lam_max.
inline ComplexMatrix pseudo_solve_hermitian_psd(const ComplexMatrix& a,
                                                const ComplexMatrix& b,
                                                double tol = kSingularRatio) {
    if (b.rows() != a.rows())
        throw DimensionMismatch("pseudo_solve_hermitian_psd: B row count mismatch");
    auto es = detail::hermitian_eig(a, "pseudo_solve_hermitian_psd");
    const RealVector& lam = es.eigenvalues();
    const double lam_max = lam.cwiseAbs().maxCoeff();
    ComplexMatrix y = es.eigenvectors().adjoint() * b;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > tol * lam_max && lam(i) > 0.0)
            y.row(i) /= lam(i);
        else
            y.row(i).setZero();
    }
    return es.eigenvectors() * y;
}

/**
 * Cholesky factor of a Hermitian positive semi-definite matrix.
 *
 * Returns lower-triangular L with L L^H = A. Semi-definite inputs are
 * handled by zeroing columns whose pivot underflows; a pivot below
 * -1e-12 raises NotPsd.
 */
inline ComplexMatrix cholesky_psd(const ComplexMatrix& a) {
    require_finite(a, "cholesky_psd");
    if (a.rows() != a.cols())
        throw DimensionMismatch("cholesky_psd: matrix not square");
    if (!is_hermitian(a))
        throw NonHermitian("cholesky_psd: symmetry tolerance violated");
    const Eigen::Index n = a.rows();
    ComplexMatrix l = ComplexMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = a(j, j).real();
        for (Eigen::Index k = 0; k < j; ++k) pivot -= std::norm(l(j, k));
        if (pivot < -1e-12) throw NotPsd("cholesky_psd: negative pivot");
        if (pivot <= 0.0) continue;  // semi-definite direction, column stays zero
        const double d = std::sqrt(pivot);
        l(j, j) = d;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            Complex s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / d;
        }
    }
    return l;
}

/// Hermitian PSD inverse square root, for noise whitening with general Phi.
inline ComplexMatrix inverse_sqrt_psd(const ComplexMatrix& a) {
    auto es = detail::hermitian_eig(a, "inverse_sqrt_psd");
    const RealVector& lam = es.eigenvalues();
    const double lam_max = lam.cwiseAbs().maxCoeff();
    if (lam_max == 0.0 || lam.minCoeff() < kSingularRatio * lam_max)
        throw SingularNoiseCovariance("inverse_sqrt_psd: covariance singular");
    RealVector inv_sqrt = lam.array().sqrt().inverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() *
           es.eigenvectors().adjoint();
}

}  // namespace jtrd
