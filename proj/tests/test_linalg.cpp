#include <catch2/catch_amalgamated.hpp>

#include "jtrd/linalg.hpp"
#include "jtrd/rng.hpp"

using namespace jtrd;

namespace {

ComplexMatrix random_hermitian(Rng& rng, int n) {
    ComplexMatrix a = sample_standard_complex_gaussian(rng, n, n);
    return ComplexMatrix(0.5 * (a + a.adjoint()));
}

// Independent oracle: determinant of (A - lambda I) via LU, bracketing the
// smallest eigenvalue by bisection on sign changes of the characteristic
// polynomial.
double char_poly_det(const ComplexMatrix& a, double lambda) {
    ComplexMatrix shifted =
        a - lambda * ComplexMatrix::Identity(a.rows(), a.cols());
    return Eigen::FullPivLU<ComplexMatrix>(shifted).determinant().real();
}

double min_eigen_by_bisection(const ComplexMatrix& a) {
    // Gershgorin bound brackets the spectrum.
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double radius = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j) radius += std::abs(a(i, j));
        lo = std::min(lo, a(i, i).real() - radius);
        hi = std::max(hi, a(i, i).real() + radius);
    }
    lo -= 1.0;
    // Walk up from below the spectrum until det changes sign: the first
    // crossing is the smallest eigenvalue.
    const int steps = 20000;
    const double width = (hi - lo) / steps;
    double prev = char_poly_det(a, lo);
    double bracket_lo = lo, bracket_hi = hi;
    for (int s = 1; s <= steps; ++s) {
        const double x = lo + s * width;
        const double d = char_poly_det(a, x);
        if ((prev > 0.0) != (d > 0.0)) {
            bracket_lo = x - width;
            bracket_hi = x;
            break;
        }
        prev = d;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (bracket_lo + bracket_hi);
        if ((char_poly_det(a, bracket_lo) > 0.0) == (char_poly_det(a, mid) > 0.0))
            bracket_lo = mid;
        else
            bracket_hi = mid;
    }
    return 0.5 * (bracket_lo + bracket_hi);
}

}  // namespace

TEST_CASE("min eigenvalue of identity and diagonal", "[linalg]") {
    REQUIRE(hermitian_min_eigenvalue(ComplexMatrix::Identity(3, 3)) ==
            Catch::Approx(1.0).margin(1e-12));
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = 5.0;
    d(2, 2) = -1.0;
    REQUIRE(hermitian_min_eigenvalue(d) == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("min eigenvalue matches bisection oracle", "[linalg]") {
    Rng rng(100);
    for (int rep = 0; rep < 5; ++rep) {
        const ComplexMatrix a = random_hermitian(rng, 4);
        const double expected = min_eigen_by_bisection(a);
        REQUIRE(hermitian_min_eigenvalue(a) ==
                Catch::Approx(expected).margin(1e-8));
    }
}

TEST_CASE("min eigenvalue residual bound", "[linalg]") {
    Rng rng(101);
    const ComplexMatrix a = random_hermitian(rng, 6);
    const double lam = hermitian_min_eigenvalue(a);
    // There must exist a unit vector achieving the eigenvalue.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
    const ComplexVector v = es.eigenvectors().col(0);
    REQUIRE((a * v - lam * v).norm() <= 1e-8 * a.operatorNorm());
}

TEST_CASE("min eigenvalue input validation", "[linalg]") {
    ComplexMatrix bad(2, 2);
    bad << 1.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 1.0;  // not Hermitian
    REQUIRE_THROWS_AS(hermitian_min_eigenvalue(bad), NonHermitian);
    ComplexMatrix nonfinite = ComplexMatrix::Identity(2, 2);
    nonfinite(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(hermitian_min_eigenvalue(nonfinite), NonFinite);
    REQUIRE_THROWS_AS(hermitian_min_eigenvalue(ComplexMatrix::Zero(2, 3)),
                      DimensionMismatch);
}

TEST_CASE("similarity invariance of the minimum eigenvalue", "[linalg]") {
    Rng rng(102);
    const ComplexMatrix a = random_hermitian(rng, 5);
    // Random unitary from the QR of a Gaussian matrix.
    Eigen::HouseholderQR<ComplexMatrix> qr(
        sample_standard_complex_gaussian(rng, 5, 5));
    const ComplexMatrix u = qr.householderQ();
    const ComplexMatrix rotated = u * a * u.adjoint();
    REQUIRE(hermitian_min_eigenvalue(rotated) ==
            Catch::Approx(hermitian_min_eigenvalue(a)).margin(1e-8));
}

TEST_CASE("solve identity and diagonal", "[linalg]") {
    Rng rng(103);
    const ComplexMatrix b = sample_standard_complex_gaussian(rng, 3, 2);
    const ComplexMatrix x =
        solve_hermitian_psd(ComplexMatrix::Identity(3, 3), b);
    REQUIRE((x - b).cwiseAbs().maxCoeff() < 1e-14);

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    ComplexMatrix rhs(2, 1);
    rhs << 2.0, 8.0;
    const ComplexMatrix sol = solve_hermitian_psd(d, rhs);
    REQUIRE(sol(0, 0).real() == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(sol(1, 0).real() == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("solve gram systems to small residual", "[linalg]") {
    Rng rng(104);
    for (int rep = 0; rep < 10; ++rep) {
        const ComplexMatrix tall = sample_standard_complex_gaussian(rng, 8, 4);
        const ComplexMatrix a = tall.adjoint() * tall;
        const ComplexMatrix b = sample_standard_complex_gaussian(rng, 4, 3);
        const ComplexMatrix x = solve_hermitian_psd(a, b);
        REQUIRE((a * x - b).norm() < 1e-9 * b.norm());
    }
}

TEST_CASE("singular solve raises", "[linalg]") {
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 0) = 1.0;  // rank 1
    ComplexMatrix b(2, 1);
    b << 1.0, 1.0;
    REQUIRE_THROWS_AS(solve_hermitian_psd(a, b), Singular);
    // Pseudo-solve returns the least-squares answer instead.
    const ComplexMatrix x = pseudo_solve_hermitian_psd(a, b);
    REQUIRE(x(0, 0).real() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(std::abs(x(1, 0)) < 1e-12);
}

TEST_CASE("cholesky of identity and diagonal", "[linalg]") {
    const ComplexMatrix l = cholesky_psd(ComplexMatrix::Identity(3, 3));
    REQUIRE((l - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const ComplexMatrix ld = cholesky_psd(d);
    REQUIRE(ld(0, 0).real() == Catch::Approx(2.0));
    REQUIRE(ld(1, 1).real() == Catch::Approx(3.0));
}

TEST_CASE("cholesky reconstructs exponential correlation", "[linalg]") {
    ComplexMatrix r(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = std::pow(0.5, std::abs(i - j));
    const ComplexMatrix l = cholesky_psd(r);
    REQUIRE((l * l.adjoint() - r).norm() <= 1e-10 * r.norm());
    // Lower triangular by construction.
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) REQUIRE(std::abs(l(i, j)) == 0.0);
}

TEST_CASE("cholesky semi-definite and negative cases", "[linalg]") {
    ComplexMatrix rank1(2, 2);
    rank1 << 1.0, 1.0, 1.0, 1.0;
    const ComplexMatrix l = cholesky_psd(rank1);
    REQUIRE((l * l.adjoint() - rank1).norm() < 1e-12);
    ComplexMatrix neg = -ComplexMatrix::Identity(2, 2);
    REQUIRE_THROWS_AS(cholesky_psd(neg), NotPsd);
}

TEST_CASE("inverse sqrt whitens", "[linalg]") {
    Rng rng(105);
    const ComplexMatrix tall = sample_standard_complex_gaussian(rng, 6, 3);
    const ComplexMatrix a =
        ComplexMatrix(tall.adjoint() * tall) + ComplexMatrix::Identity(3, 3);
    const ComplexMatrix w = inverse_sqrt_psd(a);
    REQUIRE((w * a * w - ComplexMatrix::Identity(3, 3)).norm() < 1e-10);
}
