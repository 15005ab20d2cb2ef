#pragma once

#include <Eigen/Dense>
#include <complex>

#include "matmono/errors.hpp"
#include "matmono/rng.hpp"

namespace matmono::linalg {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Every tolerance used by the decomposition layer, centralized.
struct Tolerances {
    double herm = 1e-10;        // max elementwise |M - M^H|, relative to max(1, |M|_max)
    double psd_floor = 1e-10;   // eigenvalues >= -psd_floor * max(lambda_max, 1)
    double unitary = 1e-9;      // |U^H U - I|_F
    double recon = 1e-9;        // relative Frobenius reconstruction error
    double phase_floor = 1e-12; // first column entry with modulus above this is made real >= 0
    double tie = 1e-9;          // adjacent eigenvalues within tie*max(1,scale) are a tie group
    double rank = 1e-10;        // relative rank cutoff for pseudo-inverses
    double gmd_stop = 1e-10;    // max diagonal deviation from the geometric mean
    double pd_ratio = 1e-12;    // min/max eigenvalue ratio required by the Cholesky path
};

const Tolerances& default_tols();

enum class EigenOrder { Descending, Ascending };

/// Hermitian positive semi-definite matrix.  Construction symmetrizes and
/// rejects inputs that are not self-adjoint within tolerance; the eigenvalue
/// floor is enforced wherever a decomposition materializes the spectrum.
class HermitianPsd {
  public:
    HermitianPsd() = default;
    explicit HermitianPsd(const CMat& m, const Tolerances& tol = default_tols());

    /// Wraps a matrix known hermitian by construction (symmetrizes, no checks).
    static HermitianPsd trusted(const CMat& m);

    const CMat& mat() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

  private:
    CMat m_;
};

/// Eigendecomposition with contractual ordering and phase convention:
/// eigenvalues sorted per `order`, ties broken by lexicographic comparison of
/// the phase-normalized eigenvectors, and the first entry of each eigenvector
/// with modulus above the phase floor made real and nonnegative.
struct SortedEigen {
    CMat unitary;
    RVec eigenvalues;
    EigenOrder order = EigenOrder::Descending;

    CMat reconstruct() const {
        return unitary * eigenvalues.asDiagonal() * unitary.adjoint();
    }
};

/// SVD with descending singular values, full unitary frames, and the phase
/// convention applied to the columns of `right` (left compensated).
struct SortedSvd {
    CMat left;
    RVec singulars;
    CMat right;

    CMat reconstruct() const {
        CMat s = CMat::Zero(left.rows(), right.rows());
        for (Eigen::Index i = 0; i < singulars.size(); ++i) s(i, i) = singulars(i);
        return left * s * right.adjoint();
    }
};

/// Geometric mean decomposition of diag(singulars): q * r * p^H with r upper
/// triangular and every diagonal entry equal to the geometric mean.
struct GmdResult {
    CMat q;
    CMat r;
    CMat p;
};

SortedEigen evd_sorted(const HermitianPsd& m, EigenOrder order,
                       const Tolerances& tol = default_tols());

SortedSvd svd_sorted(const CMat& m, const Tolerances& tol = default_tols());

HermitianPsd herm_sqrt(const HermitianPsd& m, const Tolerances& tol = default_tols());

/// Moore-Penrose pseudo-inverse of herm_sqrt(m): eigenvalues at or below
/// rank_tol * lambda_max map to zero, the rest to lambda^{-1/2}.
HermitianPsd pinv_sqrt(const HermitianPsd& m, double rank_tol = default_tols().rank,
                       const Tolerances& tol = default_tols());

GmdResult gmd(const RVec& singulars, const Tolerances& tol = default_tols());

CMat dft_matrix(Eigen::Index n);

/// Lower-triangular L with positive real diagonal and L L^H = m.
CMat cholesky_lower(const HermitianPsd& m, const Tolerances& tol = default_tols());

/// Column-phase-normalized random unitary from the QR of a complex Gaussian.
CMat random_unitary(Eigen::Index n, Rng& rng, const Tolerances& tol = default_tols());

// Small shared helpers.
CMat kron(const CMat& a, const CMat& b);
bool all_finite(const CMat& m);
double max_abs(const CMat& m);

/// Kahan-compensated accumulator for order-stable reductions.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

} // namespace matmono::linalg
