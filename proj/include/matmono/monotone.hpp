#pragma once

#include "matmono/model.hpp"

namespace matmono::monotone {

using linalg::CMat;
using linalg::HermitianPsd;
using linalg::RVec;
using model::Objective;

/// One of the four trace/determinant eigenvalue sandwiches, evaluated on a
/// concrete pair: lower <= value <= upper with tightness flags at the stated
/// eigenvector alignments.
struct InequalityReport {
    int which = 1; // 1: Tr(CD)   2: Tr((C+D)^{-1})   3: |C+D|   4: |CD+I|
    double lower = 0.0;
    double value = 0.0;
    double upper = 0.0;
    bool left_tight = false;
    bool right_tight = false;
};

InequalityReport check_inequality(int which, const HermitianPsd& c, const HermitianPsd& d);

enum class MajorizeMode { Additive, Multiplicative };

/// True iff the partial sums (or products) of the descending sort of x are
/// bounded by those of y, with equality at the full length.
bool majorizes(const RVec& x, const RVec& y, MajorizeMode mode);

/// Evaluates the objective at X against the effective matrix P, literally.
double eval_objective(const Objective& obj, const CMat& x, const HermitianPsd& pi);

/// Optimal inner rotation for X = F Q.  `high_snr_approx` is set for the two
/// objective families whose closed-form rotation is exact only at high SNR.
struct QxResult {
    CMat q;
    bool high_snr_approx = false;
};

QxResult optimal_qx(const Objective& obj, const CMat& f, const HermitianPsd& pi);

/// Joint eigendecomposition of a commuting pair: returns the common basis
/// (descending in `a`'s eigenvalues, ties resolved inside `b`) plus both
/// eigenvalue vectors in that basis.
struct JointEigen {
    CMat unitary;
    RVec lam_a;
    RVec lam_b;
};

JointEigen joint_evd(const HermitianPsd& a, const HermitianPsd& b);

} // namespace matmono::monotone
