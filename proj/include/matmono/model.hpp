#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "matmono/linalg.hpp"

namespace matmono::model {

using linalg::CMat;
using linalg::Cplx;
using linalg::HermitianPsd;
using linalg::RVec;

// ---------------------------------------------------------------------------
// Objectives.  One struct per objective family; all are minimized.  The
// positive matrix being traded against the constraints enters separately as
// the effective channel-quality matrix, so the structs hold only the fixed
// side parameters.
// ---------------------------------------------------------------------------

/// Increasing scalar function of a real vector (stream-fairness preference).
/// `name` is nonempty for registry handles, which is what makes a scenario
/// containing one serializable.
struct ScalarVectorFn {
    std::function<double(const RVec&)> fn;
    bool declared_increasing = true;
    std::string name;
};

enum class SchurMode { Convex, Concave };

/// Which side of the Kronecker product carries the optimized quadratic form.
enum class KronSide { VarLeft, VarRight };

struct MutualInfo {           // -log|X^H P X + phi|
    HermitianPsd phi;
};
struct MseTrace {             // Tr((X^H P X + phi)^{-1})
    HermitianPsd phi;
};
struct RelayMse {             // Tr(a^H (X^H P X + alpha I)^{-1} a)
    CMat a;
    double alpha = 1.0;
};
struct RelayMutualInfo {      // log|a^H (X^H P X + alpha I)^{-1} a + phi|
    CMat a;
    double alpha = 1.0;
    HermitianPsd phi;
};
struct AddSchur {             // f(diag((X^H P X + alpha I)^{-1}))
    SchurMode mode = SchurMode::Convex;
    ScalarVectorFn f;
    double alpha = 1.0;
};
struct MultSchur {            // f(|L_ii|^2), (X^H P X + alpha I)^{-1} = L L^H
    SchurMode mode = SchurMode::Convex;
    ScalarVectorFn f;
    double alpha = 1.0;
};
struct DirectMutualInfo {     // -log|a^H X^H P X a + phi|
    CMat a;
    HermitianPsd phi;
};
struct DirectMse {            // Tr((a^H X^H P X a + alpha I)^{-1}); rotation is a high-SNR choice
    CMat a;
    double alpha = 1.0;
};
struct WeightedMse {          // Tr(a^H (X^H P X + phi)^{-1} a); rotation is a high-SNR choice
    CMat a;
    HermitianPsd phi;
};
struct KronMutualInfo {       // VarLeft:  -log|phi (x) s1 + (X^H P X) (x) s2|
    HermitianPsd phi;         // VarRight: -log|s1 (x) phi + s2 (x) (X^H P X)|
    HermitianPsd sigma1;
    HermitianPsd sigma2;
    KronSide side = KronSide::VarLeft;
};
struct KronMse {              // trace-inverse counterpart of KronMutualInfo
    HermitianPsd phi;
    HermitianPsd sigma1;
    HermitianPsd sigma2;
    KronSide side = KronSide::VarLeft;
};
struct KronRelayMse {         // VarLeft:  Tr((a a^H) (x) s1 (I + (X^H P X) (x) s2)^{-1})
    CMat a;                   // VarRight: Tr(s1 (x) (a a^H) (I + s2 (x) (X^H P X))^{-1})
    HermitianPsd sigma1;
    HermitianPsd sigma2;
    KronSide side = KronSide::VarLeft;
};

using Objective =
    std::variant<MutualInfo, MseTrace, RelayMse, RelayMutualInfo, AddSchur, MultSchur,
                 DirectMutualInfo, DirectMse, WeightedMse, KronMutualInfo, KronMse, KronRelayMse>;

/// Throws InvalidInput when the objective violates its documented invariants
/// (PD where inverted, alpha >= 0, shared eigenbasis of the Kronecker pair,
/// monotone Schur handle on sampled probes).
void validate_objective(const Objective& obj, std::uint64_t probe_seed = 20240901);

/// Monotonicity probe used by validate_objective: 100 random coordinate bumps.
bool probe_increasing(const ScalarVectorFn& f, Eigen::Index dim, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Constraints.
// ---------------------------------------------------------------------------

struct SumPower {             // Tr(X X^H) <= p
    double p = 1.0;
};
struct PerAntenna {           // [X X^H]_{nn} <= p_n
    RVec p;
};
struct WeightedPower {        // Tr(omega_i X X^H) <= p_i
    std::vector<HermitianPsd> omegas;
    RVec ps;
};
struct Shaping {              // X X^H <= rs in the PSD order
    HermitianPsd rs;
};
struct EigenCaps {            // lambda_i(X X^H) <= tau_i
    RVec taus;
};
struct JointPower {           // Tr(X X^H) <= p and X X^H <= tau I
    double p = 1.0;
    double tau = 1.0;
};
struct Cognitive {            // Tr(hc X X^H hc^H) <= tauc
    CMat hc;
    double tauc = 1.0;
};

using ConstraintSet =
    std::variant<SumPower, PerAntenna, WeightedPower, Shaping, EigenCaps, JointPower, Cognitive>;

void validate_constraints(const ConstraintSet& c);

/// Reduction consumed by the weighted solver: per-antenna becomes e_i e_i^T
/// weights, cognitive becomes hc^H hc, sum power becomes the identity weight
/// (the overload with `n` is needed to size the identity).
WeightedPower to_weighted(const ConstraintSet& c);
WeightedPower to_weighted(const ConstraintSet& c, Eigen::Index n);

struct ConstraintCheck {
    bool ok = false;
    RVec slack; // threshold - attained per component; shaping reports min eig
};

ConstraintCheck constraint_satisfied(const ConstraintSet& c, const CMat& x);

/// Generic constraint evaluator used by the invariance checks, so tests can
/// probe deliberately non-invariant constraints.
using ConstraintFn = std::function<ConstraintCheck(const CMat&)>;

bool right_unitary_invariance_check(const ConstraintFn& psi, const CMat& x, int trials,
                                    std::uint64_t seed = 7);
bool right_unitary_invariance_check(const ConstraintSet& c, const CMat& x, int trials,
                                    std::uint64_t seed = 7);
bool left_unitary_invariance_check(const ConstraintFn& psi, const CMat& x, int trials,
                                   std::uint64_t seed = 7);
bool left_unitary_invariance_check(const ConstraintSet& c, const CMat& x, int trials,
                                   std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Scenario and solution.
// ---------------------------------------------------------------------------

struct PerfectCsi {
    CMat h;
};
struct BayesCsi {             // H = h_hat + H_w psi^{1/2}, both sides imperfect
    CMat h_hat;
    HermitianPsd psi;
};
struct StochasticCsi {        // H = h_hat + sigma_row^{1/2} H_w psi_col^{1/2}
    CMat h_hat;
    HermitianPsd sigma_row;
    HermitianPsd psi_col;
};
struct WorstCaseCsi {         // H = h_hat - dH, ||dH||_2 <= gamma
    CMat h_hat;
    double gamma = 0.0;
};

using Regime = std::variant<PerfectCsi, BayesCsi, StochasticCsi, WorstCaseCsi>;

struct Scenario {
    Regime regime;
    double noise_var = 1.0;
    int streams = 1;
    ConstraintSet constraints;
    Objective objective;
};

void validate_scenario(const Scenario& s);
const CMat& scenario_channel_estimate(const Scenario& s);

struct Diagnostics {
    double water_level = 0.0;
    double kkt_residual = 0.0;
    double comp_slack = 0.0;     // max_i (alpha_i * (attained_i - P_i))^+
    double feasibility = 0.0;    // max_i (attained_i - P_i)^+ relative
    int iterations = 0;
    bool converged = true;
    bool suboptimal = false;     // lower-bound maximizer, not proven Pareto
    bool high_snr_approx = false;
    bool upper_bound_only = false; // worst-case bound not tight for this constraint
};

/// Factored precoder X = f * qx, with f = rotation * Lambda_F * U_arb^H.
struct PrecoderSolution {
    CMat f;
    CMat qx;        // identity until the inner rotation is assembled
    CMat rotation;  // left factor of f
    RVec powers;    // squared diagonal of Lambda_F
    RVec weights;   // weighting factors alpha_i; empty unless weighted
    Diagnostics diagnostics;

    CMat x() const { return f * qx; }
};

} // namespace matmono::model
