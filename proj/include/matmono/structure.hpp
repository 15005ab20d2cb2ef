#pragma once

#include "matmono/model.hpp"

namespace matmono::structure {

using linalg::CMat;
using linalg::HermitianPsd;
using linalg::RVec;
using model::Objective;
using model::PrecoderSolution;

/// Caller-supplied per-stream cost for allocators outside the two closed
/// forms: g_i(p) convex and decreasing, with its derivative.
struct GenericAllocator {
    std::function<double(Eigen::Index, double)> cost;
    std::function<double(Eigen::Index, double)> dcost;
};

enum class AllocatorKind { Capacity, MseTrace, Generic };

/// Diagonal power-allocation problem over the eigenvalues of the whitened
/// effective matrix.  `gains` must be descending; empty `caps` means
/// unconstrained per-stream power (+inf entries are also accepted).
struct AllocationProblem {
    RVec gains;
    double budget = 1.0;
    RVec caps;
    AllocatorKind kind = AllocatorKind::Capacity;
    GenericAllocator generic;
};

struct WaterfillResult {
    RVec powers;
    double mu = 0.0; // water level (capacity), nu (mse), or dual variable (generic)
    double kkt_residual = 0.0;
};

WaterfillResult waterfill(const AllocationProblem& prob);

/// Builds the allocation problem implied by an objective: the closed forms
/// for the log-det / trace-inverse families (offsets and weights paired the
/// same way the optimal rotation pairs them), Generic costs for the rest.
/// Schur-function objectives require a caller-supplied allocator.
AllocationProblem make_allocation(const Objective& obj, const RVec& gains, double budget,
                                  const RVec& caps, const GenericAllocator* custom = nullptr);

/// Step schedule and stopping tolerances for the weighting-factor iteration:
/// t_k = c / (a + k * b), stop when alpha_i * (attained_i - P_i) <= eps_i for
/// all i and the iterate is feasible to 1e-6 relative.  The slow decay keeps
/// the effective step near-constant over the default budget, which this
/// smooth dual needs to converge geometrically.
struct SubgradientSchedule {
    double a = 1.0;
    double b = 0.005;
    double c = 2.0;
    int max_iter = 2000;
    RVec eps; // empty: defaults to 1e-4 * P_i
};

/// Shaping constraint: F with F F^H = rs.  Square output uses the Hermitian
/// square root; cols < dim uses the truncated eigenfactor (requires
/// rank(rs) <= cols).  cols == 0 means square.
PrecoderSolution solve_shaping(const HermitianPsd& pi, const HermitianPsd& rs,
                               Eigen::Index cols = 0);

/// Joint power constraint: F = U_P Lambda_F with capped water-filling,
/// caps tau per stream.  tau may be +inf (sum power alone).
PrecoderSolution solve_joint(const HermitianPsd& pi, double p, double tau, const Objective& obj,
                             Eigen::Index streams = 0, const GenericAllocator* custom = nullptr);

/// Multiple weighted power constraints via the sub-gradient weighting loop.
PrecoderSolution solve_weighted(const HermitianPsd& pi, const std::vector<HermitianPsd>& omegas,
                                const RVec& ps, const Objective& obj,
                                const SubgradientSchedule& sched, Eigen::Index streams = 0,
                                const GenericAllocator* custom = nullptr);

/// Fills in the inner rotation: qx = optimal_qx(obj, f, pi).
PrecoderSolution& assemble(PrecoderSolution& sol, const Objective& obj, const HermitianPsd& pi);

} // namespace matmono::structure
