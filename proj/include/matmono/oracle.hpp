#pragma once

#include "matmono/model.hpp"

namespace matmono::oracle {

using linalg::CMat;
using linalg::HermitianPsd;
using linalg::RVec;
using model::ConstraintSet;

enum class OracleMethod { RandomSearch, ProjectedGradient, GridSearch };

struct OracleReport {
    double best_objective = 0.0; // maximized for RandomSearch/ProjectedGradient goals, minimized for GridSearch costs
    std::uint64_t best_point_digest = 0;
    long samples = 0;
    OracleMethod method = OracleMethod::RandomSearch;
    bool converged = true;
};

/// Draws n random precoders, rescales each onto the constraint boundary
/// (bisection on the scale; shaping via an eigenvalue rescale), and returns
/// the best value of the scalarized objective (maximized).
OracleReport random_feasible_search(const ConstraintSet& constraints, Eigen::Index rows,
                                    Eigen::Index cols,
                                    const std::function<double(const CMat&)>& scalarized_obj,
                                    long n, std::uint64_t seed);

enum class CovarianceGoal { MaxLogDet, MinMseTrace };

/// Convex reference: projected gradient on the covariance Q = F F^H over
/// {Q PSD, Tr(omega_i Q) <= P_i}, with Dykstra-style alternating projection.
/// best_objective is log|I + Heff Q Heff^H| or Tr((Heff... + I)^{-1}) at the
/// final iterate (maximized / minimized respectively).
OracleReport projected_gradient_covariance(const CMat& h_eff, const model::WeightedPower& constraints,
                                           CovarianceGoal goal, int iters, double step,
                                           std::uint64_t seed);

/// Exhaustive boundary-grid search over the power simplex (dims <= 3).
/// best_objective is the minimized cost.
OracleReport grid_search_allocation(const RVec& gains, double budget, const RVec& caps,
                                    const std::function<double(const RVec&)>& cost,
                                    double resolution, RVec* best_point = nullptr);

/// n error matrices with spectral norm <= gamma (sample 0 sits exactly on the
/// boundary with all singular values equal to gamma).
std::vector<CMat> sample_delta(double gamma, Eigen::Index rows, Eigen::Index cols, long n,
                               std::uint64_t seed);

/// FNV-1a over the raw bytes of a matrix, for solution digests.
std::uint64_t digest(const CMat& m);

} // namespace matmono::oracle
