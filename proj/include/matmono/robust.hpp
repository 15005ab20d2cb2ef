#pragma once

#include "matmono/structure.hpp"

namespace matmono::robust {

using linalg::CMat;
using linalg::HermitianPsd;
using linalg::RVec;
using model::ConstraintSet;
using model::Objective;
using model::PrecoderSolution;
using model::Scenario;
using structure::SubgradientSchedule;

struct BayesContext {
    CMat h_hat;
    HermitianPsd psi;
    double sigma_n2 = 1.0;
};

struct StochasticContext {
    CMat h_hat;
    HermitianPsd sigma_row;
    HermitianPsd psi_col;
    HermitianPsd rn; // noise covariance, must be PD
};

struct WorstCaseContext {
    CMat h_hat;
    double gamma = 0.0;
    double sigma_n2 = 1.0;
};

/// h_hat^H (sigma_n^2 I + Tr(F F^H psi) I)^{-1} h_hat; depends on F through
/// the scalar noise-inflation term.
HermitianPsd bayes_pi(const BayesContext& ctx, const CMat& f);

/// h_hat^H rn^{-1} h_hat + Tr(sigma_row rn^{-1}) psi_col.
HermitianPsd stochastic_pi(const CMat& h_hat, const HermitianPsd& sigma_row,
                           const HermitianPsd& psi_col, const HermitianPsd& rn);

/// Spectral-norm-bounded error aligned with the estimated channel's singular
/// frame, singular values min(sigma_i, gamma).
CMat worst_case_delta(const WorstCaseContext& ctx);

PrecoderSolution solve_stochastic(const StochasticContext& ctx, const ConstraintSet& constraints,
                                  const Objective& obj, const SubgradientSchedule& sched = {},
                                  Eigen::Index streams = 0);

/// Refuses constraints that are right- but not left-unitarily-invariant
/// unless allow_upper_bound is set; in that case the solution optimizes an
/// upper bound and diagnostics.upper_bound_only is set.
PrecoderSolution solve_worstcase(const WorstCaseContext& ctx, const ConstraintSet& constraints,
                                 const Objective& obj, const SubgradientSchedule& sched = {},
                                 Eigen::Index streams = 0, bool allow_upper_bound = false);

/// Weighting-factor iteration on the noise-normalized problem: weights
/// sigma_n^2 omega_i + P_i psi, aggregate budget sum(P_i), then the exact
/// rescaling back to F.
PrecoderSolution solve_bayes_weighted(const BayesContext& ctx,
                                      const std::vector<HermitianPsd>& omegas, const RVec& ps,
                                      const Objective& obj, const SubgradientSchedule& sched = {},
                                      Eigen::Index streams = 0);

/// Whiten by (sigma_n^2 I + p psi)^{1/2}, capped water-filling, rescale.
/// Exact when psi is proportional to I and the power budget is active;
/// otherwise a lower-bound maximizer flagged suboptimal.
PrecoderSolution solve_bayes_joint(const BayesContext& ctx, double p, double tau,
                                   const Objective& obj, Eigen::Index streams = 0);

/// Square root of rs; exact when psi = 0, otherwise flagged suboptimal.
PrecoderSolution solve_bayes_shaping(const BayesContext& ctx, const HermitianPsd& rs,
                                     const Objective& obj, Eigen::Index cols = 0);

/// End-to-end design for one scenario: builds the regime's effective matrix,
/// dispatches on the constraint family, and assembles the inner rotation.
PrecoderSolution design_scenario(const Scenario& s, const SubgradientSchedule& sched = {},
                                 bool allow_upper_bound = false);

/// The effective channel-quality matrix the assembled rotation is computed
/// against (regime-dependent; Bayes evaluates it at the final F).
HermitianPsd effective_pi(const Scenario& s, const CMat& f);

} // namespace matmono::robust
