#include "matmono/robust.hpp"

#include <cmath>

#include "matmono/monotone.hpp"

namespace matmono::robust {

using linalg::EigenOrder;
using linalg::evd_sorted;
using linalg::pinv_sqrt;
using linalg::SortedEigen;
using linalg::SortedSvd;
using linalg::svd_sorted;
using model::ConstraintCheck;

namespace {

constexpr double kDenomFloor = 1e-10;

double real_trace(const CMat& m) { return m.trace().real(); }

bool psi_proportional_identity(const HermitianPsd& psi) {
    const Eigen::Index n = psi.dim();
    const double c = psi.mat().trace().real() / static_cast<double>(n);
    return linalg::max_abs(psi.mat() - c * CMat::Identity(n, n)) <=
           1e-12 * std::max(1.0, std::abs(c));
}

// Shrinks F onto the boundary when numerically a hair outside.
void polish_feasibility(CMat& f, const ConstraintSet& c) {
    const ConstraintCheck chk = model::constraint_satisfied(c, f);
    if (chk.ok) return;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (model::constraint_satisfied(c, CMat(mid * f)).ok)
            lo = mid;
        else
            hi = mid;
    }
    f *= lo;
}

} // namespace

HermitianPsd bayes_pi(const BayesContext& ctx, const CMat& f) {
    if (ctx.h_hat.cols() != ctx.psi.dim())
        throw InvalidInput("bayes_pi: psi dimension must match the transmit side");
    const double kn = ctx.sigma_n2 + real_trace(f * f.adjoint() * ctx.psi.mat());
    return HermitianPsd::trusted(ctx.h_hat.adjoint() * ctx.h_hat / kn);
}

HermitianPsd stochastic_pi(const CMat& h_hat, const HermitianPsd& sigma_row,
                           const HermitianPsd& psi_col, const HermitianPsd& rn) {
    Eigen::SelfAdjointEigenSolver<CMat> es(rn.mat(), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > 0.0)) throw SingularMatrix("stochastic_pi: rn must be PD");
    Eigen::LLT<CMat> llt(rn.mat());
    const CMat rninv = llt.solve(CMat::Identity(rn.dim(), rn.dim()));
    const CMat term1 = h_hat.adjoint() * rninv * h_hat;
    const double w = real_trace(sigma_row.mat() * rninv);
    return HermitianPsd::trusted(term1 + w * psi_col.mat());
}

CMat worst_case_delta(const WorstCaseContext& ctx) {
    if (ctx.gamma < 0.0) throw InvalidInput("worst_case_delta: gamma must be >= 0");
    const SortedSvd svd = svd_sorted(ctx.h_hat);
    const Eigen::Index k = svd.singulars.size();
    CMat delta = CMat::Zero(ctx.h_hat.rows(), ctx.h_hat.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
        const double d = std::min(svd.singulars(i), ctx.gamma);
        delta += d * svd.left.col(i) * svd.right.col(i).adjoint();
    }
    return delta;
}

namespace {

/// Constraint dispatch for a fixed effective matrix (perfect-CSI form).
PrecoderSolution dispatch_structure(const HermitianPsd& pi, const ConstraintSet& constraints,
                                    const Objective& obj, const SubgradientSchedule& sched,
                                    Eigen::Index streams) {
    return std::visit(
        [&](const auto& c) -> PrecoderSolution {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, model::SumPower>) {
                return structure::solve_joint(pi, c.p, std::numeric_limits<double>::infinity(),
                                              obj, streams);
            } else if constexpr (std::is_same_v<T, model::JointPower>) {
                return structure::solve_joint(pi, c.p, c.tau, obj, streams);
            } else if constexpr (std::is_same_v<T, model::EigenCaps>) {
                if (c.taus.size() != 1)
                    throw Unsupported("solvers handle only the maximum-eigenvalue cap");
                const double n = static_cast<double>(pi.dim());
                return structure::solve_joint(pi, n * c.taus(0), c.taus(0), obj, streams);
            } else if constexpr (std::is_same_v<T, model::Shaping>) {
                return structure::solve_shaping(pi, c.rs, streams);
            } else {
                const model::WeightedPower w = model::to_weighted(ConstraintSet{c}, pi.dim());
                return structure::solve_weighted(pi, w.omegas, w.ps, obj, sched, streams);
            }
        },
        constraints);
}

bool left_invariant_family(const ConstraintSet& constraints) {
    return std::visit(
        [&](const auto& c) -> bool {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, model::SumPower> ||
                          std::is_same_v<T, model::JointPower> ||
                          std::is_same_v<T, model::EigenCaps>) {
                return true;
            } else if constexpr (std::is_same_v<T, model::Shaping>) {
                return psi_proportional_identity(c.rs);
            } else {
                return false;
            }
        },
        constraints);
}

} // namespace

PrecoderSolution solve_stochastic(const StochasticContext& ctx, const ConstraintSet& constraints,
                                  const Objective& obj, const SubgradientSchedule& sched,
                                  Eigen::Index streams) {
    if (std::holds_alternative<model::EigenCaps>(constraints))
        throw Unsupported("solve_stochastic: eigenvalue caps alone are not treated");
    const HermitianPsd pi = stochastic_pi(ctx.h_hat, ctx.sigma_row, ctx.psi_col, ctx.rn);
    PrecoderSolution sol = dispatch_structure(pi, constraints, obj, sched, streams);
    polish_feasibility(sol.f, constraints);
    return sol;
}

PrecoderSolution solve_worstcase(const WorstCaseContext& ctx, const ConstraintSet& constraints,
                                 const Objective& obj, const SubgradientSchedule& sched,
                                 Eigen::Index streams, bool allow_upper_bound) {
    const bool tight = left_invariant_family(constraints);
    if (!tight && !allow_upper_bound)
        throw Unsupported("solve_worstcase: constraint is not left unitarily invariant; "
                          "pass allow_upper_bound to optimize the bound anyway");
    const CMat heff = ctx.h_hat - worst_case_delta(ctx);
    const HermitianPsd pi = HermitianPsd::trusted(heff.adjoint() * heff / ctx.sigma_n2);
    PrecoderSolution sol = dispatch_structure(pi, constraints, obj, sched, streams);
    sol.diagnostics.upper_bound_only = !tight;
    polish_feasibility(sol.f, constraints);
    return sol;
}

PrecoderSolution solve_bayes_weighted(const BayesContext& ctx,
                                      const std::vector<HermitianPsd>& omegas, const RVec& ps,
                                      const Objective& obj, const SubgradientSchedule& sched,
                                      Eigen::Index streams) {
    const Eigen::Index ni = static_cast<Eigen::Index>(omegas.size());
    if (ni < 1 || ps.size() != ni)
        throw InvalidInput("solve_bayes_weighted: weight/threshold mismatch");
    const Eigen::Index n = ctx.h_hat.cols();
    if (ctx.psi.dim() != n) throw InvalidInput("solve_bayes_weighted: psi dimension mismatch");

    // Transformed weights sigma_n^2 omega_i + P_i psi; same thresholds.
    std::vector<HermitianPsd> omegas_bar;
    omegas_bar.reserve(static_cast<size_t>(ni));
    for (Eigen::Index i = 0; i < ni; ++i)
        omegas_bar.push_back(HermitianPsd::trusted(
            ctx.sigma_n2 * omegas[static_cast<size_t>(i)].mat() + ps(i) * ctx.psi.mat()));

    const HermitianPsd pi_hat = HermitianPsd::trusted(ctx.h_hat.adjoint() * ctx.h_hat);
    PrecoderSolution sol = structure::solve_weighted(pi_hat, omegas_bar, ps, obj, sched, streams);

    const double denom = 1.0 - real_trace(sol.f * sol.f.adjoint() * ctx.psi.mat());
    if (denom <= kDenomFloor)
        throw DegenerateRescaling("solve_bayes_weighted: 1 - Tr(psi Fbar Fbar^H) degenerated");
    const double scale = std::sqrt(ctx.sigma_n2 / denom);
    sol.f *= scale;
    sol.rotation *= scale;

    // Noise-inflation fixed point: sigma_n^2 + Tr(F F^H psi) = sigma_n^2 / denom.
    const double kn = ctx.sigma_n2 + real_trace(sol.f * sol.f.adjoint() * ctx.psi.mat());
    if (std::abs(kn - ctx.sigma_n2 / denom) > 1e-8 * std::max(1.0, kn))
        throw Error("solve_bayes_weighted: rescaling fixed point violated");

    polish_feasibility(sol.f, ConstraintSet{model::WeightedPower{omegas, ps}});
    return sol;
}

PrecoderSolution solve_bayes_joint(const BayesContext& ctx, double p, double tau,
                                   const Objective& obj, Eigen::Index streams) {
    if (!(p > 0.0) || !(tau > 0.0))
        throw InvalidInput("solve_bayes_joint: thresholds must be positive");
    const Eigen::Index n = ctx.h_hat.cols();
    if (ctx.psi.dim() != n) throw InvalidInput("solve_bayes_joint: psi dimension mismatch");
    const Eigen::Index l = streams > 0 ? streams : n;

    const HermitianPsd psi_t =
        HermitianPsd::trusted(ctx.sigma_n2 * CMat::Identity(n, n) + p * ctx.psi.mat());
    const CMat wt = pinv_sqrt(psi_t).mat();
    const SortedSvd svd = svd_sorted(ctx.h_hat * wt);

    const RVec psi_ev = evd_sorted(ctx.psi, EigenOrder::Ascending).eigenvalues;
    const double ratio =
        (ctx.sigma_n2 + p * psi_ev(0)) / (ctx.sigma_n2 + p * psi_ev(psi_ev.size() - 1));
    const double cap = std::isinf(tau) ? tau : tau * ratio;

    RVec gains = RVec::Zero(l);
    for (Eigen::Index i = 0; i < std::min(l, svd.singulars.size()); ++i)
        gains(i) = svd.singulars(i) * svd.singulars(i);
    structure::AllocationProblem prob =
        structure::make_allocation(obj, gains, p, RVec::Constant(l, cap));
    const structure::WaterfillResult wf = structure::waterfill(prob);

    const CMat v = svd.right.leftCols(l);
    const CMat lam = wf.powers.cwiseSqrt().asDiagonal();
    const CMat psi_w = wt * ctx.psi.mat() * wt;
    const double denom = 1.0 - real_trace(psi_w * v * wf.powers.asDiagonal() * v.adjoint());
    if (denom <= kDenomFloor)
        throw DegenerateRescaling("solve_bayes_joint: rescaling denominator degenerated");
    const double scale = std::sqrt(ctx.sigma_n2 / denom);

    PrecoderSolution sol;
    sol.rotation = scale * wt * v;
    sol.f = sol.rotation * lam;
    sol.qx = CMat::Identity(l, l);
    sol.powers = wf.powers;
    sol.diagnostics.water_level = wf.mu;
    sol.diagnostics.kkt_residual = wf.kkt_residual;
    const bool budget_active = std::abs(wf.powers.sum() - p) <= 1e-8 * std::max(1.0, p);
    sol.diagnostics.suboptimal = !(psi_proportional_identity(ctx.psi) && budget_active);

    polish_feasibility(sol.f, ConstraintSet{model::JointPower{p, std::isinf(tau) ? 1e300 : tau}});
    return sol;
}

PrecoderSolution solve_bayes_shaping(const BayesContext& ctx, const HermitianPsd& rs,
                                     const Objective& obj, Eigen::Index cols) {
    (void)obj;
    const HermitianPsd pi_hat =
        HermitianPsd::trusted(ctx.h_hat.adjoint() * ctx.h_hat / ctx.sigma_n2);
    PrecoderSolution sol = structure::solve_shaping(pi_hat, rs, cols);
    sol.diagnostics.suboptimal = linalg::max_abs(ctx.psi.mat()) > 0.0;
    return sol;
}

HermitianPsd effective_pi(const Scenario& s, const CMat& f) {
    return std::visit(
        [&](const auto& r) -> HermitianPsd {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, model::PerfectCsi>) {
                return HermitianPsd::trusted(r.h.adjoint() * r.h / s.noise_var);
            } else if constexpr (std::is_same_v<T, model::BayesCsi>) {
                return bayes_pi(BayesContext{r.h_hat, r.psi, s.noise_var}, f);
            } else if constexpr (std::is_same_v<T, model::StochasticCsi>) {
                const Eigen::Index nr = r.h_hat.rows();
                const HermitianPsd rn =
                    HermitianPsd::trusted(s.noise_var * CMat::Identity(nr, nr));
                return stochastic_pi(r.h_hat, r.sigma_row, r.psi_col, rn);
            } else {
                const WorstCaseContext ctx{r.h_hat, r.gamma, s.noise_var};
                const CMat heff = r.h_hat - worst_case_delta(ctx);
                return HermitianPsd::trusted(heff.adjoint() * heff / s.noise_var);
            }
        },
        s.regime);
}

PrecoderSolution design_scenario(const Scenario& s, const SubgradientSchedule& sched,
                                 bool allow_upper_bound) {
    model::validate_scenario(s);
    const Eigen::Index l = s.streams;

    PrecoderSolution sol = std::visit(
        [&](const auto& r) -> PrecoderSolution {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, model::PerfectCsi>) {
                const HermitianPsd pi =
                    HermitianPsd::trusted(r.h.adjoint() * r.h / s.noise_var);
                return dispatch_structure(pi, s.constraints, s.objective, sched, l);
            } else if constexpr (std::is_same_v<T, model::BayesCsi>) {
                const BayesContext ctx{r.h_hat, r.psi, s.noise_var};
                return std::visit(
                    [&](const auto& c) -> PrecoderSolution {
                        using C = std::decay_t<decltype(c)>;
                        if constexpr (std::is_same_v<C, model::SumPower>) {
                            return solve_bayes_joint(ctx, c.p,
                                                     std::numeric_limits<double>::infinity(),
                                                     s.objective, l);
                        } else if constexpr (std::is_same_v<C, model::JointPower>) {
                            return solve_bayes_joint(ctx, c.p, c.tau, s.objective, l);
                        } else if constexpr (std::is_same_v<C, model::Shaping>) {
                            return solve_bayes_shaping(ctx, c.rs, s.objective, l);
                        } else if constexpr (std::is_same_v<C, model::EigenCaps>) {
                            throw Unsupported("design_scenario: eigenvalue caps alone are not "
                                              "treated in the Bayes regime");
                        } else {
                            const model::WeightedPower w =
                                model::to_weighted(s.constraints, r.h_hat.cols());
                            return solve_bayes_weighted(ctx, w.omegas, w.ps, s.objective, sched,
                                                        l);
                        }
                    },
                    s.constraints);
            } else if constexpr (std::is_same_v<T, model::StochasticCsi>) {
                const Eigen::Index nr = r.h_hat.rows();
                const StochasticContext ctx{
                    r.h_hat, r.sigma_row, r.psi_col,
                    HermitianPsd::trusted(s.noise_var * CMat::Identity(nr, nr))};
                return solve_stochastic(ctx, s.constraints, s.objective, sched, l);
            } else {
                const WorstCaseContext ctx{r.h_hat, r.gamma, s.noise_var};
                return solve_worstcase(ctx, s.constraints, s.objective, sched, l,
                                       allow_upper_bound);
            }
        },
        s.regime);

    structure::assemble(sol, s.objective, effective_pi(s, sol.f));
    return sol;
}

} // namespace matmono::robust
