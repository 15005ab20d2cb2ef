#include <doctest.h>

#include "matmono/monotone.hpp"
#include "matmono/oracle.hpp"
#include "matmono/robust.hpp"

using namespace matmono;
using linalg::CMat;
using linalg::EigenOrder;
using linalg::HermitianPsd;
using linalg::RVec;
using model::ConstraintSet;
using model::Objective;

namespace {

CMat random_complex(Eigen::Index r, Eigen::Index c, Rng& rng) {
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.cgaussian();
    return m;
}

HermitianPsd random_psd(Eigen::Index n, Rng& rng) {
    const CMat g = random_complex(n, n, rng);
    return HermitianPsd::trusted(g * g.adjoint());
}

Objective mse_obj(Eigen::Index l) {
    return model::MseTrace{HermitianPsd::trusted(CMat::Identity(l, l))};
}

HermitianPsd exp_psi(Eigen::Index n, double sigma_e2, double rho = 0.5) {
    CMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = sigma_e2 * std::pow(rho, std::abs(static_cast<double>(i - j)));
    return HermitianPsd::trusted(m);
}

std::vector<HermitianPsd> per_antenna_omegas(Eigen::Index n) {
    std::vector<HermitianPsd> out;
    for (Eigen::Index i = 0; i < n; ++i) {
        CMat e = CMat::Zero(n, n);
        e(i, i) = 1.0;
        out.push_back(HermitianPsd::trusted(e));
    }
    return out;
}

} // namespace

TEST_SUITE("robust") {

TEST_CASE("stochastic_pi closed form") {
    Rng rng(401);
    const Eigen::Index nr = 4, nt = 3;
    const CMat h = random_complex(nr, nt, rng);
    const HermitianPsd rn = HermitianPsd::trusted(0.25 * CMat::Identity(nr, nr));

    SUBCASE("zero receive correlation reduces to the perfect-CSI matrix") {
        const auto pi = robust::stochastic_pi(h, HermitianPsd::trusted(CMat::Zero(nr, nr)),
                                              random_psd(nt, rng), rn);
        CHECK((pi.mat() - h.adjoint() * h / 0.25).norm() < 1e-10);
    }
    SUBCASE("zero estimate leaves the weighted transmit correlation") {
        const auto pi = robust::stochastic_pi(CMat::Zero(4, 4),
                                              HermitianPsd::trusted(CMat::Identity(4, 4)),
                                              HermitianPsd::trusted(CMat::Identity(4, 4)),
                                              HermitianPsd::trusted(0.25 * CMat::Identity(4, 4)));
        CHECK((pi.mat() - (4.0 / 0.25) * CMat::Identity(4, 4)).norm() < 1e-10);
    }
    SUBCASE("singular rn is rejected") {
        CHECK_THROWS_AS(robust::stochastic_pi(h, random_psd(nr, rng), random_psd(nt, rng),
                                              HermitianPsd::trusted(CMat::Zero(nr, nr))),
                        SingularMatrix);
    }
}

TEST_CASE("stochastic_pi matches its monte-carlo oracle within 2% at 1e5 samples") {
    Rng rng(409);
    const Eigen::Index nr = 3, nt = 3;
    const CMat h = random_complex(nr, nt, rng);
    const HermitianPsd sig = random_psd(nr, rng);
    const HermitianPsd psi = random_psd(nt, rng);
    const HermitianPsd rn = HermitianPsd::trusted(0.5 * CMat::Identity(nr, nr));
    const auto closed = robust::stochastic_pi(h, sig, psi, rn);

    const CMat sig_h = linalg::herm_sqrt(sig).mat();
    const CMat psi_h = linalg::herm_sqrt(psi).mat();
    const CMat rninv = rn.mat().inverse();
    CMat acc = CMat::Zero(nt, nt);
    Rng mc(411);
    const long n = 100000;
    for (long t = 0; t < n; ++t) {
        const CMat hw = random_complex(nr, nt, mc);
        const CMat ht = h + sig_h * hw * psi_h;
        acc += ht.adjoint() * rninv * ht;
    }
    acc /= static_cast<double>(n);
    CHECK((acc - closed.mat()).norm() / closed.mat().norm() < 0.02);
}

TEST_CASE("solve_stochastic dispatch") {
    Rng rng(419);
    const Eigen::Index n = 4;
    const CMat h = random_complex(n, n, rng);
    const HermitianPsd zero = HermitianPsd::trusted(CMat::Zero(n, n));
    const HermitianPsd rn = HermitianPsd::trusted(0.2 * CMat::Identity(n, n));
    SUBCASE("zero error equals the perfect-CSI design") {
        const robust::StochasticContext ctx{h, zero, exp_psi(n, 0.1), rn};
        const auto sol =
            robust::solve_stochastic(ctx, ConstraintSet{model::SumPower{1.0}}, mse_obj(2), {}, 2);
        const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / 0.2);
        const auto direct = structure::solve_joint(pi, 1.0,
                                                   std::numeric_limits<double>::infinity(),
                                                   mse_obj(2), 2);
        CHECK((sol.f - direct.f).norm() < 1e-9 * direct.f.norm());
    }
    SUBCASE("zero estimate aligns the rotation with the transmit-correlation basis") {
        CMat psi = CMat::Zero(2, 2);
        psi(0, 0) = 2.0;
        psi(1, 1) = 1.0;
        const robust::StochasticContext ctx{CMat::Zero(2, 2),
                                            HermitianPsd::trusted(CMat::Identity(2, 2)),
                                            HermitianPsd(psi),
                                            HermitianPsd::trusted(0.5 * CMat::Identity(2, 2))};
        const auto sol =
            robust::solve_stochastic(ctx, ConstraintSet{model::JointPower{1.0, 0.8}}, mse_obj(2),
                                     {}, 2);
        // effective matrix is diagonal descending, so the rotation is I
        CHECK((sol.rotation - CMat::Identity(2, 2)).norm() < 1e-10);
    }
    SUBCASE("weighted constraints survive the pareto sampling oracle") {
        const robust::StochasticContext ctx{h, random_psd(n, rng), exp_psi(n, 0.1), rn};
        const model::WeightedPower w =
            model::to_weighted(ConstraintSet{model::PerAntenna{RVec::Constant(n, 1.0)}});
        const auto sol = robust::solve_stochastic(ctx, ConstraintSet{model::PerAntenna{
                                                      RVec::Constant(n, 1.0)}},
                                                  mse_obj(2), {}, 2);
        const HermitianPsd pi = robust::stochastic_pi(h, ctx.sigma_row, ctx.psi_col, rn);
        const CMat s = sol.f.adjoint() * pi.mat() * sol.f;
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (s + s.adjoint().eval()),
                                               Eigen::EigenvaluesOnly);
        const RVec ours = es.eigenvalues().reverse();
        Rng sampler(421);
        for (int t = 0; t < 500; ++t) {
            CMat probe = random_complex(n, 2, sampler);
            double sc = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i)
                sc = std::min(sc, 1.0 / probe.row(i).squaredNorm());
            probe *= std::sqrt(sc);
            const CMat sp = probe.adjoint() * pi.mat() * probe;
            Eigen::SelfAdjointEigenSolver<CMat> ep(0.5 * (sp + sp.adjoint().eval()),
                                                   Eigen::EigenvaluesOnly);
            const RVec theirs = ep.eigenvalues().reverse();
            bool dominates = true;
            for (Eigen::Index i = 0; i < ours.size(); ++i)
                if (theirs(i) <= ours(i) + 1e-8) dominates = false;
            CHECK_FALSE(dominates);
        }
    }
}

TEST_CASE("worst_case_delta examples") {
    Rng rng(431);
    SUBCASE("zero radius gives the zero matrix") {
        const CMat h = random_complex(3, 2, rng);
        const CMat d = robust::worst_case_delta({h, 0.0, 1.0});
        CHECK(d.norm() == 0.0);
    }
    SUBCASE("clamp at gamma: singulars (2,1), gamma 1.5 leaves (0.5, 0)") {
        Rng r2(433);
        const CMat u = linalg::random_unitary(2, r2);
        const CMat v = linalg::random_unitary(2, r2);
        CMat s = CMat::Zero(2, 2);
        s(0, 0) = 2.0;
        s(1, 1) = 1.0;
        const CMat h = u * s * v.adjoint();
        const CMat d = robust::worst_case_delta({h, 1.5, 1.0});
        const auto svd = linalg::svd_sorted(CMat(h - d));
        CHECK(svd.singulars(0) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(svd.singulars(1) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(linalg::svd_sorted(d).singulars(0) <= 1.5 + 1e-12);
    }
    SUBCASE("radius beyond the top singular value wipes the channel") {
        const CMat h = random_complex(3, 3, rng);
        const double smax = linalg::svd_sorted(h).singulars(0);
        const CMat d = robust::worst_case_delta({h, smax * 1.01, 1.0});
        CHECK((h - d).norm() < 1e-9);
    }
}

TEST_CASE("worst-case singular floor over 1000 sampled errors") {
    Rng rng(439);
    const CMat h = random_complex(4, 4, rng);
    const double gamma = 0.6;
    const RVec sh = linalg::svd_sorted(h).singulars;
    const auto deltas = oracle::sample_delta(gamma, 4, 4, 1000, 441);
    for (const auto& d : deltas) {
        const RVec s = linalg::svd_sorted(CMat(h - d)).singulars;
        for (Eigen::Index i = 0; i < 4; ++i)
            CHECK(s(i) >= std::max(0.0, sh(i) - gamma) - 1e-9);
    }
    // equality at the constructed worst case
    const CMat dw = robust::worst_case_delta({h, gamma, 1.0});
    const RVec sw = linalg::svd_sorted(CMat(h - dw)).singulars;
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(sw(i) == doctest::Approx(std::max(0.0, sh(i) - gamma)).epsilon(1e-9));
}

TEST_CASE("solve_worstcase dispatch and gating") {
    Rng rng(443);
    const CMat h = random_complex(4, 4, rng);
    SUBCASE("zero radius equals the perfect-CSI design") {
        const auto sol = robust::solve_worstcase({h, 0.0, 0.3},
                                                 ConstraintSet{model::JointPower{1.0, 0.7}},
                                                 mse_obj(2), {}, 2);
        const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / 0.3);
        const auto direct = structure::solve_joint(pi, 1.0, 0.7, mse_obj(2), 2);
        CHECK((sol.f - direct.f).norm() < 1e-10 * direct.f.norm());
        CHECK_FALSE(sol.diagnostics.upper_bound_only);
    }
    SUBCASE("identity shaping is left-invariant and solved by the square root") {
        const auto sol = robust::solve_worstcase(
            {h, 0.4, 1.0}, ConstraintSet{model::Shaping{HermitianPsd(CMat::Identity(4, 4))}},
            mse_obj(4), {}, 4);
        CHECK((sol.f * sol.f.adjoint() - CMat::Identity(4, 4)).norm() < 1e-9);
    }
    SUBCASE("per-antenna requires the explicit allow flag") {
        const ConstraintSet pa{model::PerAntenna{RVec::Constant(4, 0.5)}};
        CHECK_THROWS_AS(robust::solve_worstcase({h, 0.4, 1.0}, pa, mse_obj(2), {}, 2),
                        Unsupported);
        const auto sol = robust::solve_worstcase({h, 0.4, 1.0}, pa, mse_obj(2), {}, 2, true);
        CHECK(sol.diagnostics.upper_bound_only);
        CHECK(model::constraint_satisfied(pa, sol.f).ok);
    }
}

TEST_CASE("bayes_pi examples") {
    Rng rng(449);
    const CMat h = random_complex(3, 3, rng);
    const HermitianPsd psi = exp_psi(3, 0.1);
    SUBCASE("zero psi or zero precoder reduce to hhat^H hhat / sigma") {
        const robust::BayesContext c0{h, HermitianPsd::trusted(CMat::Zero(3, 3)), 0.5};
        const CMat f = random_complex(3, 2, rng);
        CHECK((robust::bayes_pi(c0, f).mat() - h.adjoint() * h / 0.5).norm() < 1e-12);
        const robust::BayesContext c1{h, psi, 0.5};
        CHECK((robust::bayes_pi(c1, CMat::Zero(3, 2)).mat() - h.adjoint() * h / 0.5).norm() <
              1e-12);
    }
    SUBCASE("noise inflation follows Tr(F F^H psi)") {
        const robust::BayesContext c{h, psi, 0.5};
        const CMat f = random_complex(3, 2, rng);
        const double t1 = (f * f.adjoint() * psi.mat()).trace().real();
        const CMat p1 = robust::bayes_pi(c, f).mat();
        const CMat p2 = robust::bayes_pi(c, CMat(2.0 * f)).mat();
        CHECK((p1 * (0.5 + t1) - p2 * (0.5 + 4.0 * t1)).norm() < 1e-9);
    }
}

TEST_CASE("bayes weighted: psi = 0 reduces to the plain weighted solve") {
    Rng rng(457);
    const Eigen::Index n = 4;
    const CMat h = random_complex(n, n, rng);
    const double sigma_n2 = 0.25;
    const auto omegas = per_antenna_omegas(n);
    const RVec ps = RVec::Constant(n, 1.0);

    const robust::BayesContext ctx{h, HermitianPsd::trusted(CMat::Zero(n, n)), sigma_n2};
    const auto sol = robust::solve_bayes_weighted(ctx, omegas, ps, mse_obj(2), {}, 2);

    const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / sigma_n2);
    const auto direct = structure::solve_weighted(pi, omegas, ps, mse_obj(2), {}, 2);
    CHECK((sol.f - direct.f).norm() < 1e-6 * std::max(1.0, direct.f.norm()));
}

TEST_CASE("bayes weighted on the per-antenna setup: feasible, tight, fixed point") {
    Rng rng(461);
    const Eigen::Index n = 4;
    const auto omegas = per_antenna_omegas(n);
    const RVec ps = RVec::Constant(n, 1.0);
    const HermitianPsd psi = exp_psi(n, 0.1);
    int converged = 0;
    for (int inst = 0; inst < 20; ++inst) {
        CMat h(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                h(i, j) = std::sqrt(0.9) * rng.cgaussian();
        const robust::BayesContext ctx{h, psi, 0.1};
        const auto sol = robust::solve_bayes_weighted(ctx, omegas, ps, mse_obj(2), {}, 2);
        if (sol.diagnostics.converged) ++converged;

        const auto chk = model::constraint_satisfied(
            ConstraintSet{model::WeightedPower{omegas, ps}}, sol.f);
        CHECK(chk.ok);
        // constraints tight within 1e-4 of the budget on the binding antennas
        CHECK(chk.slack.minCoeff() <= 1e-4);

        // Eq.(59)/(60) fixed point and round trip
        const double tr = (sol.f * sol.f.adjoint() * psi.mat()).trace().real();
        const double kn = 0.1 + tr;
        const CMat fbar = sol.f / std::sqrt(kn);
        const double denom = 1.0 - (fbar * fbar.adjoint() * psi.mat()).trace().real();
        CHECK(kn == doctest::Approx(0.1 / denom).epsilon(1e-8));
        const CMat back = std::sqrt(0.1 / denom) * fbar;
        CHECK((back - sol.f).norm() <= 1e-10 * std::max(1.0, sol.f.norm()));
    }
    CHECK(converged >= 19);
}

TEST_CASE("bayes constraint equivalence in both directions on 500 samples") {
    Rng rng(463);
    const Eigen::Index n = 3;
    const HermitianPsd psi = exp_psi(n, 0.15);
    const double sigma_n2 = 0.3;
    const HermitianPsd omega = random_psd(n, rng);
    const double p = 1.2;
    int checked = 0;
    for (int t = 0; t < 500; ++t) {
        const CMat f = std::sqrt(rng.uniform(0.1, 2.5)) * random_complex(n, 2, rng) / std::sqrt(2.0);
        const double lhs = (omega.mat() * f * f.adjoint()).trace().real() - p;
        const CMat ffh = f * f.adjoint();
        const double num =
            ((sigma_n2 * omega.mat() + p * psi.mat()) * ffh).trace().real();
        const double den = sigma_n2 + (ffh * psi.mat()).trace().real();
        const double rhs = num / den - p;
        if (std::abs(lhs) > 1e-9 && std::abs(rhs) > 1e-9) {
            CHECK((lhs > 0) == (rhs > 0));
            ++checked;
        }
    }
    CHECK(checked > 400);
}

TEST_CASE("bayes joint examples") {
    Rng rng(467);
    const Eigen::Index n = 3;
    const CMat h = random_complex(n, n, rng);
    SUBCASE("psi = 0 is the plain joint solution") {
        const robust::BayesContext ctx{h, HermitianPsd::trusted(CMat::Zero(n, n)), 0.2};
        const auto sol = robust::solve_bayes_joint(ctx, 1.0, 0.6, mse_obj(2), 2);
        CHECK_FALSE(sol.diagnostics.suboptimal);
        const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / 0.2);
        const auto direct = structure::solve_joint(pi, 1.0, 0.6, mse_obj(2), 2);
        CHECK((sol.f - direct.f).norm() < 1e-8 * direct.f.norm());
    }
    SUBCASE("scaled-identity psi stays exact and keeps the cap at tau") {
        const robust::BayesContext ctx{h, HermitianPsd::trusted(0.1 * CMat::Identity(n, n)), 0.2};
        const auto sol = robust::solve_bayes_joint(ctx, 1.0, 0.6, mse_obj(2), 2);
        CHECK_FALSE(sol.diagnostics.suboptimal);
        const auto chk = model::constraint_satisfied(
            ConstraintSet{model::JointPower{1.0, 0.6}}, sol.f);
        CHECK(chk.ok);
        CHECK(sol.f.squaredNorm() == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("general psi: feasible, flagged, capped, and meets its own certificate") {
        for (int t = 0; t < 20; ++t) {
            const CMat ht = random_complex(n, n, rng);
            const HermitianPsd psi = exp_psi(n, 0.15);
            const robust::BayesContext ctx{ht, psi, 0.2};
            const auto sol = robust::solve_bayes_joint(ctx, 1.0, 0.5, mse_obj(2), 2);
            CHECK(sol.diagnostics.suboptimal);
            CHECK(model::constraint_satisfied(ConstraintSet{model::JointPower{1.0, 0.5}}, sol.f)
                      .ok);
            // transformed-domain powers respect the conservative cap
            const RVec psi_ev = linalg::evd_sorted(psi, EigenOrder::Ascending).eigenvalues;
            const double cap = 0.5 * (0.2 + psi_ev(0)) / (0.2 + psi_ev(n - 1));
            CHECK(sol.powers.maxCoeff() <= cap * (1.0 + 1e-9));
            // realized objective is at least as good as the certified bound:
            // K_n <= sigma_n^2 + P lambda_max(psi)
            const double true_mse =
                monotone::eval_objective(mse_obj(2), sol.f, robust::bayes_pi(ctx, sol.f));
            const HermitianPsd pi_bound = HermitianPsd::trusted(
                ht.adjoint() * ht / (0.2 + psi_ev(n - 1)));
            const double certified =
                monotone::eval_objective(mse_obj(2), sol.f, pi_bound);
            CHECK(true_mse <= certified + 1e-10);
        }
    }
}

TEST_CASE("bayes shaping examples and lower-bound ordering") {
    Rng rng(479);
    const Eigen::Index n = 3;
    const CMat h = random_complex(n, n, rng);
    SUBCASE("psi = 0, identity shaping is exact") {
        const robust::BayesContext ctx{h, HermitianPsd::trusted(CMat::Zero(n, n)), 0.5};
        const auto sol = robust::solve_bayes_shaping(ctx, HermitianPsd(CMat::Identity(n, n)),
                                                     mse_obj(n), n);
        CHECK_FALSE(sol.diagnostics.suboptimal);
        CHECK((sol.f - CMat::Identity(n, n)).norm() < 1e-10);
    }
    SUBCASE("diagonal shaping returns the square root under any psi") {
        CMat rs = CMat::Zero(2, 2);
        rs(0, 0) = 4.0;
        rs(1, 1) = 1.0;
        const robust::BayesContext ctx{random_complex(2, 2, rng), exp_psi(2, 0.1), 0.5};
        const auto sol = robust::solve_bayes_shaping(ctx, HermitianPsd(rs), mse_obj(2), 2);
        CHECK(sol.diagnostics.suboptimal);
        CHECK((sol.f * sol.f.adjoint() - rs).norm() < 1e-10);
    }
    SUBCASE("lower-bound matrix ordering holds for 100 feasible F") {
        const HermitianPsd rs = random_psd(n, rng);
        const HermitianPsd psi = exp_psi(n, 0.2);
        const double sigma_n2 = 0.4;
        const double bound_den = sigma_n2 + (rs.mat() * psi.mat()).trace().real();
        const CMat root = linalg::herm_sqrt(rs).mat();
        for (int t = 0; t < 100; ++t) {
            CMat g = random_complex(n, n, rng);
            Eigen::SelfAdjointEigenSolver<CMat> es(CMat(g * g.adjoint()), Eigen::EigenvaluesOnly);
            const CMat f = root * g / std::sqrt(es.eigenvalues()(n - 1) + 1e-12);
            const double kn =
                sigma_n2 + (f * f.adjoint() * psi.mat()).trace().real();
            const CMat lhs = f.adjoint() * h.adjoint() * h * f / kn;
            const CMat rhs = f.adjoint() * h.adjoint() * h * f / bound_den;
            Eigen::SelfAdjointEigenSolver<CMat> ed(
                CMat(0.5 * (lhs - rhs + (lhs - rhs).adjoint().eval())), Eigen::EigenvaluesOnly);
            CHECK(ed.eigenvalues()(0) >= -1e-9);
        }
    }
}

TEST_CASE("regime continuity: vanishing uncertainty recovers the perfect design") {
    Rng rng(487);
    const Eigen::Index n = 4;
    const CMat h = random_complex(n, n, rng);
    const double sigma_n2 = 0.2;
    const Objective obj = mse_obj(2);
    const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / sigma_n2);
    const auto perfect = structure::solve_joint(pi, 1.0, 0.7, obj, 2);
    const double v_perfect = monotone::eval_objective(obj, perfect.f, pi);

    SUBCASE("bayes with sigma_e2 = 1e-8") {
        const robust::BayesContext ctx{h, exp_psi(n, 1e-8), sigma_n2};
        const auto sol = robust::solve_bayes_joint(ctx, 1.0, 0.7, obj, 2);
        const double v = monotone::eval_objective(obj, sol.f, pi);
        CHECK(std::abs(v - v_perfect) < 1e-6);
    }
    SUBCASE("worst case with gamma -> 0") {
        const auto sol = robust::solve_worstcase({h, 1e-9, sigma_n2},
                                                 ConstraintSet{model::JointPower{1.0, 0.7}}, obj,
                                                 {}, 2);
        const double v = monotone::eval_objective(obj, sol.f, pi);
        CHECK(std::abs(v - v_perfect) < 1e-6);
    }
}

TEST_CASE("general eigenvalue caps are modeled but rejected by solvers") {
    Rng rng(4999);
    const CMat h = random_complex(3, 3, rng);
    model::Scenario s;
    s.regime = model::PerfectCsi{h};
    s.noise_var = 0.5;
    s.streams = 2;
    RVec taus(2);
    taus << 0.8, 0.5;
    s.constraints = model::EigenCaps{taus};
    s.objective = mse_obj(2);
    CHECK_NOTHROW(model::validate_scenario(s));
    CHECK_THROWS_AS(robust::design_scenario(s), Unsupported);

    // the single max-eigenvalue cap is solved
    s.constraints = model::EigenCaps{RVec::Constant(1, 0.8)};
    const auto sol = robust::design_scenario(s);
    CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
}

TEST_CASE("design_scenario end to end for each regime") {
    Rng rng(491);
    const Eigen::Index n = 4;
    model::Scenario s;
    s.noise_var = 0.25;
    s.streams = 2;
    s.constraints = model::PerAntenna{RVec::Constant(n, 1.0)};
    s.objective = mse_obj(2);

    SUBCASE("perfect") {
        s.regime = model::PerfectCsi{random_complex(n, n, rng)};
        const auto sol = robust::design_scenario(s);
        CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
    }
    SUBCASE("bayes") {
        s.regime = model::BayesCsi{random_complex(n, n, rng), exp_psi(n, 0.1)};
        const auto sol = robust::design_scenario(s);
        CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
    }
    SUBCASE("stochastic") {
        s.regime = model::StochasticCsi{random_complex(n, n, rng),
                                        HermitianPsd::trusted(CMat::Identity(n, n)),
                                        exp_psi(n, 0.1)};
        const auto sol = robust::design_scenario(s);
        CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
    }
    SUBCASE("worst case needs the flag for per-antenna") {
        s.regime = model::WorstCaseCsi{random_complex(n, n, rng), 0.3};
        CHECK_THROWS_AS(robust::design_scenario(s), Unsupported);
        const auto sol = robust::design_scenario(s, {}, true);
        CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
        CHECK(sol.diagnostics.upper_bound_only);
    }
    SUBCASE("worst case with joint constraints") {
        s.regime = model::WorstCaseCsi{random_complex(n, n, rng), 0.3};
        s.constraints = model::JointPower{1.0, 1.0};
        const auto sol = robust::design_scenario(s);
        CHECK(model::constraint_satisfied(s.constraints, sol.x()).ok);
        CHECK_FALSE(sol.diagnostics.upper_bound_only);
    }
}

} // TEST_SUITE
