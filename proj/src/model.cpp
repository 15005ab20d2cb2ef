#include "matmono/model.hpp"

#include <cmath>

namespace matmono::model {

using linalg::all_finite;
using linalg::EigenOrder;
using linalg::evd_sorted;
using linalg::max_abs;

namespace {

constexpr double kSlackTol = 1e-8; // absolute-relative hybrid feasibility slack

double real_trace(const CMat& m) { return m.trace().real(); }

void require(bool cond, const char* msg) {
    if (!cond) throw InvalidInput(msg);
}

} // namespace

bool probe_increasing(const ScalarVectorFn& f, Eigen::Index dim, std::uint64_t seed) {
    Rng rng(seed);
    for (int t = 0; t < 100; ++t) {
        RVec x(dim);
        for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.uniform(0.1, 3.0);
        const Eigen::Index k = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(dim));
        RVec y = x;
        y(k) += rng.uniform(0.01, 1.0);
        if (f.fn(y) < f.fn(x) - 1e-12) return false;
    }
    return true;
}

namespace {

void check_shared_basis(const HermitianPsd& s1, const HermitianPsd& s2) {
    require(s1.dim() == s2.dim(), "objective: Kronecker pair dimension mismatch");
    const CMat comm = s1.mat() * s2.mat() - s2.mat() * s1.mat();
    const double scale = std::max(1.0, max_abs(s1.mat()) * max_abs(s2.mat()));
    require(max_abs(comm) <= 1e-8 * scale,
            "objective: Kronecker pair must share an eigenbasis (commutator too large)");
}

void check_pd(const HermitianPsd& m, const char* msg) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m.mat(), Eigen::EigenvaluesOnly);
    require(es.eigenvalues()(0) > 0.0, msg);
}

void check_schur(const ScalarVectorFn& f, std::uint64_t seed) {
    require(static_cast<bool>(f.fn), "objective: Schur function handle is empty");
    require(f.declared_increasing, "objective: Schur function must be declared increasing");
    require(probe_increasing(f, 3, seed), "objective: Schur function failed the monotonicity probe");
}

} // namespace

void validate_objective(const Objective& obj, std::uint64_t probe_seed) {
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, MutualInfo> || std::is_same_v<T, MseTrace>) {
                require(o.phi.dim() >= 1, "objective: phi required");
            } else if constexpr (std::is_same_v<T, RelayMse>) {
                require(o.alpha >= 0.0, "objective: alpha must be >= 0");
                require(all_finite(o.a), "objective: non-finite A");
            } else if constexpr (std::is_same_v<T, RelayMutualInfo>) {
                require(o.alpha >= 0.0, "objective: alpha must be >= 0");
                check_pd(o.phi, "objective: phi must be positive definite where inverted");
            } else if constexpr (std::is_same_v<T, AddSchur> || std::is_same_v<T, MultSchur>) {
                require(o.alpha >= 0.0, "objective: alpha must be >= 0");
                check_schur(o.f, probe_seed);
            } else if constexpr (std::is_same_v<T, DirectMutualInfo>) {
                check_pd(o.phi, "objective: phi must be positive definite where inverted");
            } else if constexpr (std::is_same_v<T, DirectMse>) {
                require(o.alpha >= 0.0, "objective: alpha must be >= 0");
            } else if constexpr (std::is_same_v<T, WeightedMse>) {
                require(all_finite(o.a), "objective: non-finite A");
            } else if constexpr (std::is_same_v<T, KronMutualInfo> || std::is_same_v<T, KronMse>) {
                check_shared_basis(o.sigma1, o.sigma2);
            } else if constexpr (std::is_same_v<T, KronRelayMse>) {
                check_shared_basis(o.sigma1, o.sigma2);
                require(all_finite(o.a), "objective: non-finite A");
            }
        },
        obj);
}

void validate_constraints(const ConstraintSet& c) {
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SumPower>) {
                require(k.p > 0.0, "constraints: sum power threshold must be positive");
            } else if constexpr (std::is_same_v<T, PerAntenna>) {
                require(k.p.size() >= 1 && (k.p.array() > 0.0).all(),
                        "constraints: per-antenna thresholds must be positive");
            } else if constexpr (std::is_same_v<T, WeightedPower>) {
                require(!k.omegas.empty() && k.ps.size() == static_cast<Eigen::Index>(k.omegas.size()),
                        "constraints: weight/threshold count mismatch");
                require((k.ps.array() > 0.0).all(), "constraints: thresholds must be positive");
                const Eigen::Index n = k.omegas.front().dim();
                CMat sum = CMat::Zero(n, n);
                for (const auto& w : k.omegas) {
                    require(w.dim() == n, "constraints: weight dimension mismatch");
                    sum += w.mat();
                }
                Eigen::SelfAdjointEigenSolver<CMat> es(sum, Eigen::EigenvaluesOnly);
                require(es.eigenvalues()(0) > 0.0,
                        "constraints: no positive-definite aggregate weight exists");
            } else if constexpr (std::is_same_v<T, Shaping>) {
                require(k.rs.dim() >= 1, "constraints: shaping matrix required");
            } else if constexpr (std::is_same_v<T, EigenCaps>) {
                require(k.taus.size() >= 1 && (k.taus.array() > 0.0).all(),
                        "constraints: eigenvalue caps must be positive");
            } else if constexpr (std::is_same_v<T, JointPower>) {
                require(k.p > 0.0 && k.tau > 0.0, "constraints: joint thresholds must be positive");
            } else if constexpr (std::is_same_v<T, Cognitive>) {
                require(k.tauc > 0.0, "constraints: interference threshold must be positive");
                require(all_finite(k.hc), "constraints: non-finite interference channel");
            }
        },
        c);
}

WeightedPower to_weighted(const ConstraintSet& c) {
    return std::visit(
        [&](const auto& k) -> WeightedPower {
            using T = std::decay_t<decltype(k)>;
            WeightedPower w;
            if constexpr (std::is_same_v<T, SumPower>) {
                throw InvalidInput("to_weighted: dimension unknown for a sum-power constraint; "
                                   "use to_weighted(c, n)");
            } else if constexpr (std::is_same_v<T, PerAntenna>) {
                const Eigen::Index n = k.p.size();
                for (Eigen::Index i = 0; i < n; ++i) {
                    CMat e = CMat::Zero(n, n);
                    e(i, i) = 1.0;
                    w.omegas.push_back(HermitianPsd::trusted(e));
                }
                w.ps = k.p;
            } else if constexpr (std::is_same_v<T, WeightedPower>) {
                w = k;
            } else if constexpr (std::is_same_v<T, Cognitive>) {
                w.omegas.push_back(HermitianPsd::trusted(k.hc.adjoint() * k.hc));
                w.ps = RVec::Constant(1, k.tauc);
            } else {
                throw Unsupported("to_weighted: constraint has no weighted-trace reduction");
            }
            return w;
        },
        c);
}

WeightedPower to_weighted(const ConstraintSet& c, Eigen::Index n) {
    if (const auto* sp = std::get_if<SumPower>(&c)) {
        WeightedPower w;
        w.omegas.push_back(HermitianPsd::trusted(CMat::Identity(n, n)));
        w.ps = RVec::Constant(1, sp->p);
        return w;
    }
    return to_weighted(c);
}

ConstraintCheck constraint_satisfied(const ConstraintSet& c, const CMat& x) {
    if (!all_finite(x)) throw InvalidInput("constraint_satisfied: non-finite X");
    return std::visit(
        [&](const auto& k) -> ConstraintCheck {
            using T = std::decay_t<decltype(k)>;
            ConstraintCheck out;
            auto finish = [&](double threshold_scale) {
                out.ok = (out.slack.array() >= -kSlackTol * std::max(1.0, threshold_scale)).all();
            };
            if constexpr (std::is_same_v<T, SumPower>) {
                out.slack = RVec::Constant(1, k.p - x.squaredNorm());
                finish(k.p);
            } else if constexpr (std::is_same_v<T, PerAntenna>) {
                if (x.rows() != k.p.size())
                    throw InvalidInput("constraint_satisfied: per-antenna dimension mismatch");
                out.slack.resize(k.p.size());
                for (Eigen::Index i = 0; i < k.p.size(); ++i)
                    out.slack(i) = k.p(i) - x.row(i).squaredNorm();
                finish(k.p.maxCoeff());
            } else if constexpr (std::is_same_v<T, WeightedPower>) {
                const CMat xxh = x * x.adjoint();
                out.slack.resize(k.ps.size());
                for (size_t i = 0; i < k.omegas.size(); ++i) {
                    if (k.omegas[i].dim() != x.rows())
                        throw InvalidInput("constraint_satisfied: weight dimension mismatch");
                    out.slack(static_cast<Eigen::Index>(i)) =
                        k.ps(static_cast<Eigen::Index>(i)) -
                        real_trace(k.omegas[i].mat() * xxh);
                }
                finish(k.ps.maxCoeff());
            } else if constexpr (std::is_same_v<T, Shaping>) {
                if (k.rs.dim() != x.rows())
                    throw InvalidInput("constraint_satisfied: shaping dimension mismatch");
                const CMat gap = k.rs.mat() - x * x.adjoint();
                Eigen::SelfAdjointEigenSolver<CMat> es(gap, Eigen::EigenvaluesOnly);
                out.slack = RVec::Constant(1, es.eigenvalues()(0));
                Eigen::SelfAdjointEigenSolver<CMat> rs(k.rs.mat(), Eigen::EigenvaluesOnly);
                finish(rs.eigenvalues()(k.rs.dim() - 1));
            } else if constexpr (std::is_same_v<T, EigenCaps>) {
                if (k.taus.size() > x.rows())
                    throw InvalidInput("constraint_satisfied: more caps than eigenvalues");
                Eigen::SelfAdjointEigenSolver<CMat> es(CMat(x * x.adjoint()), Eigen::EigenvaluesOnly);
                RVec lam = es.eigenvalues().reverse(); // descending
                out.slack.resize(k.taus.size());
                for (Eigen::Index i = 0; i < k.taus.size(); ++i) out.slack(i) = k.taus(i) - lam(i);
                finish(k.taus.maxCoeff());
            } else if constexpr (std::is_same_v<T, JointPower>) {
                Eigen::SelfAdjointEigenSolver<CMat> es(CMat(x * x.adjoint()), Eigen::EigenvaluesOnly);
                out.slack.resize(2);
                out.slack(0) = k.p - x.squaredNorm();
                out.slack(1) = k.tau - es.eigenvalues()(x.rows() - 1);
                finish(std::max(k.p, k.tau));
            } else if constexpr (std::is_same_v<T, Cognitive>) {
                if (k.hc.cols() != x.rows())
                    throw InvalidInput("constraint_satisfied: cognitive dimension mismatch");
                out.slack = RVec::Constant(1, k.tauc - (k.hc * x).squaredNorm());
                finish(k.tauc);
            }
            return out;
        },
        c);
}

namespace {

bool invariance_check(const ConstraintFn& psi, const CMat& x, int trials, std::uint64_t seed,
                      bool right) {
    if (trials < 1) throw InvalidInput("invariance check: trials must be >= 1");
    const ConstraintCheck base = psi(x);
    Rng rng(seed);
    const Eigen::Index n = right ? x.cols() : x.rows();
    for (int t = 0; t < trials; ++t) {
        const CMat q = linalg::random_unitary(n, rng);
        const ConstraintCheck rot = psi(right ? CMat(x * q) : CMat(q * x));
        if (rot.ok != base.ok) return false;
        if (rot.slack.size() != base.slack.size()) return false;
        if ((rot.slack - base.slack).cwiseAbs().maxCoeff() >
            1e-9 * std::max(1.0, base.slack.cwiseAbs().maxCoeff()))
            return false;
    }
    return true;
}

} // namespace

bool right_unitary_invariance_check(const ConstraintFn& psi, const CMat& x, int trials,
                                    std::uint64_t seed) {
    return invariance_check(psi, x, trials, seed, true);
}

bool right_unitary_invariance_check(const ConstraintSet& c, const CMat& x, int trials,
                                    std::uint64_t seed) {
    return invariance_check([&](const CMat& y) { return constraint_satisfied(c, y); }, x, trials,
                            seed, true);
}

bool left_unitary_invariance_check(const ConstraintFn& psi, const CMat& x, int trials,
                                   std::uint64_t seed) {
    return invariance_check(psi, x, trials, seed, false);
}

bool left_unitary_invariance_check(const ConstraintSet& c, const CMat& x, int trials,
                                   std::uint64_t seed) {
    return invariance_check([&](const CMat& y) { return constraint_satisfied(c, y); }, x, trials,
                            seed, false);
}

const CMat& scenario_channel_estimate(const Scenario& s) {
    return std::visit(
        [](const auto& r) -> const CMat& {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PerfectCsi>)
                return r.h;
            else
                return r.h_hat;
        },
        s.regime);
}

void validate_scenario(const Scenario& s) {
    require(s.noise_var > 0.0, "scenario: noise variance must be positive");
    const CMat& h = scenario_channel_estimate(s);
    require(h.rows() >= 1 && h.cols() >= 1 && all_finite(h), "scenario: invalid channel matrix");
    require(s.streams >= 1 && s.streams <= std::min(h.rows(), h.cols()),
            "scenario: streams must satisfy 1 <= L <= min(rows, cols)");
    if (const auto* wc = std::get_if<WorstCaseCsi>(&s.regime))
        require(wc->gamma >= 0.0, "scenario: gamma must be >= 0");
    if (const auto* bc = std::get_if<BayesCsi>(&s.regime))
        require(bc->psi.dim() == h.cols(), "scenario: psi dimension must match transmit side");
    if (const auto* sc = std::get_if<StochasticCsi>(&s.regime)) {
        require(sc->psi_col.dim() == h.cols(), "scenario: psi dimension must match transmit side");
        require(sc->sigma_row.dim() == h.rows(), "scenario: sigma dimension must match receive side");
    }
    validate_constraints(s.constraints);
    validate_objective(s.objective);
}

} // namespace matmono::model
