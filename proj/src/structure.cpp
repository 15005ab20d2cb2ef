#include "matmono/structure.hpp"

#include <algorithm>
#include <cmath>

#include "matmono/monotone.hpp"

namespace matmono::structure {

using linalg::EigenOrder;
using linalg::evd_sorted;
using linalg::pinv_sqrt;
using linalg::SortedEigen;
using linalg::svd_sorted;

namespace {

constexpr double kZeroGainRel = 1e-12;  // streams below this fraction of the top gain get nothing
constexpr double kSumTol = 1e-10;       // budget match tolerance
constexpr double kAlphaFloor = 1e-8;    // keeps the aggregate weight invertible mid-iteration
constexpr double kFeasRelTol = 1e-6;    // relative constraint violation accepted at convergence

double cap_at(const RVec& caps, Eigen::Index i) {
    if (caps.size() == 0) return std::numeric_limits<double>::infinity();
    return caps(i);
}

// Per-stream power at a given level, for the two closed forms.
double closed_form_power(AllocatorKind kind, double gain, double level, double cap) {
    double p = 0.0;
    if (kind == AllocatorKind::Capacity) {
        p = level - 1.0 / gain;
    } else {
        const double rt = std::sqrt(gain);
        p = level / rt - 1.0 / gain;
    }
    return std::clamp(p, 0.0, cap);
}

// Generic: g'(p) = -mu on [0, pmax], g' increasing.
double generic_power(const GenericAllocator& g, Eigen::Index i, double mu, double pmax) {
    if (g.dcost(i, pmax) <= -mu) return pmax;
    if (g.dcost(i, 0.0) >= -mu) return 0.0;
    double lo = 0.0, hi = pmax;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g.dcost(i, mid) < -mu)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-14 * std::max(1.0, pmax)) break;
    }
    return 0.5 * (lo + hi);
}

// Marginal utility at power p (the quantity equalized across active streams).
double marginal(const AllocationProblem& prob, Eigen::Index i, double p) {
    const double gain = prob.gains(i);
    switch (prob.kind) {
        case AllocatorKind::Capacity:
            return 1.0 / (1.0 / gain + p);
        case AllocatorKind::MseTrace: {
            const double d = 1.0 + gain * p;
            return gain / (d * d);
        }
        case AllocatorKind::Generic:
            return -prob.generic.dcost(i, p);
    }
    return 0.0;
}

} // namespace

WaterfillResult waterfill(const AllocationProblem& prob) {
    const Eigen::Index n = prob.gains.size();
    if (n < 1) throw InvalidInput("waterfill: empty gain vector");
    if (!(prob.budget > 0.0)) throw InvalidInput("waterfill: budget must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(prob.gains(i) >= 0.0) || !std::isfinite(prob.gains(i)))
            throw InvalidInput("waterfill: gains must be finite and nonnegative");
        // tolerance matches the decomposition tie window
        if (i > 0 && prob.gains(i) > prob.gains(i - 1) + 1e-9 * std::max(1.0, prob.gains(0)))
            throw InvalidInput("waterfill: gains must be descending");
    }
    if (prob.caps.size() != 0) {
        if (prob.caps.size() != n) throw InvalidInput("waterfill: cap count mismatch");
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(prob.caps(i) > 0.0)) throw InvalidInput("waterfill: caps must be positive");
    }
    if (prob.kind == AllocatorKind::Generic) {
        if (!prob.generic.cost || !prob.generic.dcost)
            throw InvalidInput("waterfill: generic allocator requires cost and derivative");
        // Decreasing and convex on a coarse probe grid.
        const double pmax = prob.budget;
        for (Eigen::Index i = 0; i < n; ++i) {
            double prev = -std::numeric_limits<double>::infinity();
            for (int k = 1; k <= 5; ++k) {
                const double p = pmax * static_cast<double>(k) / 5.0;
                const double d = prob.generic.dcost(i, p);
                if (d > 1e-9)
                    throw InvalidInput("waterfill: generic cost is not decreasing on the probe grid");
                if (d < prev - 1e-9 * std::max(1.0, std::abs(prev)))
                    throw InvalidInput("waterfill: generic derivative is not increasing (cost not convex)");
                prev = d;
            }
        }
    }

    const double gmax = prob.gains(0);
    std::vector<bool> active(static_cast<size_t>(n));
    double cap_sum = 0.0;
    Eigen::Index n_active = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        active[static_cast<size_t>(i)] = prob.gains(i) > kZeroGainRel * std::max(gmax, 1e-300);
        if (active[static_cast<size_t>(i)]) {
            ++n_active;
            cap_sum += cap_at(prob.caps, i);
        }
    }
    WaterfillResult out;
    out.powers = RVec::Zero(n);
    if (n_active == 0) return out;

    const double target = std::min(prob.budget, cap_sum);
    auto sum_at = [&](double level) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!active[static_cast<size_t>(i)]) continue;
            const double cap = std::min(cap_at(prob.caps, i), target);
            s += prob.kind == AllocatorKind::Generic
                     ? generic_power(prob.generic, i, level, cap)
                     : closed_form_power(prob.kind, prob.gains(i), level, cap);
        }
        return s;
    };

    double lo = 0.0, hi = 1.0;
    if (prob.kind == AllocatorKind::Generic) {
        // Sum decreases with the dual variable; expand until it under-shoots.
        while (sum_at(hi) > target && hi < 1e300) hi *= 2.0;
    } else {
        // Sum increases with the water level; expand until it over-shoots.
        while (sum_at(hi) < target && hi < 1e300) hi *= 2.0;
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = sum_at(mid);
        const bool go_up = prob.kind == AllocatorKind::Generic ? (s > target) : (s < target);
        if (go_up)
            lo = mid;
        else
            hi = mid;
        if (std::abs(s - target) <= kSumTol * std::max(1.0, target) &&
            hi - lo <= 1e-12 * std::max(1.0, hi))
            break;
    }
    const double level = 0.5 * (lo + hi);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!active[static_cast<size_t>(i)]) continue;
        const double cap = std::min(cap_at(prob.caps, i), target);
        out.powers(i) = prob.kind == AllocatorKind::Generic
                            ? generic_power(prob.generic, i, level, cap)
                            : closed_form_power(prob.kind, prob.gains(i), level, cap);
    }
    out.mu = level;

    // Complementary-slackness residual: active streams share one marginal,
    // inactive sit below it, capped sit above it, and the budget matches.
    const double m_star = prob.kind == AllocatorKind::Capacity ? 1.0 / level
                          : prob.kind == AllocatorKind::MseTrace ? 1.0 / (level * level)
                                                                 : level;
    double resid = std::abs(out.powers.sum() - target) / std::max(1.0, target);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!active[static_cast<size_t>(i)]) continue;
        const double cap = std::min(cap_at(prob.caps, i), target);
        const double m = marginal(prob, i, out.powers(i));
        const double denom = std::max(1.0, std::abs(m_star));
        if (out.powers(i) <= 1e-12 * target) {
            resid = std::max(resid, (m - m_star) / denom);
        } else if (out.powers(i) >= cap - 1e-12 * target) {
            resid = std::max(resid, (m_star - m) / denom);
        } else {
            resid = std::max(resid, std::abs(m - m_star) / denom);
        }
    }
    out.kkt_residual = std::max(0.0, resid);
    return out;
}

namespace {

RVec ascending_eigs(const HermitianPsd& m) {
    return evd_sorted(m, EigenOrder::Ascending).eigenvalues;
}

RVec padded_weights(const CMat& a, Eigen::Index l) {
    const RVec s = svd_sorted(a).singulars;
    RVec w = RVec::Zero(l);
    for (Eigen::Index i = 0; i < std::min(l, s.size()); ++i) w(i) = s(i) * s(i);
    return w;
}

bool roughly_scalar(const RVec& v) {
    if (v.size() == 0) return true;
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    return (v.array() - v(0)).abs().maxCoeff() <= 1e-12 * scale;
}

} // namespace

AllocationProblem make_allocation(const Objective& obj, const RVec& gains, double budget,
                                  const RVec& caps, const GenericAllocator* custom) {
    AllocationProblem prob;
    prob.gains = gains;
    prob.budget = budget;
    prob.caps = caps;
    const Eigen::Index l = gains.size();
    if (custom) {
        prob.kind = AllocatorKind::Generic;
        prob.generic = *custom;
        return prob;
    }

    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, model::MutualInfo> || std::is_same_v<T, model::MseTrace>) {
                const RVec off = ascending_eigs(o.phi);
                if (off.size() != l) throw InvalidInput("make_allocation: phi dimension mismatch");
                if (roughly_scalar(off) && off(0) > 0.0) {
                    prob.kind = std::is_same_v<T, model::MutualInfo> ? AllocatorKind::Capacity
                                                                     : AllocatorKind::MseTrace;
                    prob.gains = gains / off(0);
                } else {
                    prob.kind = AllocatorKind::Generic;
                    const bool logdet = std::is_same_v<T, model::MutualInfo>;
                    prob.generic.cost = [gains, off, logdet](Eigen::Index i, double p) {
                        const double v = gains(i) * p + off(i);
                        return logdet ? -std::log(v) : 1.0 / v;
                    };
                    prob.generic.dcost = [gains, off, logdet](Eigen::Index i, double p) {
                        const double v = gains(i) * p + off(i);
                        return logdet ? -gains(i) / v : -gains(i) / (v * v);
                    };
                }
            } else if constexpr (std::is_same_v<T, model::RelayMse>) {
                const RVec w = padded_weights(o.a, l);
                const double alpha = o.alpha;
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, w, alpha](Eigen::Index i, double p) {
                    return w(i) / (gains(i) * p + alpha);
                };
                prob.generic.dcost = [gains, w, alpha](Eigen::Index i, double p) {
                    const double v = gains(i) * p + alpha;
                    return -w(i) * gains(i) / (v * v);
                };
            } else if constexpr (std::is_same_v<T, model::RelayMutualInfo>) {
                const CMat apa = o.a * (Eigen::LLT<CMat>(o.phi.mat())
                                            .solve(CMat::Identity(o.phi.dim(), o.phi.dim()))) *
                                 o.a.adjoint();
                RVec kap =
                    evd_sorted(HermitianPsd::trusted(apa), EigenOrder::Descending).eigenvalues;
                if (kap.size() != l) throw InvalidInput("make_allocation: A dimension mismatch");
                const double alpha = o.alpha;
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, kap, alpha](Eigen::Index i, double p) {
                    const double v = gains(i) * p + alpha;
                    return std::log1p(kap(i) / v);
                };
                prob.generic.dcost = [gains, kap, alpha](Eigen::Index i, double p) {
                    const double v = gains(i) * p + alpha;
                    return gains(i) / (v + kap(i)) - gains(i) / v;
                };
            } else if constexpr (std::is_same_v<T, model::DirectMutualInfo>) {
                const CMat apa = o.a * (Eigen::LLT<CMat>(o.phi.mat())
                                            .solve(CMat::Identity(o.phi.dim(), o.phi.dim()))) *
                                 o.a.adjoint();
                RVec kap =
                    evd_sorted(HermitianPsd::trusted(apa), EigenOrder::Descending).eigenvalues;
                if (kap.size() != l) throw InvalidInput("make_allocation: A dimension mismatch");
                prob.kind = AllocatorKind::Capacity;
                prob.gains = gains.cwiseProduct(kap);
            } else if constexpr (std::is_same_v<T, model::DirectMse>) {
                const RVec w = padded_weights(o.a, l).reverse(); // reversed pairing, see optimal_qx
                const double alpha = o.alpha;
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, w, alpha](Eigen::Index i, double p) {
                    return 1.0 / (w(i) * gains(i) * p + alpha);
                };
                prob.generic.dcost = [gains, w, alpha](Eigen::Index i, double p) {
                    const double v = w(i) * gains(i) * p + alpha;
                    return -w(i) * gains(i) / (v * v);
                };
            } else if constexpr (std::is_same_v<T, model::WeightedMse>) {
                const RVec w = padded_weights(o.a, l);
                const RVec off = ascending_eigs(o.phi);
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, w, off](Eigen::Index i, double p) {
                    return w(i) / (gains(i) * p + off(i));
                };
                prob.generic.dcost = [gains, w, off](Eigen::Index i, double p) {
                    const double v = gains(i) * p + off(i);
                    return -w(i) * gains(i) / (v * v);
                };
            } else if constexpr (std::is_same_v<T, model::KronMutualInfo> ||
                                 std::is_same_v<T, model::KronMse>) {
                const monotone::JointEigen je = monotone::joint_evd(o.sigma1, o.sigma2);
                const RVec off = ascending_eigs(o.phi);
                if (off.size() != l) throw InvalidInput("make_allocation: phi dimension mismatch");
                const RVec m1 = je.lam_a, m2 = je.lam_b;
                const bool logdet = std::is_same_v<T, model::KronMutualInfo>;
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, off, m1, m2, logdet](Eigen::Index i, double p) {
                    double s = 0.0;
                    for (Eigen::Index j = 0; j < m1.size(); ++j) {
                        const double v = m2(j) * gains(i) * p + m1(j) * off(i);
                        if (m2(j) <= 0.0) continue;
                        s += logdet ? -std::log(std::max(v, 1e-300)) : 1.0 / std::max(v, 1e-300);
                    }
                    return s;
                };
                prob.generic.dcost = [gains, off, m1, m2, logdet](Eigen::Index i, double p) {
                    double s = 0.0;
                    for (Eigen::Index j = 0; j < m1.size(); ++j) {
                        if (m2(j) <= 0.0) continue;
                        const double v = m2(j) * gains(i) * p + m1(j) * off(i);
                        const double num = m2(j) * gains(i);
                        s += logdet ? -num / std::max(v, 1e-300)
                                    : -num / std::max(v * v, 1e-300);
                    }
                    return s;
                };
            } else if constexpr (std::is_same_v<T, model::KronRelayMse>) {
                const monotone::JointEigen je = monotone::joint_evd(o.sigma1, o.sigma2);
                const RVec w = padded_weights(o.a, l);
                const RVec m1 = je.lam_a, m2 = je.lam_b;
                prob.kind = AllocatorKind::Generic;
                prob.generic.cost = [gains, w, m1, m2](Eigen::Index i, double p) {
                    double s = 0.0;
                    for (Eigen::Index j = 0; j < m1.size(); ++j)
                        s += m1(j) * w(i) / (1.0 + m2(j) * gains(i) * p);
                    return s;
                };
                prob.generic.dcost = [gains, w, m1, m2](Eigen::Index i, double p) {
                    double s = 0.0;
                    for (Eigen::Index j = 0; j < m1.size(); ++j) {
                        const double v = 1.0 + m2(j) * gains(i) * p;
                        s += -m1(j) * w(i) * m2(j) * gains(i) / (v * v);
                    }
                    return s;
                };
            } else {
                throw Unsupported(
                    "make_allocation: Schur-function objectives need a caller-supplied "
                    "per-stream cost");
            }
        },
        obj);
    return prob;
}

PrecoderSolution solve_shaping(const HermitianPsd& pi, const HermitianPsd& rs, Eigen::Index cols) {
    const Eigen::Index n = rs.dim();
    if (cols == 0) cols = n;
    if (cols < 1 || cols > n) throw InvalidInput("solve_shaping: invalid column count");
    if (pi.dim() != n) throw InvalidInput("solve_shaping: dimension mismatch");

    const SortedEigen e = evd_sorted(rs, EigenOrder::Descending);
    Eigen::Index rank = 0;
    const double lmax = e.eigenvalues(0);
    for (Eigen::Index i = 0; i < n; ++i)
        if (e.eigenvalues(i) > linalg::default_tols().rank * std::max(lmax, 1e-300)) ++rank;
    if (rank > cols)
        throw Infeasible("solve_shaping: rank of the shaping matrix exceeds the stream count");

    PrecoderSolution sol;
    if (cols == n) {
        sol.f = linalg::herm_sqrt(rs).mat();
    } else {
        sol.f = e.unitary.leftCols(cols) *
                e.eigenvalues.head(cols).cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    sol.qx = CMat::Identity(cols, cols);
    sol.rotation = e.unitary;
    sol.powers = e.eigenvalues.head(cols).cwiseMax(0.0);
    sol.weights = RVec();
    return sol;
}

PrecoderSolution solve_joint(const HermitianPsd& pi, double p, double tau, const Objective& obj,
                             Eigen::Index streams, const GenericAllocator* custom) {
    if (!(p > 0.0) || !(tau > 0.0)) throw InvalidInput("solve_joint: thresholds must be positive");
    const Eigen::Index n = pi.dim();
    const Eigen::Index l = streams > 0 ? streams : n;
    if (l > n) throw InvalidInput("solve_joint: more streams than dimensions");

    const SortedEigen e = evd_sorted(pi, EigenOrder::Descending);
    AllocationProblem prob =
        make_allocation(obj, e.eigenvalues.head(l), p, RVec::Constant(l, tau), custom);
    const WaterfillResult wf = waterfill(prob);

    PrecoderSolution sol;
    sol.f = e.unitary.leftCols(l) * wf.powers.cwiseSqrt().asDiagonal();
    sol.qx = CMat::Identity(l, l);
    sol.rotation = e.unitary;
    sol.powers = wf.powers;
    sol.diagnostics.water_level = wf.mu;
    sol.diagnostics.kkt_residual = wf.kkt_residual;
    return sol;
}

PrecoderSolution solve_weighted(const HermitianPsd& pi, const std::vector<HermitianPsd>& omegas,
                                const RVec& ps, const Objective& obj,
                                const SubgradientSchedule& sched, Eigen::Index streams,
                                const GenericAllocator* custom) {
    const Eigen::Index ni = static_cast<Eigen::Index>(omegas.size());
    if (ni < 1 || ps.size() != ni) throw InvalidInput("solve_weighted: weight/threshold mismatch");
    model::WeightedPower wp{omegas, ps};
    model::validate_constraints(model::ConstraintSet{wp});
    const Eigen::Index n = pi.dim();
    const Eigen::Index l = streams > 0 ? streams : n;
    if (l > n) throw InvalidInput("solve_weighted: more streams than dimensions");

    RVec eps = sched.eps;
    if (eps.size() == 0) eps = 1e-4 * ps;
    if (eps.size() != ni) throw InvalidInput("solve_weighted: eps length mismatch");

    RVec alpha = RVec::Ones(ni);
    PrecoderSolution best;
    double best_score = std::numeric_limits<double>::infinity();
    bool converged = false;
    int it = 0;

    for (; it < sched.max_iter; ++it) {
        RVec alpha_eff = alpha.cwiseMax(kAlphaFloor);
        CMat omega = CMat::Zero(n, n);
        for (Eigen::Index i = 0; i < ni; ++i) omega += alpha_eff(i) * omegas[static_cast<size_t>(i)].mat();
        const double budget = alpha_eff.dot(ps);

        const CMat w = pinv_sqrt(HermitianPsd::trusted(omega)).mat();
        const CMat whitened = w * pi.mat() * w;
        const SortedEigen e = evd_sorted(HermitianPsd::trusted(whitened), EigenOrder::Descending);

        AllocationProblem prob = make_allocation(obj, e.eigenvalues.head(l), budget, RVec(), custom);
        const WaterfillResult wf = waterfill(prob);

        PrecoderSolution sol;
        sol.rotation = w * e.unitary;
        sol.f = sol.rotation.leftCols(l) * wf.powers.cwiseSqrt().asDiagonal();
        sol.qx = CMat::Identity(l, l);
        sol.powers = wf.powers;
        sol.weights = alpha;
        sol.diagnostics.water_level = wf.mu;
        sol.diagnostics.kkt_residual = wf.kkt_residual;

        const CMat ffh = sol.f * sol.f.adjoint();
        RVec viol(ni);
        for (Eigen::Index i = 0; i < ni; ++i)
            viol(i) = (omegas[static_cast<size_t>(i)].mat() * ffh).trace().real() - ps(i);

        double comp = 0.0, feas = 0.0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            comp = std::max(comp, alpha(i) * viol(i));
            feas = std::max(feas, viol(i) / std::max(1.0, ps(i)));
        }
        comp = std::max(0.0, comp);
        feas = std::max(0.0, feas);
        sol.diagnostics.comp_slack = comp;
        sol.diagnostics.feasibility = feas;
        sol.diagnostics.iterations = it + 1;

        double score = feas / kFeasRelTol;
        for (Eigen::Index i = 0; i < ni; ++i)
            score = std::max(score, std::max(0.0, alpha(i) * viol(i)) / eps(i));
        if (score < best_score) {
            best_score = score;
            best = sol;
        }
        if (score <= 1.0) {
            best = sol;
            converged = true;
            break;
        }

        const double t = sched.c / (sched.a + static_cast<double>(it) * sched.b);
        for (Eigen::Index i = 0; i < ni; ++i) {
            // Damped projection: the weight may at most halve or double (+0.1)
            // per step, which keeps the fixed points but avoids the collapse
            // to an exactly-singular aggregate after one aggressive step.
            const double raw = alpha(i) + t * viol(i);
            alpha(i) = std::clamp(raw, 0.5 * alpha(i), 2.0 * alpha(i) + 0.1);
        }
    }

    best.diagnostics.converged = converged;
    best.diagnostics.iterations = converged ? it + 1 : sched.max_iter;

    // Strict feasibility polish: shrink to the boundary when a hair over.
    double scale = 1.0;
    const CMat ffh = best.f * best.f.adjoint();
    for (Eigen::Index i = 0; i < ni; ++i) {
        const double att = (omegas[static_cast<size_t>(i)].mat() * ffh).trace().real();
        if (att > ps(i)) scale = std::min(scale, std::sqrt(ps(i) / att));
    }
    if (scale < 1.0) {
        best.f *= scale;
        best.powers *= scale * scale;
    }
    return best;
}

PrecoderSolution& assemble(PrecoderSolution& sol, const Objective& obj, const HermitianPsd& pi) {
    const monotone::QxResult q = monotone::optimal_qx(obj, sol.f, pi);
    sol.qx = q.q;
    sol.diagnostics.high_snr_approx = sol.diagnostics.high_snr_approx || q.high_snr_approx;
    return sol;
}

} // namespace matmono::structure
