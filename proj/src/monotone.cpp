#include "matmono/monotone.hpp"

#include <algorithm>
#include <cmath>

namespace matmono::monotone {

using linalg::cholesky_lower;
using linalg::Cplx;
using linalg::EigenOrder;
using linalg::evd_sorted;
using linalg::kron;
using linalg::SortedEigen;
using linalg::svd_sorted;
using model::KronSide;
using model::SchurMode;

namespace {

constexpr Eigen::Index kKronCap = 4096;
constexpr Eigen::Index kKronFactorCap = 64;

RVec eigenvalues_of(const CMat& herm) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (herm + herm.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Sum of log-eigenvalues of a Hermitian matrix; throws when not PD.
double log_det_pd(const CMat& herm) {
    RVec ev = eigenvalues_of(herm);
    double s = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (!(ev(i) > 0.0)) throw SingularMatrix("log-determinant argument is not positive definite");
        s += std::log(ev(i));
    }
    return s;
}

CMat inverse_pd(const CMat& herm) {
    const CMat h = 0.5 * (herm + herm.adjoint());
    Eigen::LLT<CMat> llt(h);
    if (llt.info() != Eigen::Success) throw SingularMatrix("matrix inverse failed (not PD)");
    return llt.solve(CMat::Identity(h.rows(), h.cols()));
}

void kron_guard(Eigen::Index a, Eigen::Index b) {
    if (a > kKronFactorCap || b > kKronFactorCap || a * b > kKronCap)
        throw TooLarge("Kronecker operand dimensions exceed the desk-scale cap");
}

CMat gram(const CMat& x, const HermitianPsd& pi) {
    if (pi.dim() != x.rows()) throw InvalidInput("objective: X rows must match the dimension of P");
    const CMat s = x.adjoint() * pi.mat() * x;
    return 0.5 * (s + s.adjoint());
}

} // namespace

JointEigen joint_evd(const HermitianPsd& a, const HermitianPsd& b) {
    SortedEigen ea = evd_sorted(a, EigenOrder::Descending);
    const Eigen::Index n = a.dim();
    CMat u = ea.unitary;
    CMat b_in_basis = u.adjoint() * b.mat() * u;

    // Re-diagonalize b inside each eigenvalue tie group of a.
    const double scale = std::max(1.0, std::abs(ea.eigenvalues(0)));
    Eigen::Index g = 0;
    while (g < n) {
        Eigen::Index e = g + 1;
        while (e < n && std::abs(ea.eigenvalues(e) - ea.eigenvalues(e - 1)) <= 1e-9 * scale) ++e;
        if (e - g > 1) {
            const CMat sub = b_in_basis.block(g, g, e - g, e - g);
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (sub + sub.adjoint()));
            u.middleCols(g, e - g) = u.middleCols(g, e - g) * es.eigenvectors();
        }
        g = e;
    }
    b_in_basis = u.adjoint() * b.mat() * u;
    JointEigen out;
    out.unitary = std::move(u);
    out.lam_a = ea.eigenvalues;
    out.lam_b = b_in_basis.diagonal().real();
    return out;
}

InequalityReport check_inequality(int which, const HermitianPsd& c, const HermitianPsd& d) {
    if (which < 1 || which > 4) throw InvalidInput("check_inequality: which must be 1..4");
    if (c.dim() != d.dim()) throw InvalidInput("check_inequality: dimension mismatch");
    const Eigen::Index n = c.dim();
    const RVec lc = evd_sorted(c, EigenOrder::Descending).eigenvalues;
    const RVec ld = evd_sorted(d, EigenOrder::Descending).eigenvalues;

    InequalityReport rep;
    rep.which = which;
    switch (which) {
        case 1: {
            rep.value = (c.mat() * d.mat()).trace().real();
            double lo = 0.0, hi = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                lo += lc(n - 1 - i) * ld(i);
                hi += lc(i) * ld(i);
            }
            rep.lower = lo;
            rep.upper = hi;
            break;
        }
        case 2: {
            const CMat sum = c.mat() + d.mat();
            RVec ev = eigenvalues_of(sum);
            if (!(ev(0) > 0.0)) throw SingularMatrix("check_inequality: C + D is not PD");
            rep.value = inverse_pd(sum).trace().real();
            double lo = 0.0, hi = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                lo += 1.0 / (lc(n - 1 - i) + ld(i));
                hi += 1.0 / (lc(i) + ld(i));
            }
            rep.lower = lo;
            rep.upper = hi;
            break;
        }
        case 3: {
            RVec ev = eigenvalues_of(c.mat() + d.mat());
            double v = 1.0, lo = 1.0, hi = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                v *= ev(i);
                lo *= lc(i) + ld(i);
                hi *= lc(n - 1 - i) + ld(i);
            }
            rep.value = v;
            rep.lower = lo;
            rep.upper = hi;
            break;
        }
        case 4: {
            rep.value = (c.mat() * d.mat() + CMat::Identity(n, n)).determinant().real();
            double lo = 1.0, hi = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                lo *= lc(n - 1 - i) * ld(i) + 1.0;
                hi *= lc(i) * ld(i) + 1.0;
            }
            rep.lower = lo;
            rep.upper = hi;
            break;
        }
    }
    const double scale = std::max(1.0, std::abs(rep.value));
    rep.left_tight = std::abs(rep.value - rep.lower) <= 1e-9 * scale;
    rep.right_tight = std::abs(rep.value - rep.upper) <= 1e-9 * scale;
    return rep;
}

bool majorizes(const RVec& x, const RVec& y, MajorizeMode mode) {
    if (x.size() != y.size()) throw InvalidInput("majorizes: length mismatch");
    const Eigen::Index n = x.size();
    RVec xs = x, ys = y;
    std::sort(xs.data(), xs.data() + n, std::greater<double>());
    std::sort(ys.data(), ys.data() + n, std::greater<double>());

    const double tol = 1e-10;
    if (mode == MajorizeMode::Additive) {
        double px = 0.0, py = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            px += xs(k);
            py += ys(k);
            const double slack = tol * std::max({1.0, std::abs(px), std::abs(py)});
            if (k + 1 < n) {
                if (px > py + slack) return false;
            } else {
                if (std::abs(px - py) > slack) return false;
            }
        }
        return true;
    }
    for (Eigen::Index k = 0; k < n; ++k)
        if (!(xs(k) > 0.0) || !(ys(k) > 0.0))
            throw InvalidInput("majorizes: multiplicative mode requires positive entries");
    double px = 0.0, py = 0.0; // log domain
    for (Eigen::Index k = 0; k < n; ++k) {
        px += std::log(xs(k));
        py += std::log(ys(k));
        const double slack = tol * std::max({1.0, std::abs(px), std::abs(py)});
        if (k + 1 < n) {
            if (px > py + slack) return false;
        } else {
            if (std::abs(px - py) > slack) return false;
        }
    }
    return true;
}

double eval_objective(const Objective& obj, const CMat& x, const HermitianPsd& pi) {
    const CMat s = gram(x, pi);
    const Eigen::Index l = s.rows();
    const CMat il = CMat::Identity(l, l);

    return std::visit(
        [&](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, model::MutualInfo>) {
                return -log_det_pd(s + o.phi.mat());
            } else if constexpr (std::is_same_v<T, model::MseTrace>) {
                return inverse_pd(s + o.phi.mat()).trace().real();
            } else if constexpr (std::is_same_v<T, model::RelayMse>) {
                const CMat inv = inverse_pd(s + o.alpha * il);
                return (o.a.adjoint() * inv * o.a).trace().real();
            } else if constexpr (std::is_same_v<T, model::RelayMutualInfo>) {
                const CMat inv = inverse_pd(s + o.alpha * il);
                return log_det_pd(o.a.adjoint() * inv * o.a + o.phi.mat());
            } else if constexpr (std::is_same_v<T, model::AddSchur>) {
                const CMat inv = inverse_pd(s + o.alpha * il);
                return o.f.fn(inv.diagonal().real());
            } else if constexpr (std::is_same_v<T, model::MultSchur>) {
                const CMat inv = inverse_pd(s + o.alpha * il);
                const CMat lo = cholesky_lower(HermitianPsd::trusted(inv));
                return o.f.fn(lo.diagonal().cwiseAbs2().real());
            } else if constexpr (std::is_same_v<T, model::DirectMutualInfo>) {
                return -log_det_pd(o.a.adjoint() * s * o.a + o.phi.mat());
            } else if constexpr (std::is_same_v<T, model::DirectMse>) {
                const Eigen::Index m = o.a.cols();
                const CMat inner = o.a.adjoint() * s * o.a + o.alpha * CMat::Identity(m, m);
                return inverse_pd(inner).trace().real();
            } else if constexpr (std::is_same_v<T, model::WeightedMse>) {
                const CMat inv = inverse_pd(s + o.phi.mat());
                return (o.a.adjoint() * inv * o.a).trace().real();
            } else if constexpr (std::is_same_v<T, model::KronMutualInfo>) {
                kron_guard(l, o.sigma1.dim());
                const CMat m = o.side == KronSide::VarLeft
                                   ? kron(o.phi.mat(), o.sigma1.mat()) + kron(s, o.sigma2.mat())
                                   : kron(o.sigma1.mat(), o.phi.mat()) + kron(o.sigma2.mat(), s);
                return -log_det_pd(m);
            } else if constexpr (std::is_same_v<T, model::KronMse>) {
                kron_guard(l, o.sigma1.dim());
                const CMat m = o.side == KronSide::VarLeft
                                   ? kron(o.phi.mat(), o.sigma1.mat()) + kron(s, o.sigma2.mat())
                                   : kron(o.sigma1.mat(), o.phi.mat()) + kron(o.sigma2.mat(), s);
                return inverse_pd(m).trace().real();
            } else if constexpr (std::is_same_v<T, model::KronRelayMse>) {
                kron_guard(l, o.sigma1.dim());
                const CMat aah = o.a * o.a.adjoint();
                const Eigen::Index nk = l * o.sigma1.dim();
                const CMat ik = CMat::Identity(nk, nk);
                const CMat w = o.side == KronSide::VarLeft
                                   ? kron(aah, o.sigma1.mat())
                                   : kron(o.sigma1.mat(), aah);
                const CMat m = o.side == KronSide::VarLeft
                                   ? ik + kron(s, o.sigma2.mat())
                                   : ik + kron(o.sigma2.mat(), s);
                return (w * inverse_pd(m)).trace().real();
            }
        },
        obj);
}

QxResult optimal_qx(const Objective& obj, const CMat& f, const HermitianPsd& pi) {
    const CMat s = gram(f, pi);
    const SortedEigen se = evd_sorted(HermitianPsd::trusted(s), EigenOrder::Descending);
    const CMat& us = se.unitary;
    const Eigen::Index l = s.rows();

    return std::visit(
        [&](const auto& o) -> QxResult {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, model::MutualInfo> || std::is_same_v<T, model::MseTrace>) {
                const CMat ubar =
                    evd_sorted(o.phi, EigenOrder::Ascending).unitary;
                return {us * ubar.adjoint(), false};
            } else if constexpr (std::is_same_v<T, model::RelayMse>) {
                return {us * svd_sorted(o.a).left.adjoint(), false};
            } else if constexpr (std::is_same_v<T, model::RelayMutualInfo> ||
                                 std::is_same_v<T, model::DirectMutualInfo>) {
                const CMat apa = o.a * inverse_pd(o.phi.mat()) * o.a.adjoint();
                const CMat u =
                    evd_sorted(HermitianPsd::trusted(apa), EigenOrder::Descending).unitary;
                return {us * u.adjoint(), false};
            } else if constexpr (std::is_same_v<T, model::AddSchur>) {
                if (o.mode == SchurMode::Convex)
                    return {us * linalg::dft_matrix(l).adjoint(), false};
                return {us, false};
            } else if constexpr (std::is_same_v<T, model::MultSchur>) {
                if (o.mode == SchurMode::Concave) return {us, false};
                // Equalize the Cholesky diagonal of (Q^H S Q + alpha I)^{-1}:
                // with D = (Lambda + alpha I)^{-1}, the right GMD factor P of
                // D^{1/2} gives P^H D P = R^H R, an equal-diagonal factorization.
                RVec d(l);
                for (Eigen::Index i = 0; i < l; ++i) {
                    const double den = se.eigenvalues(i) + o.alpha;
                    if (!(den > 0.0))
                        throw SingularMatrix("optimal_qx: S + alpha I is singular");
                    d(i) = 1.0 / std::sqrt(den);
                }
                const linalg::GmdResult g = linalg::gmd(d);
                return {us * g.p, false};
            } else if constexpr (std::is_same_v<T, model::DirectMse>) {
                // A sits inside the inverse, so the high-SNR cost is a
                // multiplicatively Schur-convex function of the products
                // sigma_i^2(A) * lambda_j(S): reversed pairing balances them.
                const CMat ua = svd_sorted(o.a).left;
                CMat ua_rev(ua.rows(), ua.cols());
                for (Eigen::Index k = 0; k < ua.cols(); ++k)
                    ua_rev.col(k) = ua.col(ua.cols() - 1 - k);
                return {us * ua_rev.adjoint(), true};
            } else if constexpr (std::is_same_v<T, model::WeightedMse>) {
                return {us * svd_sorted(o.a).left.adjoint(), true};
            } else if constexpr (std::is_same_v<T, model::KronMutualInfo> ||
                                 std::is_same_v<T, model::KronMse>) {
                const CMat ubar = evd_sorted(o.phi, EigenOrder::Ascending).unitary;
                return {us * ubar.adjoint(), false};
            } else if constexpr (std::is_same_v<T, model::KronRelayMse>) {
                return {us * svd_sorted(o.a).left.adjoint(), false};
            }
        },
        obj);
}

} // namespace matmono::monotone
