#include "matmono/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace matmono::linalg {

const Tolerances& default_tols() {
    static const Tolerances tols{};
    return tols;
}

bool all_finite(const CMat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

double max_abs(const CMat& m) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) v = std::max(v, std::abs(m(i, j)));
    return v;
}

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

HermitianPsd::HermitianPsd(const CMat& m, const Tolerances& tol) {
    if (m.rows() < 1 || m.rows() != m.cols())
        throw InvalidInput("HermitianPsd: matrix must be square with dim >= 1");
    if (!all_finite(m)) throw InvalidInput("HermitianPsd: non-finite entries");
    const double scale = std::max(1.0, max_abs(m));
    const double asym = max_abs(m - m.adjoint());
    if (asym > tol.herm * scale)
        throw InvalidInput("HermitianPsd: matrix is not self-adjoint within tolerance");
    m_ = 0.5 * (m + m.adjoint().eval());
}

HermitianPsd HermitianPsd::trusted(const CMat& m) {
    HermitianPsd h;
    h.m_ = 0.5 * (m + m.adjoint().eval());
    return h;
}

namespace {

// Makes the first entry with modulus above the floor real and nonnegative.
// Returns the applied unit factor so callers can compensate a paired frame.
Cplx phase_normalize_column(Eigen::Ref<CVec> col, double floor) {
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        const double a = std::abs(col(i));
        if (a > floor) {
            const Cplx f = std::conj(col(i)) / a;
            col *= f;
            col(i) = Cplx(a, 0.0); // exact by convention
            return f;
        }
    }
    return Cplx(1.0, 0.0);
}

// Lexicographic comparison on (re, im) sequences of already-normalized columns.
bool lex_greater(const CVec& a, const CVec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i).real() != b(i).real()) return a(i).real() > b(i).real();
        if (a(i).imag() != b(i).imag()) return a(i).imag() > b(i).imag();
    }
    return false;
}

void check_psd_floor(const RVec& ascending_eigs, double floor_tol, const char* who) {
    const double lmax = ascending_eigs(ascending_eigs.size() - 1);
    const double scale = lmax > 0.0 ? lmax : 1.0;
    if (ascending_eigs(0) < -floor_tol * scale)
        throw InvalidInput(std::string(who) + ": matrix has an eigenvalue below the PSD floor");
}

} // namespace

SortedEigen evd_sorted(const HermitianPsd& m, EigenOrder order, const Tolerances& tol) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m.mat());
    if (es.info() != Eigen::Success) throw Error("evd_sorted: eigensolver failed");

    const Eigen::Index n = m.dim();
    RVec lam = es.eigenvalues(); // ascending
    check_psd_floor(lam, tol.psd_floor, "evd_sorted");
    CMat u = es.eigenvectors();

    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (order == EigenOrder::Descending) std::reverse(idx.begin(), idx.end());

    RVec lam_sorted(n);
    CMat u_sorted(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        lam_sorted(k) = std::max(0.0, lam(idx[static_cast<size_t>(k)]));
        u_sorted.col(k) = u.col(idx[static_cast<size_t>(k)]);
    }
    for (Eigen::Index k = 0; k < n; ++k) phase_normalize_column(u_sorted.col(k), tol.phase_floor);

    // Tie groups get a reproducible column order.
    const double scale = std::max(1.0, std::abs(lam_sorted(0)));
    Eigen::Index g = 0;
    while (g < n) {
        Eigen::Index e = g + 1;
        while (e < n && std::abs(lam_sorted(e) - lam_sorted(e - 1)) <= tol.tie * scale) ++e;
        if (e - g > 1) {
            std::vector<Eigen::Index> cols(static_cast<size_t>(e - g));
            std::iota(cols.begin(), cols.end(), g);
            std::sort(cols.begin(), cols.end(), [&](Eigen::Index a, Eigen::Index b) {
                return lex_greater(u_sorted.col(a), u_sorted.col(b));
            });
            CMat block(n, e - g);
            RVec lams(e - g);
            for (Eigen::Index k = 0; k < e - g; ++k) {
                block.col(k) = u_sorted.col(cols[static_cast<size_t>(k)]);
                lams(k) = lam_sorted(cols[static_cast<size_t>(k)]);
            }
            u_sorted.middleCols(g, e - g) = block;
            lam_sorted.segment(g, e - g) = lams;
        }
        g = e;
    }
    return SortedEigen{std::move(u_sorted), std::move(lam_sorted), order};
}

SortedSvd svd_sorted(const CMat& m, const Tolerances& tol) {
    if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("svd_sorted: empty matrix");
    if (!all_finite(m)) throw InvalidInput("svd_sorted: non-finite entries");

    const Eigen::Index r = m.rows(), c = m.cols(), k = std::min(r, c);
    if (max_abs(m) == 0.0)
        return SortedSvd{CMat::Identity(r, r), RVec::Zero(k), CMat::Identity(c, c)};

    Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    CMat u = svd.matrixU();
    CMat v = svd.matrixV();
    RVec s = svd.singularValues(); // descending

    for (Eigen::Index i = 0; i < k; ++i) {
        const Cplx f = phase_normalize_column(v.col(i), tol.phase_floor);
        u.col(i) *= f;
    }
    // Tie groups among the leading k triples.
    const double scale = std::max(1.0, s(0));
    Eigen::Index g = 0;
    while (g < k) {
        Eigen::Index e = g + 1;
        while (e < k && std::abs(s(e) - s(e - 1)) <= tol.tie * scale) ++e;
        if (e - g > 1) {
            std::vector<Eigen::Index> cols(static_cast<size_t>(e - g));
            std::iota(cols.begin(), cols.end(), g);
            std::sort(cols.begin(), cols.end(), [&](Eigen::Index a, Eigen::Index b) {
                return lex_greater(v.col(a), v.col(b));
            });
            CMat ub(r, e - g), vb(c, e - g);
            RVec sb(e - g);
            for (Eigen::Index t = 0; t < e - g; ++t) {
                ub.col(t) = u.col(cols[static_cast<size_t>(t)]);
                vb.col(t) = v.col(cols[static_cast<size_t>(t)]);
                sb(t) = s(cols[static_cast<size_t>(t)]);
            }
            u.middleCols(g, e - g) = ub;
            v.middleCols(g, e - g) = vb;
            s.segment(g, e - g) = sb;
        }
        g = e;
    }
    // Null-frame columns only need a deterministic phase.
    for (Eigen::Index i = k; i < r; ++i) phase_normalize_column(u.col(i), tol.phase_floor);
    for (Eigen::Index i = k; i < c; ++i) phase_normalize_column(v.col(i), tol.phase_floor);

    return SortedSvd{std::move(u), std::move(s), std::move(v)};
}

HermitianPsd herm_sqrt(const HermitianPsd& m, const Tolerances& tol) {
    SortedEigen e = evd_sorted(m, EigenOrder::Descending, tol);
    RVec rt = e.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    return HermitianPsd::trusted(e.unitary * rt.asDiagonal() * e.unitary.adjoint());
}

HermitianPsd pinv_sqrt(const HermitianPsd& m, double rank_tol, const Tolerances& tol) {
    SortedEigen e = evd_sorted(m, EigenOrder::Descending, tol);
    const double lmax = e.eigenvalues(0);
    RVec d(e.eigenvalues.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double lam = e.eigenvalues(i);
        d(i) = (lam <= rank_tol * lmax || lam <= 0.0) ? 0.0 : 1.0 / std::sqrt(lam);
    }
    return HermitianPsd::trusted(e.unitary * d.asDiagonal() * e.unitary.adjoint());
}

namespace {

// Singular values of the 2x2 upper-triangular block [[a, b], [0, c]].
void block_singulars(double a, double b, double c, double& smin, double& smax) {
    const double f = a * a + b * b + c * c;
    const double d = a * c;
    const double disc = std::sqrt(std::max(0.0, f * f - 4.0 * d * d));
    const double s2max = 0.5 * (f + disc);
    smax = std::sqrt(s2max);
    smin = s2max > 0.0 ? std::abs(d) / smax : 0.0;
}

} // namespace

GmdResult gmd(const RVec& singulars, const Tolerances& tol) {
    const Eigen::Index n = singulars.size();
    if (n < 1) throw InvalidInput("gmd: empty vector");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(singulars(i) > 0.0)) throw InvalidInput("gmd: singular values must be positive");

    RMat r = RMat::Zero(n, n);
    r.diagonal() = singulars;
    RMat q = RMat::Identity(n, n);
    RMat p = RMat::Identity(n, n);

    double logsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logsum += std::log(singulars(i));
    const double gbar = std::exp(logsum / static_cast<double>(n));
    const double stop = tol.gmd_stop * std::max(1.0, gbar);

    const int max_sweeps = 500;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double dev = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) dev = std::max(dev, std::abs(r(i, i) - gbar));
        if (dev <= stop) break;

        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double a = r(i, i), b = r(i, i + 1), c = r(i + 1, i + 1);
            double smin, smax;
            block_singulars(a, b, c, smin, smax);
            // Pull the leading diagonal entry as close to the global geometric
            // mean as this block allows; det(block) = a*c is preserved.
            const double t = std::clamp(gbar, smin, smax);
            if (std::abs(a - t) <= 1e-16 * std::max(1.0, t) && std::abs(b) <= 1e-16) continue;

            // Solve (a*cos + b*sin)^2 + (c*sin)^2 = t^2.  In double-angle form:
            // P*cos(2theta) + Q*sin(2theta) = rhs, always solvable for
            // t inside [smin, smax].
            const double P = 0.5 * (a * a - b * b - c * c);
            const double Q = a * b;
            const double rhs = t * t - 0.5 * (a * a + b * b + c * c);
            const double R = std::hypot(P, Q);
            if (R < 1e-300) continue;
            const double phi = std::atan2(Q, P);
            const double delta = std::acos(std::clamp(rhs / R, -1.0, 1.0));
            const double th1 = 0.5 * (phi + delta);
            const double th2 = 0.5 * (phi - delta);
            const double theta = std::abs(th1) <= std::abs(th2) ? th1 : th2;
            const double ct = std::cos(theta);
            const double st = std::sin(theta);

            // v1 = block * (ct, st) has norm t by construction.
            const double v1x = a * ct + b * st;
            const double v1y = c * st;
            const double nv = std::hypot(v1x, v1y);
            const double u1x = v1x / nv, u1y = v1y / nv;

            // Gl = [u1, rot90(u1)], Gr = [(ct,st), (-st,ct)]; block' = Gl^T block Gr.
            const double bp01 = (u1x * a) * (-st) + (u1x * b + u1y * c) * ct;
            const double bp11 = (-u1y * a) * (-st) + (-u1y * b + u1x * c) * ct;
            const double bp00 = nv;

            // Row update on trailing columns, column update on leading rows.
            for (Eigen::Index j = i + 2; j < n; ++j) {
                const double x = r(i, j), y = r(i + 1, j);
                r(i, j) = u1x * x + u1y * y;
                r(i + 1, j) = -u1y * x + u1x * y;
            }
            for (Eigen::Index j = 0; j < i; ++j) {
                const double x = r(j, i), y = r(j, i + 1);
                r(j, i) = x * ct + y * st;
                r(j, i + 1) = -x * st + y * ct;
            }
            r(i, i) = bp00;
            r(i, i + 1) = bp01;
            r(i + 1, i) = 0.0;
            r(i + 1, i + 1) = bp11;

            for (Eigen::Index j = 0; j < n; ++j) {
                double x = q(j, i), y = q(j, i + 1);
                q(j, i) = x * u1x + y * u1y;
                q(j, i + 1) = -x * u1y + y * u1x;
                x = p(j, i);
                y = p(j, i + 1);
                p(j, i) = x * ct + y * st;
                p(j, i + 1) = -x * st + y * ct;
            }
        }
    }
    if (sweep == max_sweeps) throw Error("gmd: equalization sweeps did not converge");

    return GmdResult{q.cast<Cplx>(), r.cast<Cplx>(), p.cast<Cplx>()};
}

CMat dft_matrix(Eigen::Index n) {
    if (n < 1) throw InvalidInput("dft_matrix: n must be >= 1");
    CMat w(n, n);
    const double root = 1.0 / std::sqrt(static_cast<double>(n));
    const double twopi = 6.283185307179586476925286766559;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const double ang = -twopi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            w(j, k) = root * Cplx(std::cos(ang), std::sin(ang));
        }
    return w;
}

CMat cholesky_lower(const HermitianPsd& m, const Tolerances& tol) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m.mat(), Eigen::EigenvaluesOnly);
    const RVec ev = es.eigenvalues();
    const double lmax = ev(ev.size() - 1);
    if (!(ev(0) > tol.pd_ratio * std::max(lmax, 0.0)) || !(lmax > 0.0))
        throw SingularMatrix("cholesky_lower: matrix is not strictly positive definite");
    Eigen::LLT<CMat> llt(m.mat());
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("cholesky_lower: factorization failed");
    return llt.matrixL();
}

CMat random_unitary(Eigen::Index n, Rng& rng, const Tolerances& tol) {
    CMat g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.cgaussian();
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ();
    for (Eigen::Index j = 0; j < n; ++j) phase_normalize_column(q.col(j), tol.phase_floor);
    return q;
}

} // namespace matmono::linalg
