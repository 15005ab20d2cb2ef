#include <doctest.h>

#include <cstring>

#include "matmono/linalg.hpp"

using namespace matmono;
using linalg::CMat;
using linalg::Cplx;
using linalg::EigenOrder;
using linalg::HermitianPsd;
using linalg::RVec;

namespace {

CMat random_complex(Eigen::Index r, Eigen::Index c, Rng& rng) {
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.cgaussian();
    return m;
}

HermitianPsd random_psd(Eigen::Index n, Rng& rng, Eigen::Index rank = 0) {
    if (rank == 0) rank = n;
    const CMat g = random_complex(n, rank, rng);
    return HermitianPsd::trusted(g * g.adjoint());
}

double unitarity_residual(const CMat& u) {
    return (u.adjoint() * u - CMat::Identity(u.cols(), u.cols())).norm();
}

bool phase_convention_holds(const CMat& u) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            if (std::abs(u(i, j)) > 1e-12) {
                if (std::abs(u(i, j).imag()) > 1e-12 || u(i, j).real() < 0.0) return false;
                break;
            }
        }
    }
    return true;
}

} // namespace

TEST_SUITE("linalg") {

TEST_CASE("evd of a diagonal matrix sorts with permutation pivots") {
    CMat m = CMat::Zero(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = 3.0;
    m(2, 2) = 2.0;
    const auto e = linalg::evd_sorted(HermitianPsd(m), EigenOrder::Descending);
    CHECK(e.eigenvalues(0) == doctest::Approx(3.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(2.0));
    CHECK(e.eigenvalues(2) == doctest::Approx(1.0));
    // permutation with +1 pivots
    for (Eigen::Index j = 0; j < 3; ++j) {
        double top = 0.0;
        for (Eigen::Index i = 0; i < 3; ++i) top = std::max(top, std::abs(e.unitary(i, j)));
        CHECK(top == doctest::Approx(1.0));
    }
    CHECK(std::abs(e.unitary(1, 0)) == doctest::Approx(1.0));
    CHECK(e.unitary(1, 0).real() > 0.0);
}

TEST_CASE("evd of the identity returns the identity under the conventions") {
    const auto e = linalg::evd_sorted(HermitianPsd(CMat::Identity(2, 2)), EigenOrder::Descending);
    CHECK((e.unitary - CMat::Identity(2, 2)).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(1.0));
}

TEST_CASE("random PSD reconstruction within 1e-9") {
    Rng rng(11);
    const HermitianPsd m = random_psd(4, rng);
    const auto e = linalg::evd_sorted(m, EigenOrder::Descending);
    CHECK((e.reconstruct() - m.mat()).norm() / m.mat().norm() < 1e-9);
}

TEST_CASE("evd rejects non-hermitian input") {
    CMat m(2, 2);
    m << Cplx(1, 0), Cplx(0.5, 0.2), Cplx(0.1, 0.0), Cplx(2, 0);
    CHECK_THROWS_AS(HermitianPsd{m}, InvalidInput);
}

TEST_CASE("evd rejects indefinite input") {
    CMat m = CMat::Identity(2, 2);
    m(1, 1) = -0.5;
    CHECK_THROWS_AS(linalg::evd_sorted(HermitianPsd(m), EigenOrder::Descending), InvalidInput);
}

TEST_CASE("svd of a diagonal sorts descending") {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 2.0;
    const auto s = linalg::svd_sorted(m);
    CHECK(s.singulars(0) == doctest::Approx(2.0));
    CHECK(s.singulars(1) == doctest::Approx(1.0));
    CHECK((s.reconstruct() - m).norm() < 1e-12);
}

TEST_CASE("svd of the zero matrix is the identity frame") {
    const auto s = linalg::svd_sorted(CMat::Zero(3, 2));
    CHECK(s.singulars.cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.left - CMat::Identity(3, 3)).norm() == 0.0);
    CHECK((s.right - CMat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("svd left frame has orthonormal columns for tall input") {
    Rng rng(5);
    const CMat m = random_complex(4, 2, rng);
    const auto s = linalg::svd_sorted(m);
    CHECK(unitarity_residual(s.left) < 1e-9);
    CHECK(unitarity_residual(s.right) < 1e-9);
    CHECK((s.reconstruct() - m).norm() / m.norm() < 1e-9);
}

TEST_CASE("herm_sqrt on diagonals and random PSD") {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 4.0;
    m(1, 1) = 9.0;
    const auto r = linalg::herm_sqrt(HermitianPsd(m));
    CHECK(r.mat()(0, 0).real() == doctest::Approx(2.0));
    CHECK(r.mat()(1, 1).real() == doctest::Approx(3.0));

    const auto ri = linalg::herm_sqrt(HermitianPsd(CMat::Identity(3, 3)));
    CHECK((ri.mat() - CMat::Identity(3, 3)).norm() < 1e-12);

    Rng rng(7);
    const HermitianPsd p = random_psd(5, rng);
    const auto rp = linalg::herm_sqrt(p);
    CHECK((rp.mat() * rp.mat() - p.mat()).norm() / p.mat().norm() < 1e-9);
}

TEST_CASE("pinv_sqrt maps small eigenvalues to zero") {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 4.0;
    const auto p = linalg::pinv_sqrt(HermitianPsd(m));
    CHECK(p.mat()(0, 0).real() == doctest::Approx(0.5));
    CHECK(std::abs(p.mat()(1, 1)) < 1e-15);

    const auto pi = linalg::pinv_sqrt(HermitianPsd(CMat::Identity(3, 3)));
    CHECK((pi.mat() - CMat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("pinv_sqrt projector identity on a rank-deficient matrix") {
    Rng rng(13);
    const HermitianPsd m = random_psd(4, rng, 2);
    const CMat half = linalg::herm_sqrt(m).mat();
    const CMat p = linalg::pinv_sqrt(m).mat();
    const CMat proj = half * p * p * half; // projector onto the range
    CHECK((proj * proj - proj).norm() < 1e-8);
    CHECK((proj * m.mat() - m.mat()).norm() / m.mat().norm() < 1e-8);
}

TEST_CASE("gmd equalizes the diagonal to the geometric mean") {
    SUBCASE("pair (4,1)") {
        RVec s(2);
        s << 4.0, 1.0;
        const auto g = linalg::gmd(s);
        CHECK(g.r(0, 0).real() == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(g.r(1, 1).real() == doctest::Approx(2.0).epsilon(1e-8));
        CMat d = CMat::Zero(2, 2);
        d(0, 0) = 4.0;
        d(1, 1) = 1.0;
        CHECK((g.q * g.r * g.p.adjoint() - d).norm() < 1e-8);
    }
    SUBCASE("already equal") {
        RVec s = RVec::Constant(3, 3.0);
        const auto g = linalg::gmd(s);
        for (int i = 0; i < 3; ++i) CHECK(g.r(i, i).real() == doctest::Approx(3.0));
        CHECK((g.q - CMat::Identity(3, 3)).norm() < 1e-12);
    }
    SUBCASE("(8,4,2,1) hits the fourth root of the product") {
        RVec s(4);
        s << 8.0, 4.0, 2.0, 1.0;
        const auto g = linalg::gmd(s);
        const double want = std::pow(64.0, 0.25); // 2.3784...
        for (int i = 0; i < 4; ++i) CHECK(g.r(i, i).real() == doctest::Approx(want).epsilon(1e-6));
        CMat d = CMat::Zero(4, 4);
        for (int i = 0; i < 4; ++i) d(i, i) = s(i);
        CHECK((g.q * g.r * g.p.adjoint() - d).norm() < 1e-8);
        CHECK(unitarity_residual(g.q) < 1e-10);
        CHECK(unitarity_residual(g.p) < 1e-10);
    }
    SUBCASE("rejects nonpositive entries") {
        RVec s(2);
        s << 1.0, 0.0;
        CHECK_THROWS_AS(linalg::gmd(s), InvalidInput);
    }
}

TEST_CASE("gmd determinant preservation on random vectors") {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        RVec s(n);
        for (Eigen::Index i = 0; i < n; ++i) s(i) = rng.uniform(0.05, 5.0);
        const auto g = linalg::gmd(s);
        double prod_r = 1.0, prod_s = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            prod_r *= g.r(i, i).real();
            prod_s *= s(i);
        }
        CHECK(prod_r == doctest::Approx(prod_s).epsilon(1e-8));
        CMat d = CMat::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) d(i, i) = s(i);
        CHECK((g.q * g.r * g.p.adjoint() - d).norm() < 1e-8 * std::max(1.0, d.norm()));
    }
}

TEST_CASE("gmd converges at the desk-scale boundary") {
    Rng rng(53);
    RVec s64(64);
    for (int i = 0; i < 64; ++i) s64(i) = rng.uniform(0.02, 8.0);
    const auto g = linalg::gmd(s64);
    double logsum = 0.0;
    for (int i = 0; i < 64; ++i) logsum += std::log(s64(i));
    const double want = std::exp(logsum / 64.0);
    for (int i = 0; i < 64; ++i) CHECK(g.r(i, i).real() == doctest::Approx(want).epsilon(1e-7));
    CMat d = CMat::Zero(64, 64);
    for (int i = 0; i < 64; ++i) d(i, i) = s64(i);
    CHECK((g.q * g.r * g.p.adjoint() - d).norm() <= 1e-8 * d.norm());
}

TEST_CASE("dft matrix") {
    CHECK(linalg::dft_matrix(1)(0, 0).real() == doctest::Approx(1.0));
    const CMat w2 = linalg::dft_matrix(2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(w2(0, 0).real() == doctest::Approx(r));
    CHECK(w2(1, 1).real() == doctest::Approx(-r));
    const CMat w4 = linalg::dft_matrix(4);
    CHECK((w4.adjoint() * w4 - CMat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("cholesky of diagonals and random PD") {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 4.0;
    m(1, 1) = 9.0;
    const CMat l = linalg::cholesky_lower(HermitianPsd(m));
    CHECK(l(0, 0).real() == doctest::Approx(2.0));
    CHECK(l(1, 1).real() == doctest::Approx(3.0));

    Rng rng(23);
    const CMat g = random_complex(3, 3, rng);
    const HermitianPsd pd =
        HermitianPsd::trusted(g * g.adjoint() + 0.1 * CMat::Identity(3, 3));
    const CMat lp = linalg::cholesky_lower(pd);
    CHECK((lp * lp.adjoint() - pd.mat()).norm() / pd.mat().norm() < 1e-9);
    for (int i = 0; i < 3; ++i) {
        CHECK(lp(i, i).imag() == doctest::Approx(0.0));
        CHECK(lp(i, i).real() > 0.0);
    }

    CHECK_THROWS_AS(linalg::cholesky_lower(HermitianPsd(CMat::Zero(2, 2))), SingularMatrix);
}

TEST_CASE("decomposition property sweep: 1000 trials, dims 1-6") {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        const HermitianPsd m = random_psd(n, rng);
        const auto e = linalg::evd_sorted(m, EigenOrder::Descending);
        CHECK(unitarity_residual(e.unitary) < 1e-9);
        CHECK((e.reconstruct() - m.mat()).norm() <= 1e-9 * std::max(1.0, m.mat().norm()));
        for (Eigen::Index i = 1; i < n; ++i)
            CHECK(e.eigenvalues(i) <= e.eigenvalues(i - 1) + 1e-9 * std::max(1.0, e.eigenvalues(0)));
        CHECK(phase_convention_holds(e.unitary));

        const Eigen::Index c = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        const CMat a = random_complex(n, c, rng);
        const auto s = linalg::svd_sorted(a);
        CHECK(unitarity_residual(s.left) < 1e-9);
        CHECK(unitarity_residual(s.right) < 1e-9);
        CHECK((s.reconstruct() - a).norm() <= 1e-9 * std::max(1.0, a.norm()));
        for (Eigen::Index i = 1; i < s.singulars.size(); ++i)
            CHECK(s.singulars(i) <= s.singulars(i - 1) + 1e-12);
        CHECK(phase_convention_holds(s.right));
    }
}

TEST_CASE("determinism: bit-identical output for bit-identical input") {
    Rng rng(41);
    const HermitianPsd m = random_psd(5, rng);
    const auto e1 = linalg::evd_sorted(m, EigenOrder::Ascending);
    const auto e2 = linalg::evd_sorted(m, EigenOrder::Ascending);
    CHECK(std::memcmp(e1.unitary.data(), e2.unitary.data(),
                      sizeof(Cplx) * static_cast<size_t>(e1.unitary.size())) == 0);
    CHECK(std::memcmp(e1.eigenvalues.data(), e2.eigenvalues.data(),
                      sizeof(double) * static_cast<size_t>(e1.eigenvalues.size())) == 0);

    const CMat a = random_complex(4, 3, rng);
    const auto s1 = linalg::svd_sorted(a);
    const auto s2 = linalg::svd_sorted(a);
    CHECK(std::memcmp(s1.left.data(), s2.left.data(),
                      sizeof(Cplx) * static_cast<size_t>(s1.left.size())) == 0);
    CHECK(std::memcmp(s1.right.data(), s2.right.data(),
                      sizeof(Cplx) * static_cast<size_t>(s1.right.size())) == 0);
}

TEST_CASE("schur-horn: the diagonal is majorized by the spectrum") {
    Rng rng(43);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
        CMat g = random_complex(n, n, rng);
        const CMat h = 0.5 * (g + g.adjoint().eval()); // general hermitian
        Eigen::SelfAdjointEigenSolver<CMat> es(h);
        RVec d = h.diagonal().real();
        RVec lam = es.eigenvalues();
        std::sort(d.data(), d.data() + n, std::greater<double>());
        std::sort(lam.data(), lam.data() + n, std::greater<double>());
        double pd = 0.0, pl = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            pd += d(k);
            pl += lam(k);
            if (k + 1 < n)
                CHECK(pd <= pl + 1e-10 * std::max(1.0, std::abs(pl)));
            else
                CHECK(pd == doctest::Approx(pl).epsilon(1e-10));
        }
    }
}

TEST_CASE("random unitary is unitary and phase-normalized") {
    Rng rng(47);
    for (int t = 0; t < 20; ++t) {
        const CMat q = linalg::random_unitary(4, rng);
        CHECK(unitarity_residual(q) < 1e-12);
        CHECK(phase_convention_holds(q));
    }
}

} // TEST_SUITE
