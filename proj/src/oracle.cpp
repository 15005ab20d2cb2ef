#include "matmono/oracle.hpp"

#include <cmath>
#include <cstring>

namespace matmono::oracle {

using linalg::Cplx;
using linalg::KahanSum;

std::uint64_t digest(const CMat& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            mix(m(i, j).real());
            mix(m(i, j).imag());
        }
    return h;
}

namespace {

CMat random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    CMat g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.cgaussian();
    return g;
}

// Largest scale s with s * f feasible, found by bisection; exact for the
// quadratic constraint families, and the shaping draw is prescaled to the
// eigenvalue boundary first.
CMat to_boundary(const ConstraintSet& c, const CMat& f) {
    if (const auto* sh = std::get_if<model::Shaping>(&c)) {
        Eigen::SelfAdjointEigenSolver<CMat> es(CMat(f * f.adjoint()), Eigen::EigenvaluesOnly);
        const double lmax = es.eigenvalues()(f.rows() - 1);
        if (!(lmax > 0.0)) return f;
        const CMat root = linalg::herm_sqrt(sh->rs).mat();
        return root * f / std::sqrt(lmax);
    }
    if (!model::constraint_satisfied(c, f).ok) {
        // shrink into the feasible set first
        double s = 1.0;
        while (s > 1e-12 && !model::constraint_satisfied(c, CMat(s * f)).ok) s *= 0.5;
        if (s <= 1e-12) throw Infeasible("random_feasible_search: no feasible scaling found");
        double lo = s, hi = 2.0 * s;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model::constraint_satisfied(c, CMat(mid * f)).ok)
                lo = mid;
            else
                hi = mid;
        }
        return lo * f;
    }
    double lo = 1.0, hi = 2.0;
    while (model::constraint_satisfied(c, CMat(hi * f)).ok && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (model::constraint_satisfied(c, CMat(mid * f)).ok)
            lo = mid;
        else
            hi = mid;
    }
    return lo * f;
}

} // namespace

OracleReport random_feasible_search(const ConstraintSet& constraints, Eigen::Index rows,
                                    Eigen::Index cols,
                                    const std::function<double(const CMat&)>& scalarized_obj,
                                    long n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("random_feasible_search: n must be >= 1");
    Rng rng(seed);
    OracleReport rep;
    rep.method = OracleMethod::RandomSearch;
    rep.samples = n;
    rep.best_objective = -std::numeric_limits<double>::infinity();
    for (long t = 0; t < n; ++t) {
        const CMat f = to_boundary(constraints, random_gaussian(rows, cols, rng));
        const double v = scalarized_obj(f);
        if (v > rep.best_objective) {
            rep.best_objective = v;
            rep.best_point_digest = digest(f);
        }
    }
    if (!std::isfinite(rep.best_objective))
        throw Infeasible("random_feasible_search: no feasible point produced a finite objective");
    return rep;
}

namespace {

// Projection onto {Q PSD} inter {Tr(omega_i Q) <= P_i} by Dykstra's
// alternating scheme, 200 cycles max.
CMat project_constraints(const CMat& q_in, const model::WeightedPower& w) {
    const Eigen::Index n = q_in.rows();
    const size_t sets = w.omegas.size() + 1;
    std::vector<CMat> incr(sets, CMat::Zero(n, n));
    CMat q = 0.5 * (q_in + q_in.adjoint().eval());

    std::vector<double> wnorm2(w.omegas.size());
    for (size_t i = 0; i < w.omegas.size(); ++i) wnorm2[i] = w.omegas[i].mat().squaredNorm();

    for (int cycle = 0; cycle < 200; ++cycle) {
        double moved = 0.0;
        // PSD clip
        {
            CMat y = q + incr[0];
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (y + y.adjoint().eval()));
            CMat proj = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                        es.eigenvectors().adjoint();
            incr[0] = y - proj;
            moved += (proj - q).norm();
            q = proj;
        }
        for (size_t i = 0; i < w.omegas.size(); ++i) {
            CMat y = q + incr[i + 1];
            const double att = (w.omegas[i].mat() * y).trace().real();
            CMat proj = y;
            const double p = w.ps(static_cast<Eigen::Index>(i));
            if (att > p && wnorm2[i] > 0.0)
                proj = y - ((att - p) / wnorm2[i]) * w.omegas[i].mat();
            incr[i + 1] = y - proj;
            moved += (proj - q).norm();
            q = proj;
        }
        if (moved <= 1e-13 * std::max(1.0, q.norm())) break;
    }
    return q;
}

} // namespace

OracleReport projected_gradient_covariance(const CMat& h_eff, const model::WeightedPower& constraints,
                                           CovarianceGoal goal, int iters, double step,
                                           std::uint64_t seed) {
    const Eigen::Index n = h_eff.cols();
    model::validate_constraints(model::ConstraintSet{constraints});
    Rng rng(seed);

    // utility maximized: log|I + H Q H^H| or -Tr((H Q H^H + I)^{-1}) in the lifted form
    const CMat pih = h_eff.adjoint() * h_eff;
    Eigen::SelfAdjointEigenSolver<CMat> pes(0.5 * (pih + pih.adjoint().eval()));
    const CMat pi_half = pes.eigenvectors() *
                         pes.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         pes.eigenvectors().adjoint();

    auto utility = [&](const CMat& q) -> double {
        const CMat m = pi_half * q * pi_half + CMat::Identity(n, n);
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint().eval()),
                                               Eigen::EigenvaluesOnly);
        double u = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double lam = es.eigenvalues()(i);
            if (!(lam > 0.0)) return -std::numeric_limits<double>::infinity();
            u += goal == CovarianceGoal::MaxLogDet ? std::log(lam) : -1.0 / lam;
        }
        return u;
    };
    auto gradient = [&](const CMat& q) -> CMat {
        const CMat m = pi_half * q * pi_half + CMat::Identity(n, n);
        Eigen::LLT<CMat> llt(m);
        const CMat minv = llt.solve(CMat::Identity(n, n));
        if (goal == CovarianceGoal::MaxLogDet) return pi_half * minv * pi_half;
        return pi_half * minv * minv * pi_half;
    };

    // feasible start: tiny random PSD projected into the polytope
    CMat g0 = random_gaussian(n, n, rng);
    CMat q = project_constraints(CMat(0.01 * (g0 * g0.adjoint())), constraints);
    double u = utility(q);

    OracleReport rep;
    rep.method = OracleMethod::ProjectedGradient;
    double t = step > 0.0 ? step : 1.0;
    int stall = 0;
    long evals = 0;
    for (int it = 0; it < iters; ++it) {
        const CMat grad = gradient(q);
        CMat cand = project_constraints(CMat(q + t * grad), constraints);
        double uc = utility(cand);
        ++evals;
        int back = 0;
        while (uc < u && back < 40) {
            t *= 0.5;
            cand = project_constraints(CMat(q + t * grad), constraints);
            uc = utility(cand);
            ++evals;
            ++back;
        }
        if (uc <= u + 1e-15 * std::max(1.0, std::abs(u))) {
            if (++stall >= 8) {
                rep.converged = true;
                q = uc > u ? cand : q;
                u = std::max(u, uc);
                break;
            }
        } else {
            stall = 0;
        }
        if (uc >= u) {
            q = cand;
            u = uc;
        }
        t *= 1.3;
        if (it == iters - 1) rep.converged = false;
    }
    rep.samples = evals;
    rep.best_point_digest = digest(q);
    rep.best_objective = goal == CovarianceGoal::MaxLogDet ? u : -u;
    return rep;
}

OracleReport grid_search_allocation(const RVec& gains, double budget, const RVec& caps,
                                    const std::function<double(const RVec&)>& cost,
                                    double resolution, RVec* best_point) {
    const Eigen::Index n = gains.size();
    if (n < 1 || n > 3) throw TooLarge("grid_search_allocation: dims must be 1..3");
    if (!(resolution > 0.0) || budget / resolution > 4e3)
        throw TooLarge("grid_search_allocation: grid too fine");
    auto cap_at = [&](Eigen::Index i) {
        return caps.size() ? caps(i) : std::numeric_limits<double>::infinity();
    };
    double cap_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) cap_sum += std::min(cap_at(i), budget);
    const double target = std::min(budget, cap_sum);
    const long steps = static_cast<long>(std::floor(target / resolution + 0.5));

    OracleReport rep;
    rep.method = OracleMethod::GridSearch;
    rep.best_objective = std::numeric_limits<double>::infinity();
    RVec best = RVec::Zero(n);
    long samples = 0;

    auto consider = [&](const RVec& p) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (p(i) < -1e-12 || p(i) > cap_at(i) + 1e-12) return;
        ++samples;
        const double v = cost(p);
        if (v < rep.best_objective) {
            rep.best_objective = v;
            best = p;
        }
    };

    // Decreasing costs put the optimum on the full-budget face.
    if (n == 1) {
        RVec p(1);
        p(0) = target;
        consider(p);
    } else if (n == 2) {
        for (long i = 0; i <= steps; ++i) {
            RVec p(2);
            p(0) = static_cast<double>(i) * resolution;
            p(1) = target - p(0);
            consider(p);
        }
    } else {
        for (long i = 0; i <= steps; ++i)
            for (long j = 0; i + j <= steps; ++j) {
                RVec p(3);
                p(0) = static_cast<double>(i) * resolution;
                p(1) = static_cast<double>(j) * resolution;
                p(2) = target - p(0) - p(1);
                consider(p);
            }
    }
    rep.samples = samples;
    rep.best_point_digest = 0;
    if (best_point) *best_point = best;
    return rep;
}

std::vector<CMat> sample_delta(double gamma, Eigen::Index rows, Eigen::Index cols, long n,
                               std::uint64_t seed) {
    if (n < 1) throw InvalidInput("sample_delta: n must be >= 1");
    if (gamma < 0.0) throw InvalidInput("sample_delta: gamma must be >= 0");
    Rng rng(seed);
    const Eigen::Index k = std::min(rows, cols);
    std::vector<CMat> out;
    out.reserve(static_cast<size_t>(n));
    for (long t = 0; t < n; ++t) {
        const CMat u = linalg::random_unitary(rows, rng);
        const CMat v = linalg::random_unitary(cols, rng);
        CMat d = CMat::Zero(rows, cols);
        for (Eigen::Index i = 0; i < k; ++i)
            d(i, i) = t == 0 ? gamma : rng.uniform(0.0, gamma);
        out.push_back(u * d * v.adjoint());
    }
    return out;
}

} // namespace matmono::oracle
