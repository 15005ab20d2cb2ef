#include "matmono/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "matmono/monotone.hpp"
#include "matmono/oracle.hpp"

namespace matmono::harness {

using linalg::EigenOrder;
using linalg::evd_sorted;
using linalg::KahanSum;
using model::ConstraintSet;
using model::Objective;
using model::PrecoderSolution;

HermitianPsd exp_correlation(Eigen::Index n, double rho, double scale) {
    CMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = scale * std::pow(rho, std::abs(static_cast<double>(i - j)));
    return HermitianPsd::trusted(m);
}

ChannelDraw gen_channel(Eigen::Index nr, Eigen::Index nt, double sigma_e2,
                        const HermitianPsd& psi, std::uint64_t seed) {
    if (!(sigma_e2 >= 0.0) || sigma_e2 >= 1.0)
        throw InvalidInput("gen_channel: sigma_e2 must lie in [0, 1)");
    Rng rng(seed);
    const double amp = std::sqrt(1.0 - sigma_e2);
    ChannelDraw out;
    out.h_hat.resize(nr, nt);
    for (Eigen::Index j = 0; j < nt; ++j)
        for (Eigen::Index i = 0; i < nr; ++i) out.h_hat(i, j) = amp * rng.cgaussian();
    CMat hw(nr, nt);
    for (Eigen::Index j = 0; j < nt; ++j)
        for (Eigen::Index i = 0; i < nr; ++i) hw(i, j) = rng.cgaussian();
    out.h_true = out.h_hat + hw * linalg::herm_sqrt(psi).mat();
    return out;
}

double sum_mse(const CMat& h_true, const CMat& x, double sigma_n2) {
    if (h_true.cols() != x.rows()) throw InvalidInput("sum_mse: dimension mismatch");
    const Eigen::Index l = x.cols();
    const CMat m = x.adjoint() * h_true.adjoint() * h_true * x / sigma_n2 +
                   CMat::Identity(l, l);
    Eigen::LLT<CMat> llt(0.5 * (m + m.adjoint().eval()));
    return llt.solve(CMat::Identity(l, l)).trace().real();
}

double bayes_avg_mse(const CMat& h_hat, const HermitianPsd& psi, const CMat& x,
                     double sigma_n2) {
    const double kn = sigma_n2 + (x * x.adjoint() * psi.mat()).trace().real();
    return sum_mse(h_hat, x, kn);
}

std::string sweep_var_name(SweepVar v) {
    switch (v) {
        case SweepVar::SigmaE2: return "sigma_e2";
        case SweepVar::SnrDb: return "snr_db";
        case SweepVar::SRel: return "s_rel";
        case SweepVar::None: return "none";
    }
    return "none";
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw InvalidInput("config: trials must be >= 1");
    if (cfg.grid.size() == 0) throw InvalidInput("config: sweep grid must be nonempty");
    for (Eigen::Index i = 1; i < cfg.grid.size(); ++i)
        if (!(cfg.grid(i) >= cfg.grid(i - 1))) throw InvalidInput("config: grid must be sorted");
    if (cfg.baselines.empty()) throw InvalidInput("config: at least one baseline");
    for (const auto& b : cfg.baselines)
        if (b != "ideal" && b != "naive" && b != "nonrobust" && b != "proposed")
            throw InvalidInput("config: unknown baseline " + b);
    if (cfg.streams < 1 || cfg.streams > std::min(cfg.nt, cfg.nr))
        throw InvalidInput("config: streams out of range");
    if (cfg.constraint != "per_antenna" && cfg.constraint != "joint" && cfg.constraint != "sum" &&
        cfg.constraint != "two_group")
        throw InvalidInput("config: unknown constraint " + cfg.constraint);
    if (cfg.objective != "mse" && cfg.objective != "capacity")
        throw InvalidInput("config: unknown objective " + cfg.objective);
    if (cfg.kind != ExperimentKind::WorstCase && cfg.sweep == SweepVar::SRel)
        throw InvalidInput("config: s_rel sweeps apply to the worst-case regime only");
}

namespace {

Objective make_objective(const ExperimentConfig& cfg, Eigen::Index l) {
    if (cfg.objective == "capacity")
        return model::MutualInfo{HermitianPsd::trusted(CMat::Identity(l, l))};
    return model::MseTrace{HermitianPsd::trusted(CMat::Identity(l, l))};
}

ConstraintSet make_constraints(const ExperimentConfig& cfg, double p_t, int streams) {
    if (cfg.constraint == "per_antenna")
        return model::PerAntenna{RVec::Constant(cfg.nt, p_t)};
    if (cfg.constraint == "sum") return model::SumPower{p_t * static_cast<double>(streams)};
    const double budget = std::max(1, streams - 1) * p_t;
    return model::JointPower{budget, p_t};
}

struct PointSettings {
    double sigma_e2;
    double sigma_n2;
    double s_rel;
};

PointSettings settings_at(const ExperimentConfig& cfg, double value) {
    PointSettings s{cfg.sigma_e2, cfg.p_t / std::pow(10.0, cfg.snr_db / 10.0), cfg.s_rel};
    switch (cfg.sweep) {
        case SweepVar::SigmaE2: s.sigma_e2 = value; break;
        case SweepVar::SnrDb: s.sigma_n2 = cfg.p_t / std::pow(10.0, value / 10.0); break;
        case SweepVar::SRel: s.s_rel = value; break;
        case SweepVar::None: break;
    }
    return s;
}

double spectral_norm(const CMat& m) { return linalg::svd_sorted(m).singulars(0); }

} // namespace

std::vector<GridDetail> run_sweep_detail(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const Eigen::Index l = cfg.streams;
    const Objective obj = make_objective(cfg, l);

    std::vector<GridDetail> out;
    for (Eigen::Index g = 0; g < cfg.grid.size(); ++g) {
        const PointSettings pt = settings_at(cfg, cfg.grid(g));
        GridDetail detail;
        detail.value = cfg.grid(g);
        for (const auto& b : cfg.baselines) detail.metrics[b] = {};

        const ConstraintSet constraints = make_constraints(cfg, cfg.p_t, cfg.streams);
        const HermitianPsd psi = exp_correlation(cfg.nt, cfg.p_corr, pt.sigma_e2);

        for (long t = 0; t < cfg.trials; ++t) {
            const std::uint64_t trial_seed =
                Rng::derive(cfg.seed, static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(cfg.trials) +
                                          static_cast<std::uint64_t>(t));
            // Metrics land per trial all-or-nothing so the per-baseline
            // vectors stay aligned for paired comparisons.
            std::map<std::string, double> trial_metrics;
            try {
                if (cfg.kind == ExperimentKind::WorstCase) {
                    Rng rng(trial_seed);
                    CMat h_hat(cfg.nr, cfg.nt);
                    for (Eigen::Index j = 0; j < cfg.nt; ++j)
                        for (Eigen::Index i = 0; i < cfg.nr; ++i) h_hat(i, j) = rng.cgaussian();
                    const double gamma = pt.s_rel * spectral_norm(h_hat);
                    const robust::WorstCaseContext ctx{h_hat, gamma, pt.sigma_n2};
                    const CMat h_wc = h_hat - robust::worst_case_delta(ctx);

                    // Designing with gamma = 0 is the perfect-CSI design on h_hat.
                    const robust::WorstCaseContext clean{h_hat, 0.0, pt.sigma_n2};
                    for (const auto& b : cfg.baselines) {
                        if (b == "proposed") {
                            PrecoderSolution s =
                                robust::solve_worstcase(ctx, constraints, obj, cfg.sched, l);
                            trial_metrics[b] = sum_mse(h_wc, s.f, pt.sigma_n2);
                        } else if (b == "nonrobust") {
                            PrecoderSolution s =
                                robust::solve_worstcase(clean, constraints, obj, cfg.sched, l);
                            trial_metrics[b] = sum_mse(h_wc, s.f, pt.sigma_n2);
                        } else if (b == "ideal") {
                            PrecoderSolution s =
                                robust::solve_worstcase(clean, constraints, obj, cfg.sched, l);
                            trial_metrics[b] = sum_mse(h_hat, s.f, pt.sigma_n2);
                        } else {
                            throw InvalidInput("worst-case sweep has no baseline " + b);
                        }
                    }
                } else {
                    const ChannelDraw ch = gen_channel(cfg.nr, cfg.nt, pt.sigma_e2, psi, trial_seed);
                    const model::WeightedPower w = model::to_weighted(constraints, cfg.nt);

                    for (const auto& b : cfg.baselines) {
                        CMat x;
                        if (b == "proposed") {
                            if (cfg.kind == ExperimentKind::Bayes) {
                                const robust::BayesContext ctx{ch.h_hat, psi, pt.sigma_n2};
                                x = robust::solve_bayes_weighted(ctx, w.omegas, w.ps, obj,
                                                                 cfg.sched, l)
                                        .f;
                            } else {
                                const robust::StochasticContext ctx{
                                    ch.h_hat, HermitianPsd::trusted(CMat::Identity(cfg.nr, cfg.nr)),
                                    psi,
                                    HermitianPsd::trusted(pt.sigma_n2 *
                                                          CMat::Identity(cfg.nr, cfg.nr))};
                                x = robust::solve_stochastic(ctx, constraints, obj, cfg.sched, l).f;
                            }
                        } else if (b == "naive") {
                            const robust::BayesContext ctx{
                                ch.h_hat,
                                HermitianPsd::trusted(CMat::Zero(cfg.nt, cfg.nt)), pt.sigma_n2};
                            x = robust::solve_bayes_weighted(ctx, w.omegas, w.ps, obj, cfg.sched, l)
                                    .f;
                        } else if (b == "ideal") {
                            const HermitianPsd pi_true = HermitianPsd::trusted(
                                ch.h_true.adjoint() * ch.h_true / pt.sigma_n2);
                            x = structure::solve_weighted(pi_true, w.omegas, w.ps, obj, cfg.sched, l)
                                    .f;
                        } else {
                            throw InvalidInput("bayes/stochastic sweep has no baseline " + b);
                        }
                        const bool icsir = cfg.kind == ExperimentKind::Bayes && b != "ideal";
                        trial_metrics[b] = icsir ? bayes_avg_mse(ch.h_hat, psi, x, pt.sigma_n2)
                                                 : sum_mse(ch.h_true, x, pt.sigma_n2);
                    }
                }
                for (const auto& [name, value] : trial_metrics)
                    detail.metrics[name].push_back(value);
            } catch (const Error&) {
                ++detail.failures;
            }
        }
        out.push_back(std::move(detail));
    }
    return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    const std::vector<GridDetail> details = run_sweep_detail(cfg);
    std::vector<std::string> names = cfg.baselines;
    std::sort(names.begin(), names.end());

    std::vector<SweepRow> rows;
    for (const auto& d : details) {
        for (const auto& name : names) {
            const std::vector<double>& xs = d.metrics.at(name);
            KahanSum sum;
            for (double v : xs) sum.add(v);
            const long n = static_cast<long>(xs.size());
            const double mean = n > 0 ? sum.value() / static_cast<double>(n) : 0.0;
            KahanSum var;
            for (double v : xs) var.add((v - mean) * (v - mean));
            const double se =
                n > 1 ? std::sqrt(var.value() / (static_cast<double>(n) * (static_cast<double>(n) - 1.0)))
                      : 0.0;
            rows.push_back(SweepRow{sweep_var_name(cfg.sweep), d.value, name, mean, se, n});
        }
    }
    return rows;
}

std::vector<SweepRow> compare_with_oracle(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.constraint == "joint")
        throw InvalidInput("compare_with_oracle: weighted-family constraint required");
    if (cfg.streams != cfg.nt)
        throw InvalidInput("compare_with_oracle: the covariance reference is rank-free, so the "
                           "comparison needs streams == nt");

    const Eigen::Index n = cfg.nt;
    const Eigen::Index l = cfg.streams;
    const Objective obj = make_objective(cfg, l);

    // Two-group split of the exponential correlation matrix, power ratio 0.6/0.4;
    // per_antenna and sum keep their literal weighted forms.
    std::vector<HermitianPsd> omegas;
    RVec ps;
    if (cfg.constraint == "two_group") {
        const HermitianPsd omega = exp_correlation(n, 0.3);
        const linalg::SortedEigen e = evd_sorted(omega, EigenOrder::Descending);
        const Eigen::Index half = n / 2;
        CMat o1 = CMat::Zero(n, n), o2 = CMat::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const CMat outer = e.eigenvalues(i) * e.unitary.col(i) * e.unitary.col(i).adjoint();
            if (i < half)
                o1 += outer;
            else
                o2 += outer;
        }
        omegas = {HermitianPsd::trusted(o1), HermitianPsd::trusted(o2)};
        ps = RVec(2);
        ps << 0.6 * cfg.p_t * static_cast<double>(n), 0.4 * cfg.p_t * static_cast<double>(n);
    } else {
        const model::WeightedPower w =
            model::to_weighted(make_constraints(cfg, cfg.p_t, cfg.streams), n);
        omegas = w.omegas;
        ps = w.ps;
    }

    SubgradientSchedule sched = cfg.sched;
    if (sched.eps.size() == 0) sched.eps = 1e-7 * ps;
    if (sched.max_iter == 2000) sched.max_iter = 60000;

    std::vector<SweepRow> rows;
    for (Eigen::Index g = 0; g < cfg.grid.size(); ++g) {
        const double sigma_n2 = cfg.p_t / std::pow(10.0, cfg.grid(g) / 10.0);
        double worst_gap = 0.0, prop_val = 0.0, oracle_val = 0.0;
        for (long t = 0; t < cfg.trials; ++t) {
            const std::uint64_t seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(g) * 1000 +
                                                                 static_cast<std::uint64_t>(t));
            Rng rng(seed);
            CMat h(cfg.nr, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < cfg.nr; ++i) h(i, j) = rng.cgaussian();

            const HermitianPsd pi = HermitianPsd::trusted(h.adjoint() * h / sigma_n2);
            const PrecoderSolution sol =
                structure::solve_weighted(pi, omegas, ps, obj, sched, l);
            const double vp = cfg.objective == "capacity"
                                  ? -monotone::eval_objective(obj, sol.f, pi)
                                  : monotone::eval_objective(obj, sol.f, pi);

            const oracle::OracleReport rep = oracle::projected_gradient_covariance(
                CMat(h / std::sqrt(sigma_n2)), model::WeightedPower{omegas, ps},
                cfg.objective == "capacity" ? oracle::CovarianceGoal::MaxLogDet
                                            : oracle::CovarianceGoal::MinMseTrace,
                200000, 1.0, seed ^ 0xABCDEF);
            const double vo = rep.best_objective;
            const double gap = std::abs(vp - vo) / std::max(1.0, std::abs(vo));
            if (gap > worst_gap) {
                worst_gap = gap;
                prop_val = vp;
                oracle_val = vo;
            }
        }
        rows.push_back(SweepRow{"snr_db", cfg.grid(g), "oracle", oracle_val, 0.0, cfg.trials});
        rows.push_back(SweepRow{"snr_db", cfg.grid(g), "proposed", prop_val, 0.0, cfg.trials});
        rows.push_back(SweepRow{"snr_db", cfg.grid(g), "relgap", worst_gap, 0.0, cfg.trials});
    }
    return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "sweep_var,value,baseline,metric,stderr,trials\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.17g,%.17g,%ld\n", r.sweep_var.c_str(),
                      r.value, r.baseline.c_str(), r.metric, r.stderr_, r.trials);
        out += buf;
    }
    return out;
}

} // namespace matmono::harness
