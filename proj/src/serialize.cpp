#include "matmono/serialize.hpp"

#include <json.hpp>

namespace matmono::serialize {

using json = nlohmann::json;
using linalg::CMat;
using linalg::Cplx;
using linalg::HermitianPsd;
using linalg::RVec;

namespace {

json mat_to_json(const CMat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMat mat_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw InvalidInput("json: matrix must be a nonempty array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    CMat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidInput("json: ragged matrix");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const json& e = row.at(static_cast<size_t>(k));
            if (!e.is_array() || e.size() != 2)
                throw InvalidInput("json: matrix entries must be [re, im] pairs");
            m(i, k) = Cplx(e.at(0).get<double>(), e.at(1).get<double>());
        }
    }
    return m;
}

json vec_to_json(const RVec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

RVec vec_from_json(const json& j) {
    RVec v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
    return v;
}

json constraints_to_json(const model::ConstraintSet& c) {
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            json out;
            if constexpr (std::is_same_v<T, model::SumPower>) {
                out["kind"] = "sum_power";
                out["p"] = k.p;
            } else if constexpr (std::is_same_v<T, model::PerAntenna>) {
                out["kind"] = "per_antenna";
                out["p"] = vec_to_json(k.p);
            } else if constexpr (std::is_same_v<T, model::WeightedPower>) {
                out["kind"] = "weighted";
                json ws = json::array();
                for (const auto& w : k.omegas) ws.push_back(mat_to_json(w.mat()));
                out["omegas"] = std::move(ws);
                out["ps"] = vec_to_json(k.ps);
            } else if constexpr (std::is_same_v<T, model::Shaping>) {
                out["kind"] = "shaping";
                out["rs"] = mat_to_json(k.rs.mat());
            } else if constexpr (std::is_same_v<T, model::EigenCaps>) {
                out["kind"] = "eigen_caps";
                out["taus"] = vec_to_json(k.taus);
            } else if constexpr (std::is_same_v<T, model::JointPower>) {
                out["kind"] = "joint";
                out["p"] = k.p;
                out["tau"] = k.tau;
            } else if constexpr (std::is_same_v<T, model::Cognitive>) {
                out["kind"] = "cognitive";
                out["hc"] = mat_to_json(k.hc);
                out["tauc"] = k.tauc;
            }
            return out;
        },
        c);
}

model::ConstraintSet constraints_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sum_power") return model::SumPower{j.at("p").get<double>()};
    if (kind == "per_antenna") return model::PerAntenna{vec_from_json(j.at("p"))};
    if (kind == "weighted") {
        model::WeightedPower w;
        for (const auto& m : j.at("omegas")) w.omegas.emplace_back(HermitianPsd(mat_from_json(m)));
        w.ps = vec_from_json(j.at("ps"));
        return w;
    }
    if (kind == "shaping") return model::Shaping{HermitianPsd(mat_from_json(j.at("rs")))};
    if (kind == "eigen_caps") return model::EigenCaps{vec_from_json(j.at("taus"))};
    if (kind == "joint")
        return model::JointPower{j.at("p").get<double>(), j.at("tau").get<double>()};
    if (kind == "cognitive")
        return model::Cognitive{mat_from_json(j.at("hc")), j.at("tauc").get<double>()};
    throw InvalidInput("json: unknown constraint kind " + kind);
}

json objective_to_json(const model::Objective& o) {
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            json out;
            if constexpr (std::is_same_v<T, model::MutualInfo>) {
                out["kind"] = "mutual_info";
                out["phi"] = mat_to_json(k.phi.mat());
            } else if constexpr (std::is_same_v<T, model::MseTrace>) {
                out["kind"] = "mse_trace";
                out["phi"] = mat_to_json(k.phi.mat());
            } else if constexpr (std::is_same_v<T, model::RelayMse>) {
                out["kind"] = "relay_mse";
                out["a"] = mat_to_json(k.a);
                out["alpha"] = k.alpha;
            } else if constexpr (std::is_same_v<T, model::RelayMutualInfo>) {
                out["kind"] = "relay_mutual_info";
                out["a"] = mat_to_json(k.a);
                out["alpha"] = k.alpha;
                out["phi"] = mat_to_json(k.phi.mat());
            } else if constexpr (std::is_same_v<T, model::AddSchur>) {
                if (k.f.name.empty())
                    throw InvalidInput("json: only registry Schur handles serialize");
                out["kind"] = "add_schur";
                out["mode"] = k.mode == model::SchurMode::Convex ? "convex" : "concave";
                out["alpha"] = k.alpha;
                out["f"] = k.f.name;
            } else if constexpr (std::is_same_v<T, model::MultSchur>) {
                if (k.f.name.empty())
                    throw InvalidInput("json: only registry Schur handles serialize");
                out["kind"] = "mult_schur";
                out["mode"] = k.mode == model::SchurMode::Convex ? "convex" : "concave";
                out["alpha"] = k.alpha;
                out["f"] = k.f.name;
            } else if constexpr (std::is_same_v<T, model::DirectMutualInfo>) {
                out["kind"] = "direct_mutual_info";
                out["a"] = mat_to_json(k.a);
                out["phi"] = mat_to_json(k.phi.mat());
            } else if constexpr (std::is_same_v<T, model::DirectMse>) {
                out["kind"] = "direct_mse";
                out["a"] = mat_to_json(k.a);
                out["alpha"] = k.alpha;
            } else if constexpr (std::is_same_v<T, model::WeightedMse>) {
                out["kind"] = "weighted_mse";
                out["a"] = mat_to_json(k.a);
                out["phi"] = mat_to_json(k.phi.mat());
            } else if constexpr (std::is_same_v<T, model::KronMutualInfo>) {
                out["kind"] = "kron_mutual_info";
                out["phi"] = mat_to_json(k.phi.mat());
                out["sigma1"] = mat_to_json(k.sigma1.mat());
                out["sigma2"] = mat_to_json(k.sigma2.mat());
                out["side"] = k.side == model::KronSide::VarLeft ? "var_left" : "var_right";
            } else if constexpr (std::is_same_v<T, model::KronMse>) {
                out["kind"] = "kron_mse";
                out["phi"] = mat_to_json(k.phi.mat());
                out["sigma1"] = mat_to_json(k.sigma1.mat());
                out["sigma2"] = mat_to_json(k.sigma2.mat());
                out["side"] = k.side == model::KronSide::VarLeft ? "var_left" : "var_right";
            } else if constexpr (std::is_same_v<T, model::KronRelayMse>) {
                out["kind"] = "kron_relay_mse";
                out["a"] = mat_to_json(k.a);
                out["sigma1"] = mat_to_json(k.sigma1.mat());
                out["sigma2"] = mat_to_json(k.sigma2.mat());
                out["side"] = k.side == model::KronSide::VarLeft ? "var_left" : "var_right";
            }
            return out;
        },
        o);
}

model::KronSide side_from(const json& j) {
    const std::string s = j.value("side", "var_left");
    if (s == "var_left") return model::KronSide::VarLeft;
    if (s == "var_right") return model::KronSide::VarRight;
    throw InvalidInput("json: unknown Kronecker side " + s);
}

model::Objective objective_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mutual_info") return model::MutualInfo{HermitianPsd(mat_from_json(j.at("phi")))};
    if (kind == "mse_trace") return model::MseTrace{HermitianPsd(mat_from_json(j.at("phi")))};
    if (kind == "relay_mse")
        return model::RelayMse{mat_from_json(j.at("a")), j.at("alpha").get<double>()};
    if (kind == "relay_mutual_info")
        return model::RelayMutualInfo{mat_from_json(j.at("a")), j.at("alpha").get<double>(),
                                      HermitianPsd(mat_from_json(j.at("phi")))};
    if (kind == "add_schur")
        return model::AddSchur{j.at("mode").get<std::string>() == "convex"
                                   ? model::SchurMode::Convex
                                   : model::SchurMode::Concave,
                               named_schur(j.at("f").get<std::string>()),
                               j.at("alpha").get<double>()};
    if (kind == "mult_schur")
        return model::MultSchur{j.at("mode").get<std::string>() == "convex"
                                    ? model::SchurMode::Convex
                                    : model::SchurMode::Concave,
                                named_schur(j.at("f").get<std::string>()),
                                j.at("alpha").get<double>()};
    if (kind == "direct_mutual_info")
        return model::DirectMutualInfo{mat_from_json(j.at("a")),
                                       HermitianPsd(mat_from_json(j.at("phi")))};
    if (kind == "direct_mse")
        return model::DirectMse{mat_from_json(j.at("a")), j.at("alpha").get<double>()};
    if (kind == "weighted_mse")
        return model::WeightedMse{mat_from_json(j.at("a")),
                                  HermitianPsd(mat_from_json(j.at("phi")))};
    if (kind == "kron_mutual_info")
        return model::KronMutualInfo{HermitianPsd(mat_from_json(j.at("phi"))),
                                     HermitianPsd(mat_from_json(j.at("sigma1"))),
                                     HermitianPsd(mat_from_json(j.at("sigma2"))), side_from(j)};
    if (kind == "kron_mse")
        return model::KronMse{HermitianPsd(mat_from_json(j.at("phi"))),
                              HermitianPsd(mat_from_json(j.at("sigma1"))),
                              HermitianPsd(mat_from_json(j.at("sigma2"))), side_from(j)};
    if (kind == "kron_relay_mse")
        return model::KronRelayMse{mat_from_json(j.at("a")),
                                   HermitianPsd(mat_from_json(j.at("sigma1"))),
                                   HermitianPsd(mat_from_json(j.at("sigma2"))), side_from(j)};
    throw InvalidInput("json: unknown objective kind " + kind);
}

} // namespace

model::ScalarVectorFn named_schur(const std::string& name) {
    model::ScalarVectorFn f;
    f.declared_increasing = true;
    f.name = name;
    if (name == "max") {
        f.fn = [](const RVec& x) { return x.maxCoeff(); };
    } else if (name == "sum") {
        f.fn = [](const RVec& x) { return x.sum(); };
    } else if (name == "sum_log") {
        f.fn = [](const RVec& x) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += std::log(std::max(x(i), 1e-300));
            return s;
        };
    } else if (name == "min") {
        f.fn = [](const RVec& x) { return x.minCoeff(); };
    } else {
        throw InvalidInput("named_schur: unknown handle " + name +
                           " (known: max, sum, sum_log, min)");
    }
    return f;
}

std::string scenario_to_json(const model::Scenario& s) {
    json out;
    out["schema"] = "matmono-scenario-1";
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, model::PerfectCsi>) {
                out["regime"] = "perfect";
                out["h_hat"] = mat_to_json(r.h);
            } else if constexpr (std::is_same_v<T, model::BayesCsi>) {
                out["regime"] = "bayes";
                out["h_hat"] = mat_to_json(r.h_hat);
                out["psi"] = mat_to_json(r.psi.mat());
            } else if constexpr (std::is_same_v<T, model::StochasticCsi>) {
                out["regime"] = "stochastic";
                out["h_hat"] = mat_to_json(r.h_hat);
                out["psi"] = mat_to_json(r.psi_col.mat());
                out["sigma_row"] = mat_to_json(r.sigma_row.mat());
            } else {
                out["regime"] = "worst_case";
                out["h_hat"] = mat_to_json(r.h_hat);
                out["gamma"] = r.gamma;
            }
        },
        s.regime);
    out["noise_var"] = s.noise_var;
    out["streams"] = s.streams;
    out["constraints"] = constraints_to_json(s.constraints);
    out["objective"] = objective_to_json(s.objective);
    return out.dump(2) + "\n";
}

model::Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("json: parse failure: ") + e.what());
    }
    try {
        if (j.value("schema", "") != "matmono-scenario-1")
            throw InvalidInput("json: expected schema matmono-scenario-1");
        model::Scenario s;
        const std::string regime = j.at("regime").get<std::string>();
        const CMat h = mat_from_json(j.at("h_hat"));
        if (regime == "perfect") {
            s.regime = model::PerfectCsi{h};
        } else if (regime == "bayes") {
            s.regime = model::BayesCsi{h, HermitianPsd(mat_from_json(j.at("psi")))};
        } else if (regime == "stochastic") {
            s.regime = model::StochasticCsi{h, HermitianPsd(mat_from_json(j.at("sigma_row"))),
                                            HermitianPsd(mat_from_json(j.at("psi")))};
        } else if (regime == "worst_case") {
            s.regime = model::WorstCaseCsi{h, j.at("gamma").get<double>()};
        } else {
            throw InvalidInput("json: unknown regime " + regime);
        }
        s.noise_var = j.at("noise_var").get<double>();
        s.streams = j.at("streams").get<int>();
        s.constraints = constraints_from_json(j.at("constraints"));
        s.objective = objective_from_json(j.at("objective"));
        return s;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("json: malformed scenario: ") + e.what());
    }
}

std::string solution_to_json(const model::PrecoderSolution& sol, double objective_value) {
    json out;
    out["schema"] = "matmono-solution-1";
    out["x"] = mat_to_json(sol.x());
    out["f"] = mat_to_json(sol.f);
    out["qx"] = mat_to_json(sol.qx);
    out["rotation"] = mat_to_json(sol.rotation);
    out["powers"] = vec_to_json(sol.powers);
    out["weights"] = vec_to_json(sol.weights);
    out["objective"] = objective_value;
    json d;
    d["water_level"] = sol.diagnostics.water_level;
    d["kkt_residual"] = sol.diagnostics.kkt_residual;
    d["comp_slack"] = sol.diagnostics.comp_slack;
    d["feasibility"] = sol.diagnostics.feasibility;
    d["iterations"] = sol.diagnostics.iterations;
    d["converged"] = sol.diagnostics.converged;
    d["suboptimal"] = sol.diagnostics.suboptimal;
    d["high_snr_approx"] = sol.diagnostics.high_snr_approx;
    d["upper_bound_only"] = sol.diagnostics.upper_bound_only;
    out["diagnostics"] = std::move(d);
    return out.dump(2) + "\n";
}

std::string experiment_to_json(const harness::ExperimentConfig& cfg) {
    json out;
    out["schema"] = "matmono-experiment-1";
    out["kind"] = cfg.kind == harness::ExperimentKind::Bayes        ? "bayes"
                  : cfg.kind == harness::ExperimentKind::Stochastic ? "stochastic"
                                                                    : "worst_case";
    out["sweep"] = harness::sweep_var_name(cfg.sweep);
    out["grid"] = vec_to_json(cfg.grid);
    out["trials"] = cfg.trials;
    out["seed"] = cfg.seed;
    out["baselines"] = cfg.baselines;
    out["nt"] = cfg.nt;
    out["nr"] = cfg.nr;
    out["streams"] = cfg.streams;
    out["p_t"] = cfg.p_t;
    out["snr_db"] = cfg.snr_db;
    out["sigma_e2"] = cfg.sigma_e2;
    out["p_corr"] = cfg.p_corr;
    out["s_rel"] = cfg.s_rel;
    out["constraint"] = cfg.constraint;
    out["objective"] = cfg.objective;
    return out.dump(2) + "\n";
}

harness::ExperimentConfig experiment_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("json: parse failure: ") + e.what());
    }
    try {
        if (j.value("schema", "") != "matmono-experiment-1")
            throw InvalidInput("json: expected schema matmono-experiment-1");
        harness::ExperimentConfig cfg;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "bayes")
            cfg.kind = harness::ExperimentKind::Bayes;
        else if (kind == "stochastic")
            cfg.kind = harness::ExperimentKind::Stochastic;
        else if (kind == "worst_case")
            cfg.kind = harness::ExperimentKind::WorstCase;
        else
            throw InvalidInput("json: unknown experiment kind " + kind);
        const std::string sweep = j.value("sweep", "none");
        if (sweep == "sigma_e2")
            cfg.sweep = harness::SweepVar::SigmaE2;
        else if (sweep == "snr_db")
            cfg.sweep = harness::SweepVar::SnrDb;
        else if (sweep == "s_rel")
            cfg.sweep = harness::SweepVar::SRel;
        else if (sweep == "none")
            cfg.sweep = harness::SweepVar::None;
        else
            throw InvalidInput("json: unknown sweep variable " + sweep);
        cfg.grid = vec_from_json(j.at("grid"));
        cfg.trials = j.at("trials").get<long>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.baselines = j.at("baselines").get<std::vector<std::string>>();
        cfg.nt = j.value("nt", 4);
        cfg.nr = j.value("nr", 4);
        cfg.streams = j.value("streams", 2);
        cfg.p_t = j.value("p_t", 1.0);
        cfg.snr_db = j.value("snr_db", 10.0);
        cfg.sigma_e2 = j.value("sigma_e2", 0.1);
        cfg.p_corr = j.value("p_corr", 0.5);
        cfg.s_rel = j.value("s_rel", 0.3);
        cfg.constraint = j.value("constraint", "per_antenna");
        cfg.objective = j.value("objective", "mse");
        return cfg;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("json: malformed experiment: ") + e.what());
    }
}

} // namespace matmono::serialize
