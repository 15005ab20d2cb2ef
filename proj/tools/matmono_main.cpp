// Command-line front end: design one scenario, validate it, run experiment
// sweeps, or compare the weighted solver against the convex reference.
//
// Exit codes: 0 success, 2 invalid config, 3 infeasible scenario,
// 4 solver non-convergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "matmono/monotone.hpp"
#include "matmono/oracle.hpp"
#include "matmono/robust.hpp"
#include "matmono/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNotConverged = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw matmono::InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw matmono::InvalidInput("cannot write " + path);
    out << text;
}

std::uint64_t seed_override(std::uint64_t fallback) {
    const char* env = std::getenv("MATMONO_SEED");
    if (!env || !*env) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw matmono::InvalidInput("MATMONO_SEED must be a decimal 64-bit integer");
    return static_cast<std::uint64_t>(v);
}

int run_design(const std::string& in_path, const std::string& out_path) {
    const matmono::model::Scenario s = matmono::serialize::scenario_from_json(slurp(in_path));
    const matmono::model::PrecoderSolution sol = matmono::robust::design_scenario(s);
    const double value = matmono::monotone::eval_objective(
        s.objective, sol.x(), matmono::robust::effective_pi(s, sol.f));
    const std::string text = matmono::serialize::solution_to_json(sol, value);
    if (out_path.empty())
        std::cout << text;
    else
        spit(out_path, text);
    if (!sol.diagnostics.converged) {
        std::cerr << "warning: weighting factors did not converge within the iteration budget\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int run_validate(const std::string& in_path) {
    namespace mm = matmono;
    const mm::model::Scenario s = mm::serialize::scenario_from_json(slurp(in_path));
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };

    mm::model::validate_scenario(s);
    report("scenario invariants", true);

    const mm::model::PrecoderSolution sol = mm::robust::design_scenario(s);
    const mm::model::ConstraintCheck chk = mm::model::constraint_satisfied(s.constraints, sol.x());
    report("designed precoder satisfies constraints", chk.ok);

    report("constraints right-unitarily invariant",
           mm::model::right_unitary_invariance_check(s.constraints, sol.x(), 25));

    const mm::linalg::CMat qhq = sol.qx.adjoint() * sol.qx;
    report("inner rotation unitary",
           (qhq - mm::linalg::CMat::Identity(qhq.rows(), qhq.cols())).norm() <= 1e-9 * qhq.rows());

    const mm::linalg::HermitianPsd pi = mm::robust::effective_pi(s, sol.f);
    const double designed = mm::monotone::eval_objective(s.objective, sol.x(), pi);
    mm::Rng rng(99);
    bool beaten = false;
    for (int t = 0; t < 25; ++t) {
        const mm::linalg::CMat q = mm::linalg::random_unitary(sol.qx.rows(), rng);
        if (mm::monotone::eval_objective(s.objective, mm::linalg::CMat(sol.f * q), pi) <
            designed - 1e-8)
            beaten = true;
    }
    report("inner rotation not beaten by sampled rotations", !beaten);

    return failures == 0 ? kExitOk : kExitInfeasible;
}

int run_sweep_cmd(const std::string& in_path, const std::string& out_path, bool oracle_compare) {
    matmono::harness::ExperimentConfig cfg =
        matmono::serialize::experiment_from_json(slurp(in_path));
    cfg.seed = seed_override(cfg.seed);
    const std::vector<matmono::harness::SweepRow> rows =
        oracle_compare ? matmono::harness::compare_with_oracle(cfg)
                       : matmono::harness::run_sweep(cfg);
    const std::string csv = matmono::harness::to_csv(rows);
    if (out_path.empty())
        std::cout << csv;
    else
        spit(out_path, csv);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-monotonic MIMO precoder toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, experiment_path, out_path;

    CLI::App* design = app.add_subcommand("design", "solve one scenario and emit the precoder");
    design->add_option("scenario", scenario_path, "scenario JSON")->required();
    design->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* validate = app.add_subcommand("validate", "run the invariant suite on one scenario");
    validate->add_option("scenario", scenario_path, "scenario JSON")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run an experiment sweep, emit CSV");
    sweep->add_option("experiment", experiment_path, "experiment JSON")->required();
    sweep->add_option("--out", out_path, "output CSV path (default stdout)");

    CLI::App* oc = app.add_subcommand("oracle-compare",
                                      "compare the weighted solver with the convex reference");
    oc->add_option("experiment", experiment_path, "experiment JSON")->required();
    oc->add_option("--out", out_path, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (design->parsed()) return run_design(scenario_path, out_path);
        if (validate->parsed()) return run_validate(scenario_path);
        if (sweep->parsed()) return run_sweep_cmd(experiment_path, out_path, false);
        if (oc->parsed()) return run_sweep_cmd(experiment_path, out_path, true);
    } catch (const matmono::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const matmono::InvalidInput& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const matmono::Unsupported& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const matmono::TooLarge& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const matmono::DegenerateRescaling& e) {
        std::cerr << "solver: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const matmono::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
