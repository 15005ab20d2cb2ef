#pragma once

#include <map>
#include <string>
#include <vector>

#include "matmono/robust.hpp"

namespace matmono::harness {

using linalg::CMat;
using linalg::HermitianPsd;
using linalg::RVec;
using structure::SubgradientSchedule;

/// [m]_{ij} = scale * rho^{|i-j|}.
HermitianPsd exp_correlation(Eigen::Index n, double rho, double scale = 1.0);

struct ChannelDraw {
    CMat h_true;
    CMat h_hat;
};

/// Estimated channel CN(0, (1 - sigma_e2) I x I) plus the exponential-model
/// error term; E|H_mn|^2 = 1.
ChannelDraw gen_channel(Eigen::Index nr, Eigen::Index nt, double sigma_e2,
                        const HermitianPsd& psi, std::uint64_t seed);

/// Linear-MMSE sum MSE of the L-stream precoder x over the true channel:
/// Tr((x^H h^H h x / sigma_n2 + I)^{-1}).
double sum_mse(const CMat& h_true, const CMat& x, double sigma_n2);

/// Average sum MSE when both sides hold only the estimate and the error
/// statistics: the receiver's noise floor inflates by Tr(x x^H psi), so the
/// metric is Tr((x^H h_hat^H h_hat x / (sigma_n2 + Tr(x x^H psi)) + I)^{-1}).
double bayes_avg_mse(const CMat& h_hat, const HermitianPsd& psi, const CMat& x, double sigma_n2);

enum class ExperimentKind { Bayes, Stochastic, WorstCase };
enum class SweepVar { SigmaE2, SnrDb, SRel, None };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Bayes;
    SweepVar sweep = SweepVar::SigmaE2;
    RVec grid;
    long trials = 100;
    std::uint64_t seed = 1;
    std::vector<std::string> baselines; // subset of ideal/naive/nonrobust/proposed
    Eigen::Index nt = 4;
    Eigen::Index nr = 4;
    int streams = 2;
    double p_t = 1.0;
    double snr_db = 10.0;  // fixed unless swept
    double sigma_e2 = 0.1; // fixed unless swept
    double p_corr = 0.5;
    double s_rel = 0.3;    // worst-case radius relative to ||h_hat||_2, fixed unless swept
    std::string constraint = "per_antenna"; // per_antenna | joint | sum
    std::string objective = "mse";          // mse | capacity
    SubgradientSchedule sched;
};

void validate_config(const ExperimentConfig& cfg);

struct SweepRow {
    std::string sweep_var;
    double value = 0.0;
    std::string baseline;
    double metric = 0.0;
    double stderr_ = 0.0;
    long trials = 0;
};

/// Per-trial metrics for one grid point (kept for paired comparisons).
struct GridDetail {
    double value = 0.0;
    std::map<std::string, std::vector<double>> metrics;
    long failures = 0;
};

std::vector<GridDetail> run_sweep_detail(const ExperimentConfig& cfg);
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

/// Proposed weighted solution vs the projected-gradient covariance reference
/// on the two-group correlated-weight setup; rows carry baselines
/// oracle/proposed/relgap per grid point.
std::vector<SweepRow> compare_with_oracle(const ExperimentConfig& cfg);

/// header `sweep_var,value,baseline,metric,stderr,trials`, LF endings,
/// 17 significant digits, grid-major then baseline-alphabetical order.
std::string to_csv(const std::vector<SweepRow>& rows);

std::string sweep_var_name(SweepVar v);

} // namespace matmono::harness
