#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npbandit/baselines.hpp"
#include "npbandit/config.hpp"
#include "npbandit/kernel_mab.hpp"

namespace npbandit {

enum class ExperimentKind { scaling, dim_sweep, compare_baselines, kmab, kmab_regret, bounds };

ExperimentKind parse_experiment(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Parsed, validated experiment configuration. Unknown keys are ConfigErrors.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::scaling;
    KeyValues raw;

    // Power-law instance.
    double beta_pi = 1.75;
    double beta_r = 1.0;
    /// sigma_j = j^{-map_beta}; 0 gives M = I.
    double map_beta = 0.0;
    Index d = 8192;
    std::vector<Index> d_grid;
    double tau_sq = 0.01;
    RewardPrior reward_prior = RewardPrior::ellipsoid;

    std::vector<std::int64_t> n_grid;
    std::vector<std::int64_t> T_grid;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir = ".";
    /// On a failed cell, write completed cells to `<kind>_partial.csv` in output_dir.
    bool flush_partial = false;

    // Baselines.
    std::optional<Index> num_arms;
    double confidence_scale = 2.0;

    // Kernel bandit.
    KernelSpec kernel;
    Index domain_dim = 1;
    double epsilon = 0.1;
    std::optional<double> alpha;
    double collinearity_threshold = 0.0;
};

ExperimentConfig parse_experiment_config(ExperimentKind kind, const KeyValues& raw);
ExperimentConfig load_experiment_config(ExperimentKind kind, const std::filesystem::path& path);

/// Keys accepted by each experiment (used for --help and validation).
std::vector<std::string> allowed_keys(ExperimentKind kind);

struct SlopeFit {
    bool applicable = false;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// OLS fit of log y against log x; not applicable for fewer than two points
/// or non-positive values.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct MeanStat {
    double mean = 0.0;
    double stderr_ = 0.0;
};
MeanStat mean_and_stderr(const std::vector<double>& values);

struct ScalingResult {
    double beta = 0.0;
    std::vector<std::int64_t> n;
    std::vector<Index> J;
    std::vector<double> lambda_reg;
    std::vector<MeanStat> delta;
    SlopeFit fit;
    double theory_exponent = 0.0;
    std::optional<double> gp_ucb_exponent;
    /// All cells ordered by (n, seed).
    std::vector<RiskReport> cells;
};

struct DimSweepResult {
    std::vector<Index> d;
    std::vector<std::int64_t> n;
    /// delta[i][k] for d[i], n[k].
    std::vector<std::vector<MeanStat>> delta;
    bool ordering_holds = true;
    /// Relative change of mean Delta between the two largest d, per n.
    std::vector<double> plateau_change;
};

struct MethodCurve {
    std::string method;
    std::vector<std::int64_t> x;
    std::vector<MeanStat> y;
    SlopeFit fit;
};

struct CompareResult {
    double beta = 0.0;
    std::vector<MethodCurve> curves;
    double plugin_exponent = 0.0;
    std::optional<double> gp_ucb_exponent;
};

struct KmabSweepResult {
    std::vector<std::int64_t> n;
    std::vector<MeanStat> delta;
    std::vector<double> mean_cover_size;
    std::vector<double> mean_beta;
    SlopeFit fit;
};

struct KmabRegretResult {
    double alpha = 0.0;
    std::vector<MethodCurve> curves;
    double theory_exponent = 0.0;
};

struct BoundsRow {
    std::int64_t n = 0;
    Index J = 0;
    double lambda_reg = 0.0;
    double bound = 0.0;
    double rate = 0.0;
};

struct BoundsResult {
    double beta = 0.0;
    std::vector<BoundsRow> rows;
};

/// Cells are independent; `jobs` workers evaluate them and results are
/// gathered by (grid point, seed) so output never depends on scheduling.
ScalingResult scaling_experiment(const ExperimentConfig& config, int jobs = 1);
DimSweepResult dim_sweep(const ExperimentConfig& config, int jobs = 1);
CompareResult compare_baselines(const ExperimentConfig& config, int jobs = 1);
KmabSweepResult kmab_sweep(const ExperimentConfig& config, int jobs = 1);
KmabRegretResult kmab_regret(const ExperimentConfig& config, int jobs = 1);
BoundsResult bounds_experiment(const ExperimentConfig& config);

/// ETC exploration exponent alpha with 1/(1+alpha) = (4nu + d(6+4d)) / (6nu + d(7+4d)).
double matern_etc_alpha(double nu, Index d);

/// Hash of the configuration that determines the data (output_dir excluded).
std::string data_hash(const ExperimentConfig& config);

/// CLI exit status for an exception escaping an experiment: 2 for
/// configuration problems, 3 for numerical failures, 1 otherwise.
int exit_code_for(const std::exception& e);

/// Run one experiment and write `<kind>.csv` and `<kind>_report.txt` into
/// config.output_dir. Returns the text report.
std::string run_and_write(const ExperimentConfig& config, int jobs = 1);

}  // namespace npbandit
