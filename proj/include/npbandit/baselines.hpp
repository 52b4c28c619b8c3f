#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "npbandit/pipeline.hpp"

namespace npbandit {

/// Per-round record of an online run, with regret measured against `best_value`.
struct RegretTrace {
    std::vector<double> values;
    /// Arm index played each round; -1 when the played policy is not from an arm list.
    std::vector<std::int64_t> chosen_arms;
    std::vector<double> cumulative_regret;
    std::int64_t T = 0;
    double best_value = 0.0;

    void push(std::int64_t arm, double value);
    [[nodiscard]] double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

/// Columns: round, chosen_arm, f_value, cum_regret.
void write_trace(const std::filesystem::path& path, const RegretTrace& trace);

struct GpUcbResult {
    Policy recommendation;
    std::size_t recommended_arm = 0;
    RegretTrace trace;
    /// Posterior mean of every arm after the final round.
    Vector posterior_mean;
};

/// GP-UCB over a finite arm list with kernel k(a, b) = <M a, M b>_r and noise
/// tau^2 from the oracle. Each round plays argmax mean + scale * stddev.
GpUcbResult gp_ucb_run(Oracle& oracle, const std::vector<Policy>& arms, std::int64_t T, double confidence_scale = 2.0);

/// Batch learner used by explore_then_commit: runs the passive pipeline with n queries.
using PipelineFn = std::function<PipelineResult(Oracle&, std::int64_t n)>;

/// ceil(T^{1/(1+alpha)}), clamped to [1, T].
std::int64_t exploration_length(std::int64_t T, double alpha);

/// Explore with the pipeline's passive plan for exploration_length(T, alpha)
/// rounds, then play its plug-in policy for the remaining rounds.
RegretTrace explore_then_commit(const PipelineFn& pipeline, Oracle& oracle, std::int64_t T, double alpha);

struct BaselineResult {
    Policy policy;
    RiskReport report;
};

/// n uniformly random queries (unit-ball: H_pi unit sphere; finite: random
/// candidates), then ridge and plug-in. Randomness comes from `seed`.
BaselineResult random_query_baseline(Oracle& oracle, const PolicySet& set, std::int64_t n, double lambda_reg,
                                     std::uint64_t seed);

}  // namespace npbandit
