#pragma once

#include <cstdint>
#include <optional>

#include "npbandit/estimation.hpp"
#include "npbandit/query_design.hpp"
#include "npbandit/risk_analysis.hpp"

namespace npbandit {

struct PipelineOptions {
    /// Minimum c^2 accepted when matching directions to a finite policy set.
    double collinearity_threshold = 0.5;
    /// Match every direction to a different candidate.
    bool distinct_matching = false;
    /// Compute the analytic bias/variance split and bound (needs r*, which a
    /// simulation oracle exposes).
    bool analytics = true;
    /// Precomputed whitening of the oracle's map; recomputed when absent.
    const WhitenedDecomposition* decomposition = nullptr;
};

struct PipelineResult {
    Policy policy;
    /// Candidate index of `policy` in a finite set, -1 for the unit ball.
    std::int64_t policy_index = -1;
    RiskReport report;
    QueryPlan plan;
    RidgeEstimate estimate;
    /// max over C_pi of F(., r*).
    double optimal_value = 0.0;
};

/// Design, query, ridge fit, plug-in and excess risk in one pass.
PipelineResult run_pipeline(Oracle& oracle, const PolicySet& set, std::int64_t n, const DesignParams& params,
                            const PipelineOptions& options = {});

}  // namespace npbandit
