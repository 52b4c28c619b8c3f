#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "npbandit/bandit_env.hpp"
#include "npbandit/spectral_core.hpp"

namespace npbandit {

/// Passive query set: J policies, policy j asked repeats[j] times.
struct QueryPlan {
    std::vector<Policy> directions;
    std::vector<std::int64_t> repeats;
    Index J = 0;
    std::int64_t n = 0;
    /// Position j of the whitened eigen-direction each query was designed from.
    std::vector<Index> direction_index;
    /// Candidate index in a finite policy set, or -1 when the designed
    /// direction is queried as is.
    std::vector<std::int64_t> source_index;
    /// Achieved |cos| in H_pi between the queried policy and its designed direction.
    std::vector<double> collinearity;
};

struct DesignParams {
    Index J = 1;
    double lambda_reg = 1.0;
    double beta = 0.0;
};

/// J = round(n^{1/(beta+2)}) clamped to [1, min(n, max_J)], lambda = n^{-(beta+1)/(beta+2)}.
DesignParams choose_params(std::int64_t n, double beta, std::optional<Index> max_J = std::nullopt);

/// pi_j = S_pi^{-1/2} phi_j for the top-J directions; each is repeated
/// floor(n/J) times and the n mod J leftovers go one each to the leading directions.
QueryPlan design_queries(std::int64_t n, const WhitenedDecomposition& decomp, const Spectrum& policy_spectrum, Index J);

struct MatchResult {
    Policy policy;
    std::int64_t candidate_index = -1;
    double collinearity = 1.0;
};

/// Candidate with the largest |cos| to `direction` in H_pi (lowest index on
/// ties). Throws AssumptionViolated naming `direction_index` when c^2 < threshold.
MatchResult match_to_policy_set(const Policy& direction, const PolicySet& set, const Spectrum& policy_spectrum,
                                double threshold = 0.5, std::size_t direction_index = 0);

/// Match every planned direction. With `distinct`, directions are matched in
/// plan order and a candidate already taken is skipped.
QueryPlan match_plan(const QueryPlan& plan, const PolicySet& set, const Spectrum& policy_spectrum, double threshold = 0.5,
                     bool distinct = false);

/// Negated OLS slope of log zeta_j against log j (j from 1).
double fit_decay_exponent(const Vector& zeta);

/// fit_decay_exponent over the first min(size, 200) composite eigenvalues.
double fitted_beta(const WhitenedDecomposition& decomp);

/// Rows: direction_index, repeat_count, coefficients...
void write_plan(const std::filesystem::path& path, const QueryPlan& plan);

}  // namespace npbandit
