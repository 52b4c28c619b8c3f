#pragma once

#include <cstdint>
#include <vector>

#include "npbandit/bandit_env.hpp"
#include "npbandit/query_design.hpp"

namespace npbandit {

/// Observations grouped by distinct queried policy: policy i was asked
/// counts[i] times and its responses sum to response_sums[i].
class QueryDataset {
public:
    /// Register a policy with no observations yet; returns its slot.
    std::size_t add_policy(Policy policy);
    void record(std::size_t slot, double response);
    /// Shorthand for a single (policy, response) pair in its own slot.
    void add(Policy policy, double response);

    [[nodiscard]] const std::vector<Policy>& policies() const noexcept { return policies_; }
    [[nodiscard]] const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] const std::vector<double>& response_sums() const noexcept { return sums_; }
    [[nodiscard]] std::int64_t n() const noexcept { return n_; }

private:
    std::vector<Policy> policies_;
    std::vector<std::int64_t> counts_;
    std::vector<double> sums_;
    std::int64_t n_ = 0;
};

/// Query every direction of the plan repeats[j] times.
QueryDataset collect(Oracle& oracle, const QueryPlan& plan);

struct RidgeEstimate {
    RewardFunction reward_hat;
    double lambda_reg = 0.0;
    std::int64_t n = 0;
    /// True when A is diagonal and stored in `system_diagonal`.
    bool diagonal_system = false;
    Vector system_diagonal;
    Matrix system_dense;

    /// A = M Sigma_Q M^T S_r + lambda I, materialized.
    [[nodiscard]] Matrix system_matrix() const;
};

/// Closed-form ridge estimate r = A^{-1} (1/n) sum_i y_i M pi_i. A requested
/// lambda of 0 is raised to 1e-12. Condition numbers above 1e14 raise NumericalFailure.
RidgeEstimate ridge_estimate(const QueryDataset& data, const LinearMap& map, double lambda_reg);

/// argmax over C_pi of F(., r_hat).
Policy plugin_policy(const RidgeEstimate& estimate, const PolicySet& set, const LinearMap& map);

}  // namespace npbandit
