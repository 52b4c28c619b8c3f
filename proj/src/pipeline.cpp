#include "npbandit/pipeline.hpp"

#include <optional>

#include "npbandit/errors.hpp"

namespace npbandit {

PipelineResult run_pipeline(Oracle& oracle, const PolicySet& set, std::int64_t n, const DesignParams& params,
                            const PipelineOptions& options) {
    if (n < 1) throw InvalidArgument("run_pipeline: n must be >= 1");
    const LinearMap& map = oracle.map();
    std::optional<WhitenedDecomposition> local;
    if (options.decomposition == nullptr) local = whiten(map);
    const WhitenedDecomposition& decomp = options.decomposition ? *options.decomposition : *local;

    PipelineResult out;
    out.plan = design_queries(n, decomp, map.policy_spectrum(), params.J);
    out.plan = match_plan(out.plan, set, map.policy_spectrum(), options.collinearity_threshold, options.distinct_matching);

    const QueryDataset data = collect(oracle, out.plan);
    out.estimate = ridge_estimate(data, map, params.lambda_reg);
    if (set.is_unit_ball()) {
        out.policy = plugin_policy(out.estimate, set, map);
    } else {
        const auto idx = optimal_index(out.estimate.reward_hat, set, map);
        out.policy = set.candidates()[idx];
        out.policy_index = static_cast<std::int64_t>(idx);
    }

    const RewardFunction& truth = oracle.reward();
    out.optimal_value = optimal_value(truth, set, map);
    RiskReport& report = out.report;
    report.realized_delta = excess_risk(out.policy, truth, set, map);
    report.n = n;
    report.J = params.J;
    report.lambda_reg = out.estimate.lambda_reg;
    report.seed = oracle.seed();
    report.beta = params.beta;
    if (options.analytics) {
        const auto split = exact_risk_decomposition(truth, out.plan, map, out.estimate.lambda_reg, oracle.noise_variance());
        report.bias_sq = split.bias_sq;
        report.variance = split.variance;
        if (set.is_unit_ball()) {
            report.bound_value = bound_unit_ball(decomp.zeta(), params.J, out.estimate.lambda_reg, oracle.noise_variance(), n);
        } else {
            report.bound_value = bound_general(decomp.zeta(), params.J, out.estimate.lambda_reg, oracle.noise_variance(), n);
        }
        if (params.beta > 0.0) {
            report.rate_exponent = power_law_exponent(
                params.beta, set.is_unit_ball() ? PolicySetCase::unit_ball : PolicySetCase::general);
        }
    }
    return out;
}

}  // namespace npbandit
