#include "npbandit/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

void RegretTrace::push(std::int64_t arm, double value) {
    values.push_back(value);
    chosen_arms.push_back(arm);
    const double prev = cumulative_regret.empty() ? 0.0 : cumulative_regret.back();
    cumulative_regret.push_back(prev + (best_value - value));
    ++T;
}

void write_trace(const std::filesystem::path& path, const RegretTrace& trace) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    out << "round,chosen_arm,f_value,cum_regret\n";
    for (std::size_t t = 0; t < trace.values.size(); ++t) {
        out << fmt::format("{},{},{},{}\n", t + 1, trace.chosen_arms[t], csv::format_double(trace.values[t]),
                           csv::format_double(trace.cumulative_regret[t]));
    }
}

GpUcbResult gp_ucb_run(Oracle& oracle, const std::vector<Policy>& arms, std::int64_t T, double confidence_scale) {
    if (arms.empty()) throw InvalidArgument("gp_ucb_run needs at least one arm");
    if (T < 1) throw InvalidArgument("gp_ucb_run: T must be >= 1");
    const LinearMap& map = oracle.map();
    const auto n_arms = static_cast<Index>(arms.size());
    constexpr double kJitter = 1e-10;

    // Whitened images S_r^{1/2} M a make the kernel a plain Gram matrix.
    Matrix features(map.reward_dim(), n_arms);
    const Vector inv_sqrt_mu_r = map.reward_spectrum().eigenvalues().cwiseSqrt().cwiseInverse();
    Vector f(n_arms);
    for (Index a = 0; a < n_arms; ++a) {
        features.col(a) = map.apply(arms[static_cast<std::size_t>(a)].coefficients).cwiseProduct(inv_sqrt_mu_r);
        f(a) = evaluate(arms[static_cast<std::size_t>(a)], oracle.reward(), map);
    }
    const Matrix gram = features.transpose() * features;
    const double noise = oracle.noise_variance() + kJitter;

    GpUcbResult out;
    out.trace.best_value = f.maxCoeff();

    // Row t of v holds L^{-1} k(history, a) for every arm a, where L is the
    // Cholesky factor of the history Gram matrix plus noise.
    Matrix v(T, n_arms);
    std::vector<double> z;  // L^{-1} y
    z.reserve(static_cast<std::size_t>(T));
    Vector mean = Vector::Zero(n_arms);
    Vector explained = Vector::Zero(n_arms);  // ||V_a||^2

    for (std::int64_t t = 0; t < T; ++t) {
        Index pick = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Index a = 0; a < n_arms; ++a) {
            const double var = std::max(gram(a, a) - explained(a), 0.0);
            const double score = mean(a) + confidence_scale * std::sqrt(var);
            if (score > best_score) {
                best_score = score;
                pick = a;
            }
        }
        const double y = oracle.query(arms[static_cast<std::size_t>(pick)]);
        out.trace.push(pick, f(pick));

        // New Cholesky row: l = V_pick (first t entries), diagonal from the Schur complement.
        const double diag = std::sqrt(std::max(gram(pick, pick) + noise - explained(pick), kJitter));
        const Index rows = static_cast<Index>(t);
        const Vector l = v.topRows(rows).col(pick);
        double zt = y;
        for (Index s = 0; s < rows; ++s) zt -= l(s) * z[static_cast<std::size_t>(s)];
        zt /= diag;
        z.push_back(zt);
        Eigen::RowVectorXd row = gram.row(pick);
        if (rows > 0) row.noalias() -= l.transpose() * v.topRows(rows);
        row /= diag;
        v.row(rows) = row;
        mean += zt * row.transpose();
        explained += row.transpose().cwiseAbs2();
    }

    Index rec = 0;
    for (Index a = 1; a < n_arms; ++a) {
        if (mean(a) > mean(rec)) rec = a;
    }
    out.recommended_arm = static_cast<std::size_t>(rec);
    out.posterior_mean = mean;
    out.recommendation = arms[out.recommended_arm];
    return out;
}

std::int64_t exploration_length(std::int64_t T, double alpha) {
    if (T < 1) throw InvalidArgument("exploration_length: T must be >= 1");
    if (!(alpha > 0.0)) throw InvalidArgument("exploration_length: alpha must be > 0");
    const double raw = std::pow(static_cast<double>(T), 1.0 / (1.0 + alpha));
    // Guard against pow landing a hair above an exact integer.
    const double nearest = std::round(raw);
    const double value = std::abs(raw - nearest) < 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(value), 1, T);
}

RegretTrace explore_then_commit(const PipelineFn& pipeline, Oracle& oracle, std::int64_t T, double alpha) {
    const std::int64_t explore = exploration_length(T, alpha);
    const PipelineResult batch = pipeline(oracle, explore);
    const LinearMap& map = oracle.map();
    const RewardFunction& truth = oracle.reward();

    RegretTrace trace;
    trace.best_value = batch.optimal_value;
    for (std::size_t j = 0; j < batch.plan.directions.size(); ++j) {
        const double value = evaluate(batch.plan.directions[j], truth, map);
        for (std::int64_t r = 0; r < batch.plan.repeats[j]; ++r) trace.push(batch.plan.source_index[j], value);
    }
    const double commit_value = evaluate(batch.policy, truth, map);
    while (trace.T < T) trace.push(batch.policy_index, commit_value);
    return trace;
}

BaselineResult random_query_baseline(Oracle& oracle, const PolicySet& set, std::int64_t n, double lambda_reg,
                                     std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("random_query_baseline: n must be >= 1");
    const LinearMap& map = oracle.map();
    Engine engine = make_engine(seed, StreamTag::random_queries);
    QueryDataset data;
    if (set.is_unit_ball()) {
        for (std::int64_t i = 0; i < n; ++i) {
            Policy p = random_unit_policy(map.policy_spectrum(), engine);
            const double y = oracle.query(p);
            data.add(std::move(p), y);
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, set.candidates().size() - 1);
        std::vector<std::int64_t> slot(set.candidates().size(), -1);
        for (std::int64_t i = 0; i < n; ++i) {
            const auto c = pick(engine);
            if (slot[c] < 0) slot[c] = static_cast<std::int64_t>(data.add_policy(set.candidates()[c]));
            data.record(static_cast<std::size_t>(slot[c]), oracle.query(set.candidates()[c]));
        }
    }
    const RidgeEstimate est = ridge_estimate(data, map, lambda_reg);
    BaselineResult out;
    out.policy = plugin_policy(est, set, map);
    out.report.realized_delta = excess_risk(out.policy, oracle.reward(), set, map);
    out.report.n = n;
    out.report.J = static_cast<Index>(data.policies().size());
    out.report.lambda_reg = est.lambda_reg;
    out.report.seed = seed;
    return out;
}

}  // namespace npbandit
