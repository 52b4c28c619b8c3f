#include "npbandit/query_design.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

DesignParams choose_params(std::int64_t n, double beta, std::optional<Index> max_J) {
    if (n < 1) throw InvalidArgument(fmt::format("choose_params: n must be >= 1 (got {})", n));
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw InvalidArgument(fmt::format("choose_params: beta must be > 0 (got {}); learning is infeasible otherwise", beta));
    }
    const double nn = static_cast<double>(n);
    Index cap = static_cast<Index>(n);
    if (max_J) cap = std::min(cap, *max_J);
    cap = std::max<Index>(cap, 1);
    const auto raw = static_cast<Index>(std::llround(std::pow(nn, 1.0 / (beta + 2.0))));
    DesignParams params;
    params.J = std::clamp<Index>(raw, 1, cap);
    params.lambda_reg = std::pow(nn, -(beta + 1.0) / (beta + 2.0));
    params.beta = beta;
    return params;
}

QueryPlan design_queries(std::int64_t n, const WhitenedDecomposition& decomp, const Spectrum& policy_spectrum, Index J) {
    if (n < 1) throw InvalidArgument("design_queries: n must be >= 1");
    if (decomp.size() != policy_spectrum.dim()) throw InvalidArgument("design_queries: decomposition/spectrum dimension mismatch");
    if (J < 1 || J > policy_spectrum.dim()) {
        throw InvalidArgument(fmt::format("design_queries: J={} must lie in [1, d_pi={}]", J, policy_spectrum.dim()));
    }
    if (J > n) throw InvalidArgument(fmt::format("design_queries: J={} exceeds n={}", J, n));

    QueryPlan plan;
    plan.J = J;
    plan.n = n;
    const std::int64_t base = n / J;
    const std::int64_t leftover = n % J;
    const Vector sqrt_mu = policy_spectrum.eigenvalues().cwiseSqrt();
    for (Index j = 0; j < J; ++j) {
        Vector coeffs;
        if (decomp.is_axis_aligned()) {
            const Index axis = decomp.axis(j);
            coeffs = Vector::Zero(policy_spectrum.dim());
            coeffs(axis) = sqrt_mu(axis);
        } else {
            coeffs = decomp.direction(j).cwiseProduct(sqrt_mu);
        }
        plan.directions.push_back({std::move(coeffs)});
        plan.repeats.push_back(base + (j < leftover ? 1 : 0));
        plan.direction_index.push_back(j);
        plan.source_index.push_back(-1);
        plan.collinearity.push_back(1.0);
    }
    return plan;
}

namespace {

// |cos| in H_pi of each candidate against `direction`.
std::vector<double> abs_cosines(const Policy& direction, const PolicySet& set, const Spectrum& spectrum) {
    const Vector w = direction.coefficients.cwiseQuotient(spectrum.eigenvalues());
    const double dnorm = std::sqrt(direction.coefficients.dot(w));
    if (!(dnorm > 0.0)) throw InvalidArgument("cannot match a zero direction");
    std::vector<double> out;
    out.reserve(set.candidates().size());
    for (const auto& cand : set.candidates()) {
        const double cnorm = spectrum.norm(cand.coefficients);
        out.push_back(cnorm > 0.0 ? std::abs(cand.coefficients.dot(w)) / (dnorm * cnorm) : 0.0);
    }
    return out;
}

void check_threshold(double c, double threshold, std::size_t direction_index) {
    if (c * c < threshold) {
        throw AssumptionViolated(fmt::format("direction {}: best collinearity c={:.4f} gives c^2={:.4f} below threshold {}",
                                             direction_index, c, c * c, threshold),
                                 direction_index);
    }
}

}  // namespace

MatchResult match_to_policy_set(const Policy& direction, const PolicySet& set, const Spectrum& policy_spectrum,
                                double threshold, std::size_t direction_index) {
    if (set.is_unit_ball()) return {direction, -1, 1.0};
    const auto cosines = abs_cosines(direction, set, policy_spectrum);
    std::size_t best = 0;
    for (std::size_t i = 1; i < cosines.size(); ++i) {
        if (cosines[i] > cosines[best]) best = i;
    }
    check_threshold(cosines[best], threshold, direction_index);
    return {set.candidates()[best], static_cast<std::int64_t>(best), cosines[best]};
}

QueryPlan match_plan(const QueryPlan& plan, const PolicySet& set, const Spectrum& policy_spectrum, double threshold,
                     bool distinct) {
    if (set.is_unit_ball()) return plan;
    QueryPlan out = plan;
    std::vector<bool> taken(set.candidates().size(), false);
    for (std::size_t j = 0; j < plan.directions.size(); ++j) {
        MatchResult match;
        if (!distinct) {
            match = match_to_policy_set(plan.directions[j], set, policy_spectrum, threshold, j);
        } else {
            const auto cosines = abs_cosines(plan.directions[j], set, policy_spectrum);
            std::int64_t best = -1;
            for (std::size_t i = 0; i < cosines.size(); ++i) {
                if (taken[i]) continue;
                if (best < 0 || cosines[i] > cosines[static_cast<std::size_t>(best)]) best = static_cast<std::int64_t>(i);
            }
            if (best < 0) {
                throw AssumptionViolated(fmt::format("direction {}: no unused candidate left to match", j), j);
            }
            const auto b = static_cast<std::size_t>(best);
            check_threshold(cosines[b], threshold, j);
            taken[b] = true;
            match = {set.candidates()[b], best, cosines[b]};
        }
        out.directions[j] = std::move(match.policy);
        out.source_index[j] = match.candidate_index;
        out.collinearity[j] = match.collinearity;
    }
    return out;
}

double fit_decay_exponent(const Vector& zeta) {
    if (zeta.size() < 3) throw InvalidArgument("fit_decay_exponent needs at least 3 values");
    const Index m = zeta.size();
    double sx = 0.0, sy = 0.0;
    Vector x(m), y(m);
    for (Index j = 0; j < m; ++j) {
        if (!(zeta(j) > 0.0) || !std::isfinite(zeta(j))) {
            throw InvalidArgument(fmt::format("fit_decay_exponent: entry {} is not positive ({})", j, zeta(j)));
        }
        x(j) = std::log(static_cast<double>(j + 1));
        y(j) = std::log(zeta(j));
        sx += x(j);
        sy += y(j);
    }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0;
    for (Index j = 0; j < m; ++j) {
        sxy += (x(j) - mx) * (y(j) - my);
        sxx += (x(j) - mx) * (x(j) - mx);
    }
    return -sxy / sxx;
}

double fitted_beta(const WhitenedDecomposition& decomp) {
    const Index m = std::min<Index>(decomp.size(), 200);
    return fit_decay_exponent(decomp.zeta().head(m));
}

void write_plan(const std::filesystem::path& path, const QueryPlan& plan) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    const Index d = plan.directions.empty() ? 0 : plan.directions.front().coefficients.size();
    out << "direction_index,repeat_count";
    for (Index k = 0; k < d; ++k) out << ",c" << k;
    out << '\n';
    for (std::size_t j = 0; j < plan.directions.size(); ++j) {
        out << plan.direction_index[j] << ',' << plan.repeats[j];
        for (Index k = 0; k < d; ++k) out << ',' << csv::format_double(plan.directions[j].coefficients(k));
        out << '\n';
    }
}

}  // namespace npbandit
