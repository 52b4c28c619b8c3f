#include "npbandit/bandit_env.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

PolicySet PolicySet::unit_ball() { return PolicySet(Kind::unit_ball, {}, std::nullopt); }

PolicySet PolicySet::finite(std::vector<Policy> candidates, const Spectrum& policy_spectrum,
                            std::optional<double> collinearity_constant) {
    if (candidates.empty()) throw InvalidArgument("a finite policy set needs at least one candidate");
    if (collinearity_constant && !(*collinearity_constant > 0.0 && *collinearity_constant <= 1.0)) {
        throw InvalidArgument(fmt::format("collinearity constant must lie in (0, 1] (got {})", *collinearity_constant));
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].coefficients.size() != policy_spectrum.dim()) {
            throw InvalidArgument(fmt::format("candidate {} has dimension {}, expected {}", i,
                                              candidates[i].coefficients.size(), policy_spectrum.dim()));
        }
        const double norm = policy_spectrum.norm(candidates[i].coefficients);
        if (!(norm <= 1.0 + 1e-10)) {
            throw InvalidArgument(fmt::format("candidate {} lies outside the unit ball (norm {})", i, norm));
        }
    }
    return PolicySet(Kind::finite, std::move(candidates), collinearity_constant);
}

Oracle::Oracle(RewardFunction reward, LinearMap map, double noise_variance, std::uint64_t seed)
    : reward_(std::move(reward)),
      map_(std::move(map)),
      noise_variance_(noise_variance),
      seed_(seed),
      engine_(make_engine(seed, StreamTag::oracle_noise)) {
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
        throw InvalidArgument(fmt::format("noise variance must be finite and >= 0 (got {})", noise_variance));
    }
    if (reward_.coefficients.size() != map_.reward_dim()) throw InvalidArgument("oracle: reward/map dimension mismatch");
}

double Oracle::query(const Policy& policy) {
    const double value = evaluate(policy, reward_, map_);
    ++queries_;
    // Draw even when tau^2 = 0 so the stream position only depends on the query count.
    const double z = normal_(engine_);
    return noise_variance_ > 0.0 ? value + std::sqrt(noise_variance_) * z : value;
}

double evaluate(const Policy& policy, const RewardFunction& reward, const LinearMap& map) {
    if (policy.coefficients.size() != map.policy_dim()) {
        throw InvalidArgument(fmt::format("evaluate: policy has dimension {}, map expects {}", policy.coefficients.size(),
                                          map.policy_dim()));
    }
    if (reward.coefficients.size() != map.reward_dim()) {
        throw InvalidArgument(fmt::format("evaluate: reward has dimension {}, map expects {}", reward.coefficients.size(),
                                          map.reward_dim()));
    }
    return map.reward_spectrum().inner(reward.coefficients, map.apply(policy.coefficients));
}

double oracle_query(Oracle& oracle, const Policy& policy) { return oracle.query(policy); }

std::size_t optimal_index(const RewardFunction& reward, const PolicySet& set, const LinearMap& map) {
    if (set.is_unit_ball()) throw InvalidArgument("optimal_index needs a finite policy set");
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.candidates().size(); ++i) {
        const double value = evaluate(set.candidates()[i], reward, map);
        if (value > best_value) {
            best_value = value;
            best = i;
        }
    }
    return best;
}

Policy optimal_policy(const RewardFunction& reward, const PolicySet& set, const LinearMap& map) {
    if (!set.is_unit_ball()) return set.candidates()[optimal_index(reward, set, map)];
    const Vector direction = map.apply_adjoint(reward.coefficients);
    const double norm = map.policy_spectrum().norm(direction);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateInstance("M* r = 0: every unit-ball policy is optimal");
    return {direction / norm};
}

double optimal_value(const RewardFunction& reward, const PolicySet& set, const LinearMap& map) {
    if (!set.is_unit_ball()) return evaluate(set.candidates()[optimal_index(reward, set, map)], reward, map);
    const double norm = map.policy_spectrum().norm(map.apply_adjoint(reward.coefficients));
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateInstance("M* r = 0: every unit-ball policy is optimal");
    return norm;
}

double excess_risk(const Policy& candidate, const RewardFunction& reward, const PolicySet& set, const LinearMap& map) {
    const double delta = optimal_value(reward, set, map) - evaluate(candidate, reward, map);
    if (delta < 0.0 && delta >= -1e-10) return 0.0;
    return delta;
}

RewardPrior parse_reward_prior(const std::string& name) {
    if (name == "sphere") return RewardPrior::sphere;
    if (name == "ellipsoid") return RewardPrior::ellipsoid;
    throw ConfigError(fmt::format("unknown reward prior '{}' (expected sphere | ellipsoid)", name));
}

std::string to_string(RewardPrior prior) { return prior == RewardPrior::sphere ? "sphere" : "ellipsoid"; }

RewardFunction sample_reward(const Spectrum& spectrum, std::uint64_t seed, RewardPrior prior) {
    Engine engine = make_engine(seed, StreamTag::reward);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u(spectrum.dim());
    for (Index j = 0; j < u.size(); ++j) u(j) = normal(engine);
    if (prior == RewardPrior::ellipsoid) u = u.cwiseProduct(spectrum.eigenvalues().cwiseSqrt());
    const double norm = u.norm();
    if (!(norm > 0.0)) throw NumericalFailure("sample_reward drew a zero vector");
    return {spectrum.unwhiten(u / norm)};
}

Policy random_unit_policy(const Spectrum& spectrum, Engine& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u(spectrum.dim());
    double norm = 0.0;
    while (!(norm > 0.0)) {
        for (Index j = 0; j < u.size(); ++j) u(j) = normal(engine);
        norm = u.norm();
    }
    return {spectrum.unwhiten(u / norm)};
}

void write_coefficients(const std::filesystem::path& path, const std::string& space, const Vector& coefficients) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    out << fmt::format("space={},dim={}\n", space, coefficients.size());
    for (Index j = 0; j < coefficients.size(); ++j) out << csv::format_double(coefficients(j)) << '\n';
}

Vector read_coefficients(const std::filesystem::path& path, const std::string& expected_space) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
    std::string header;
    std::getline(in, header);
    const auto fields = csv::split(header);
    const std::string space_prefix = "space=";
    const std::string dim_prefix = "dim=";
    if (fields.size() != 2 || fields[0].rfind(space_prefix, 0) != 0 || fields[1].rfind(dim_prefix, 0) != 0) {
        throw InvalidArgument(fmt::format("'{}': malformed header '{}'", path.string(), header));
    }
    const std::string space = fields[0].substr(space_prefix.size());
    if (space != expected_space) {
        throw InvalidArgument(fmt::format("'{}': expected space '{}', found '{}'", path.string(), expected_space, space));
    }
    const long dim = std::stol(fields[1].substr(dim_prefix.size()));
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        values.push_back(std::stod(line));
    }
    if (static_cast<long>(values.size()) != dim) {
        throw InvalidArgument(fmt::format("'{}': header says dim={}, found {} values", path.string(), dim, values.size()));
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace npbandit
