#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "npbandit/rng.hpp"
#include "npbandit/spectral_core.hpp"

namespace npbandit {

/// Reward coefficients r in the aligned reward eigenbasis.
struct RewardFunction {
    Vector coefficients;
};

/// Policy coefficients pi in the aligned policy eigenbasis.
struct Policy {
    Vector coefficients;
};

/// The feasible set C_pi: either the H_pi unit ball or a finite candidate list.
class PolicySet {
public:
    enum class Kind { unit_ball, finite };

    static PolicySet unit_ball();
    /// Every candidate must satisfy ||pi||_pi <= 1 + 1e-10.
    static PolicySet finite(std::vector<Policy> candidates, const Spectrum& policy_spectrum,
                            std::optional<double> collinearity_constant = std::nullopt);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_unit_ball() const noexcept { return kind_ == Kind::unit_ball; }
    [[nodiscard]] const std::vector<Policy>& candidates() const noexcept { return candidates_; }
    [[nodiscard]] std::optional<double> collinearity_constant() const noexcept { return collinearity_; }

private:
    PolicySet(Kind kind, std::vector<Policy> candidates, std::optional<double> collinearity)
        : kind_(kind), candidates_(std::move(candidates)), collinearity_(collinearity) {}

    Kind kind_;
    std::vector<Policy> candidates_;
    std::optional<double> collinearity_;
};

/// Noisy zeroth-order access to F(., r*). Holds its own generator, so one
/// Oracle must not be shared between threads.
class Oracle {
public:
    Oracle(RewardFunction reward, LinearMap map, double noise_variance, std::uint64_t seed);

    /// F(pi, r*) + eps, eps ~ N(0, tau^2).
    double query(const Policy& policy);

    [[nodiscard]] const RewardFunction& reward() const noexcept { return reward_; }
    [[nodiscard]] const LinearMap& map() const noexcept { return map_; }
    [[nodiscard]] double noise_variance() const noexcept { return noise_variance_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::int64_t queries_made() const noexcept { return queries_; }

private:
    RewardFunction reward_;
    LinearMap map_;
    double noise_variance_;
    std::uint64_t seed_;
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::int64_t queries_ = 0;
};

/// F(pi, r) = r^T S_r M pi.
double evaluate(const Policy& policy, const RewardFunction& reward, const LinearMap& map);

double oracle_query(Oracle& oracle, const Policy& policy);

/// unit ball: M*r / ||M*r||_pi. finite: argmax of F(., r), lowest index on ties.
Policy optimal_policy(const RewardFunction& reward, const PolicySet& set, const LinearMap& map);

/// Index of the maximizing candidate for a finite set.
std::size_t optimal_index(const RewardFunction& reward, const PolicySet& set, const LinearMap& map);

/// max over C_pi of F(., r).
double optimal_value(const RewardFunction& reward, const PolicySet& set, const LinearMap& map);

/// Delta = F(pi*, r) - F(candidate, r); values in [-1e-10, 0) are reported as 0.
double excess_risk(const Policy& candidate, const RewardFunction& reward, const PolicySet& set, const LinearMap& map);

enum class RewardPrior {
    /// Standard Gaussian in whitened coordinates, normalized: uniform on the H_r unit sphere.
    sphere,
    /// Uniform direction in the Mercer ellipsoid {sum_j r_j^2 / mu_j^2 <= 1}, rescaled to
    /// ||r||_r = 1. Coefficient j carries whitened variance mu_j.
    ellipsoid,
};

RewardPrior parse_reward_prior(const std::string& name);
std::string to_string(RewardPrior prior);

/// A ground-truth reward with ||r||_r = 1.
RewardFunction sample_reward(const Spectrum& spectrum, std::uint64_t seed, RewardPrior prior = RewardPrior::sphere);

/// A uniformly random point of the H_pi unit sphere.
Policy random_unit_policy(const Spectrum& spectrum, Engine& engine);

// Coefficient CSV: a header line `space=<name>,dim=<d>` followed by one
// coefficient per line.
void write_coefficients(const std::filesystem::path& path, const std::string& space, const Vector& coefficients);
Vector read_coefficients(const std::filesystem::path& path, const std::string& expected_space);

inline void write_reward(const std::filesystem::path& path, const RewardFunction& r) { write_coefficients(path, "reward", r.coefficients); }
inline void write_policy(const std::filesystem::path& path, const Policy& p) { write_coefficients(path, "policy", p.coefficients); }
inline RewardFunction read_reward(const std::filesystem::path& path) { return {read_coefficients(path, "reward")}; }
inline Policy read_policy(const std::filesystem::path& path) { return {read_coefficients(path, "policy")}; }

}  // namespace npbandit
