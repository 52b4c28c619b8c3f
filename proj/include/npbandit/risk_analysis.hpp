#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "npbandit/bandit_env.hpp"
#include "npbandit/query_design.hpp"

namespace npbandit {

struct RiskReport {
    double realized_delta = 0.0;
    /// Analytic fields are only present in simulation mode, where r* is known.
    std::optional<double> bias_sq;
    std::optional<double> variance;
    std::optional<double> bound_value;
    std::optional<double> rate_exponent;
    std::int64_t n = 0;
    Index J = 0;
    double lambda_reg = 0.0;
    std::uint64_t seed = 0;
    double beta = 0.0;
};

/// Header row for `report_csv_row`.
std::string report_csv_header();
/// n, J, lambda_reg, seed, delta, bias_sq, variance (absent fields left empty).
std::string report_csv_row(const RiskReport& report);

struct RiskDecomposition {
    double bias_sq = 0.0;
    double variance = 0.0;
    [[nodiscard]] double total() const { return bias_sq + variance; }
};

/// Expected ||M*(r* - r_hat)||_pi^2 for the ridge estimate fitted on `plan`,
/// split as lambda^2 ||M* A^{-1} r*||_pi^2 + (tau^2/n) tr[S_pi G Sigma_Q G^T],
/// G = M* A^{-1} M.
RiskDecomposition exact_risk_decomposition(const RewardFunction& reward, const QueryPlan& plan, const LinearMap& map,
                                           double lambda_reg, double tau_sq);

/// (1 + tau^2/(n lambda^2)) * max{ sup_{j<=J} lambda^2 J^2 zeta_j / (zeta_j^2 + lambda^2 J^2), sup_{j>J} zeta_j },
/// with the universal constant taken as 1 and an empty supremum as 0.
double bound_unit_ball(const Vector& zeta, Index J, double lambda_reg, double tau_sq, std::int64_t n);

/// Same maximand, read as a bound on the squared excess risk.
double bound_general(const Vector& zeta, Index J, double lambda_reg, double tau_sq, std::int64_t n);

enum class PolicySetCase { unit_ball, general };

/// Exponent of n in power_law_rate: -beta/(beta+2), halved for general sets.
double power_law_exponent(double beta, PolicySetCase which);
double power_law_rate(double beta, std::int64_t n, PolicySetCase which);

/// Exponent -(beta-1)/(2(beta+1)); beta must exceed 1.
double gp_ucb_exponent(double beta);
double gp_ucb_rate(double beta, std::int64_t n);

struct InformationGain {
    double gamma = 0.0;
    Vector allocation;
    /// Marginal value lambda shared by every supported direction.
    double water_level = 0.0;
};

/// Water-filling: m_j = max(1/lambda - 1/lambda_j, 0) with sum m_j = T,
/// gamma = 1/2 sum log(1 + m_j lambda_j).
InformationGain information_gain(const Vector& eigenvalues, double T);

}  // namespace npbandit
