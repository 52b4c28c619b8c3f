#include "npbandit/risk_analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

std::string report_csv_header() { return "n,J,lambda_reg,seed,delta,bias_sq,variance"; }

std::string report_csv_row(const RiskReport& r) {
    const auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
    return fmt::format("{},{},{},{},{},{},{}", r.n, r.J, csv::format_double(r.lambda_reg), r.seed,
                       csv::format_double(r.realized_delta), opt(r.bias_sq), opt(r.variance));
}

namespace {

bool plan_is_axis_aligned(const QueryPlan& plan) {
    for (const auto& p : plan.directions) {
        Index nonzero = 0;
        for (Index k = 0; k < p.coefficients.size(); ++k) {
            if (p.coefficients(k) != 0.0) ++nonzero;
        }
        if (nonzero > 1) return false;
    }
    return true;
}

}  // namespace

RiskDecomposition exact_risk_decomposition(const RewardFunction& reward, const QueryPlan& plan, const LinearMap& map,
                                           double lambda_reg, double tau_sq) {
    if (!(lambda_reg > 0.0)) throw InvalidArgument("exact_risk_decomposition: lambda must be > 0");
    if (!(tau_sq >= 0.0)) throw InvalidArgument("exact_risk_decomposition: tau^2 must be >= 0");
    if (plan.n < 1 || plan.directions.empty()) throw InvalidArgument("exact_risk_decomposition: empty plan");
    const double n = static_cast<double>(plan.n);
    const Vector& mu_pi = map.policy_spectrum().eigenvalues();
    const Vector& mu_r = map.reward_spectrum().eigenvalues();
    // Whitened quantities: Mt = S_r^{1/2} M S_pi^{-1/2}, p = S_pi^{1/2} pi,
    // u = S_r^{1/2} r*, B = Mt Sigma_w Mt^T + lambda I with Sigma_w = (1/n) sum p p^T.
    // Then ||M* A^{-1} r*||_pi = ||Mt^T B^{-1} u|| and, with H = Mt^T B^{-1} Mt,
    // tr[S_pi G Sigma_Q G^T] = tr[H Sigma_w H].
    const Vector u = map.reward_spectrum().whiten(reward.coefficients);
    RiskDecomposition out;

    if (map.is_diagonal() && plan_is_axis_aligned(plan)) {
        const Vector mt = map.diagonal_entries().array() * (mu_pi.array() / mu_r.array()).sqrt();
        Vector w = Vector::Zero(mt.size());
        for (std::size_t j = 0; j < plan.directions.size(); ++j) {
            const Vector p = map.policy_spectrum().whiten(plan.directions[j].coefficients);
            w += (static_cast<double>(plan.repeats[j]) / n) * p.cwiseAbs2();
        }
        const Vector b = mt.array().square() * w.array() + lambda_reg;
        const Vector h = mt.array().square() / b.array();
        out.bias_sq = lambda_reg * lambda_reg * (mt.array().square() * u.array().square() / b.array().square()).sum();
        out.variance = tau_sq / n * (h.array().square() * w.array()).sum();
        return out;
    }

    const Matrix mt = mu_r.cwiseSqrt().cwiseInverse().asDiagonal() * map.entries() * mu_pi.cwiseSqrt().asDiagonal();
    Matrix sigma_w = Matrix::Zero(mt.cols(), mt.cols());
    for (std::size_t j = 0; j < plan.directions.size(); ++j) {
        const Vector p = map.policy_spectrum().whiten(plan.directions[j].coefficients);
        sigma_w.noalias() += (static_cast<double>(plan.repeats[j]) / n) * p * p.transpose();
    }
    Matrix b = mt * sigma_w * mt.transpose();
    b.diagonal().array() += lambda_reg;
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw NumericalFailure("exact_risk_decomposition: system matrix is singular");
    const Vector bias_vec = mt.transpose() * llt.solve(u);
    out.bias_sq = lambda_reg * lambda_reg * bias_vec.squaredNorm();
    const Matrix h = mt.transpose() * llt.solve(mt);
    out.variance = tau_sq > 0.0 ? tau_sq / n * (h * sigma_w * h).trace() : 0.0;
    return out;
}

double bound_unit_ball(const Vector& zeta, Index J, double lambda_reg, double tau_sq, std::int64_t n) {
    if (J < 1 || J > zeta.size()) throw InvalidArgument(fmt::format("bound: J={} must lie in [1, {}]", J, zeta.size()));
    if (n < 1) throw InvalidArgument("bound: n must be >= 1");
    const double lj2 = lambda_reg * lambda_reg * static_cast<double>(J) * static_cast<double>(J);
    double head = 0.0;
    for (Index j = 0; j < J; ++j) {
        const double z = zeta(j);
        const double denom = z * z + lj2;
        if (denom > 0.0) head = std::max(head, lj2 * z / denom);
    }
    double tail = 0.0;
    for (Index j = J; j < zeta.size(); ++j) tail = std::max(tail, zeta(j));
    const double noise = tau_sq / (static_cast<double>(n) * lambda_reg * lambda_reg);
    return (1.0 + noise) * std::max(head, tail);
}

double bound_general(const Vector& zeta, Index J, double lambda_reg, double tau_sq, std::int64_t n) {
    return bound_unit_ball(zeta, J, lambda_reg, tau_sq, n);
}

double power_law_exponent(double beta, PolicySetCase which) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument(fmt::format("power-law rate needs beta > 0 (got {})", beta));
    const double e = -beta / (beta + 2.0);
    return which == PolicySetCase::unit_ball ? e : e / 2.0;
}

double power_law_rate(double beta, std::int64_t n, PolicySetCase which) {
    if (n < 1) throw InvalidArgument("power_law_rate: n must be >= 1");
    return std::pow(static_cast<double>(n), power_law_exponent(beta, which));
}

double gp_ucb_exponent(double beta) {
    if (!(beta > 1.0) || !std::isfinite(beta)) {
        throw InvalidArgument(fmt::format("GP-UCB rate needs beta > 1 (got {}); the rate does not decay otherwise", beta));
    }
    return -(beta - 1.0) / (2.0 * (beta + 1.0));
}

double gp_ucb_rate(double beta, std::int64_t n) {
    if (n < 1) throw InvalidArgument("gp_ucb_rate: n must be >= 1");
    return std::pow(static_cast<double>(n), gp_ucb_exponent(beta));
}

InformationGain information_gain(const Vector& eigenvalues, double T) {
    if (!(T >= 1.0) || !std::isfinite(T)) throw InvalidArgument("information_gain: T must be >= 1");
    if (eigenvalues.size() < 1) throw InvalidArgument("information_gain: empty spectrum");
    for (Index j = 0; j < eigenvalues.size(); ++j) {
        if (!(eigenvalues(j) > 0.0)) throw InvalidArgument("information_gain: eigenvalues must be positive");
        if (j > 0 && eigenvalues(j) > eigenvalues(j - 1)) throw InvalidArgument("information_gain: eigenvalues must be non-increasing");
    }
    const auto total = [&](double level) {
        return (1.0 / level - eigenvalues.array().inverse()).max(0.0).sum();
    };
    // total() is decreasing in the level; total(lambda_1) = 0 < T.
    double hi = eigenvalues(0);
    double lo = eigenvalues(eigenvalues.size() - 1) * 1e-6;
    while (total(lo) < T) lo *= 1e-3;
    for (int it = 0; it < 300 && hi - lo > 1e-300; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (total(mid) > T) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi / lo - 1.0 < 1e-15) break;
    }
    double level = std::sqrt(lo * hi);
    // Closed form on the support found by bisection: |S| / level = T + sum_S 1/lambda_j.
    double inv_sum = 0.0;
    Index support = 0;
    for (Index j = 0; j < eigenvalues.size(); ++j) {
        if (eigenvalues(j) > level) {
            inv_sum += 1.0 / eigenvalues(j);
            ++support;
        }
    }
    if (support > 0) {
        const double polished = static_cast<double>(support) / (T + inv_sum);
        const bool same_support = (support == eigenvalues.size() || eigenvalues(support) <= polished) &&
                                  eigenvalues(support - 1) > polished;
        if (same_support) level = polished;
    }
    InformationGain out;
    out.water_level = level;
    out.allocation = (1.0 / level - eigenvalues.array().inverse()).max(0.0).matrix();
    out.gamma = 0.5 * (1.0 + out.allocation.array() * eigenvalues.array()).log().sum();
    return out;
}

}  // namespace npbandit
