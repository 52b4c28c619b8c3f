#include "npbandit/estimation.hpp"

#include <fmt/format.h>

#include <cmath>

#include "npbandit/errors.hpp"

namespace npbandit {

namespace {

constexpr double kLambdaFloor = 1e-12;
constexpr double kMaxCondition = 1e14;

bool is_one_sparse(const Vector& v) {
    Index nonzero = 0;
    for (Index k = 0; k < v.size(); ++k) {
        if (v(k) != 0.0 && ++nonzero > 1) return false;
    }
    return true;
}

}  // namespace

std::size_t QueryDataset::add_policy(Policy policy) {
    if (!policies_.empty() && policy.coefficients.size() != policies_.front().coefficients.size()) {
        throw InvalidArgument("QueryDataset: policies must share one dimension");
    }
    policies_.push_back(std::move(policy));
    counts_.push_back(0);
    sums_.push_back(0.0);
    return policies_.size() - 1;
}

void QueryDataset::record(std::size_t slot, double response) {
    if (slot >= policies_.size()) throw InvalidArgument("QueryDataset: unknown slot");
    ++counts_[slot];
    sums_[slot] += response;
    ++n_;
}

void QueryDataset::add(Policy policy, double response) { record(add_policy(std::move(policy)), response); }

QueryDataset collect(Oracle& oracle, const QueryPlan& plan) {
    QueryDataset data;
    for (std::size_t j = 0; j < plan.directions.size(); ++j) {
        const auto slot = data.add_policy(plan.directions[j]);
        for (std::int64_t t = 0; t < plan.repeats[j]; ++t) data.record(slot, oracle.query(plan.directions[j]));
    }
    return data;
}

Matrix RidgeEstimate::system_matrix() const {
    if (diagonal_system) return system_diagonal.asDiagonal();
    return system_dense;
}

RidgeEstimate ridge_estimate(const QueryDataset& data, const LinearMap& map, double lambda_reg) {
    if (!(lambda_reg >= 0.0) || !std::isfinite(lambda_reg)) {
        throw InvalidArgument(fmt::format("ridge_estimate: lambda must be finite and >= 0 (got {})", lambda_reg));
    }
    if (data.n() < 1) throw InvalidArgument("ridge_estimate needs at least one observation");
    if (data.policies().front().coefficients.size() != map.policy_dim()) {
        throw InvalidArgument("ridge_estimate: policy/map dimension mismatch");
    }
    const double lambda = std::max(lambda_reg, kLambdaFloor);
    const double n = static_cast<double>(data.n());
    const Vector& mu_r = map.reward_spectrum().eigenvalues();
    const Index d_r = map.reward_dim();

    RidgeEstimate est;
    est.lambda_reg = lambda;
    est.n = data.n();

    bool diagonal_design = map.is_diagonal();
    for (std::size_t i = 0; diagonal_design && i < data.policies().size(); ++i) {
        diagonal_design = is_one_sparse(data.policies()[i].coefficients);
    }

    if (diagonal_design) {
        // Sigma_Q is diagonal, so A is diagonal with
        // A_jj = sigma_j^2 Sigma_jj / mu_r,j + lambda.
        const Vector& sigma = map.diagonal_entries();
        Vector cov = Vector::Zero(d_r);
        Vector b = Vector::Zero(d_r);
        for (std::size_t i = 0; i < data.policies().size(); ++i) {
            const Vector& p = data.policies()[i].coefficients;
            for (Index k = 0; k < p.size(); ++k) {
                if (p(k) == 0.0) continue;
                cov(k) += static_cast<double>(data.counts()[i]) * p(k) * p(k) / n;
                b(k) += data.response_sums()[i] * sigma(k) * p(k) / n;
            }
        }
        Vector a = sigma.array().square() * cov.array() / mu_r.array() + lambda;
        const double cond = a.maxCoeff() / a.minCoeff();
        if (!(cond <= kMaxCondition)) {
            throw NumericalFailure(fmt::format("ridge_estimate: condition number {:.3e} exceeds {:.0e}", cond, kMaxCondition));
        }
        est.reward_hat = {b.cwiseQuotient(a)};
        est.diagonal_system = true;
        est.system_diagonal = std::move(a);
        return est;
    }

    // Whitened symmetric system: B = S_r^{1/2} M Sigma_Q M^T S_r^{1/2} + lambda I
    // is similar to A via A = S_r^{-1/2} B S_r^{1/2}.
    const Vector inv_sqrt_mu_r = mu_r.cwiseSqrt().cwiseInverse();
    const auto m = static_cast<Index>(data.policies().size());
    Matrix v(d_r, m);
    Vector rhs = Vector::Zero(d_r);
    for (Index i = 0; i < m; ++i) {
        const auto si = static_cast<std::size_t>(i);
        v.col(i) = map.apply(data.policies()[si].coefficients).cwiseProduct(inv_sqrt_mu_r);
        rhs += (data.response_sums()[si] / n) * v.col(i);
    }
    Vector weights(m);
    for (Index i = 0; i < m; ++i) weights(i) = static_cast<double>(data.counts()[static_cast<std::size_t>(i)]) / n;
    Matrix b = v * weights.asDiagonal() * v.transpose();
    b.diagonal().array() += lambda;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
    if (solver.info() != Eigen::Success) throw NumericalFailure("ridge_estimate: eigensolver failed on the system matrix");
    const Vector eig = solver.eigenvalues();
    const double cond = eig.maxCoeff() / eig.minCoeff();
    if (!(eig.minCoeff() > 0.0) || !(cond <= kMaxCondition)) {
        throw NumericalFailure(fmt::format("ridge_estimate: condition number {:.3e} exceeds {:.0e}", cond, kMaxCondition));
    }
    const Matrix& q = solver.eigenvectors();
    const Vector u = q * (q.transpose() * rhs).cwiseQuotient(eig);
    est.reward_hat = {u.cwiseProduct(mu_r.cwiseSqrt())};
    est.system_dense = mu_r.cwiseSqrt().asDiagonal() * b * inv_sqrt_mu_r.asDiagonal();
    return est;
}

Policy plugin_policy(const RidgeEstimate& estimate, const PolicySet& set, const LinearMap& map) {
    return optimal_policy(estimate.reward_hat, set, map);
}

}  // namespace npbandit
