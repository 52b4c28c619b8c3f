#include "npbandit/spectral_core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

namespace {

void require_same_dim(Index a, Index b, const char* what) {
    if (a != b) throw InvalidArgument(fmt::format("{}: dimension mismatch ({} vs {})", what, a, b));
}

// Indices of `values` sorted by decreasing value, ties by ascending index.
std::vector<Index> descending_order(const Vector& values) {
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });
    return order;
}

double clamp_eigenvalue(double value, Index j) {
    if (value >= 0.0) return value;
    if (value > -1e-12) return 0.0;
    throw NumericalFailure(fmt::format("whiten: eigenvalue {} of Mt^T Mt is {:.3e} (negative beyond round-off)", j, value));
}

void check_orthonormal(const Matrix& basis, const char* name) {
    if (basis.rows() != basis.cols()) throw InvalidArgument(fmt::format("{} must be square", name));
    const Matrix gram = basis.transpose() * basis;
    const double err = (gram - Matrix::Identity(basis.rows(), basis.cols())).cwiseAbs().maxCoeff();
    if (!(err <= 1e-10)) throw InvalidArgument(fmt::format("{} is not orthonormal (max deviation {:.3e})", name, err));
}

// Mt = S_r^{1/2} M S_pi^{-1/2} for a dense map.
Matrix dense_whitened(const LinearMap& map) {
    const Vector row_scale = map.reward_spectrum().eigenvalues().cwiseInverse().cwiseSqrt();
    const Vector col_scale = map.policy_spectrum().eigenvalues().cwiseSqrt();
    return row_scale.asDiagonal() * map.entries() * col_scale.asDiagonal();
}

Vector read_column(const std::string& path) {
    const auto rows = csv::read_numeric(path);
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 1) throw ConfigError(fmt::format("'{}': expected one value per line", path));
        out(static_cast<Index>(i)) = rows[i][0];
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- Spectrum

Spectrum::Spectrum(Vector eigenvalues, std::optional<double> decay_exponent)
    : eigenvalues_(std::move(eigenvalues)), decay_exponent_(decay_exponent) {}

Spectrum Spectrum::power_law(double beta, Index dim) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument(fmt::format("power_law: beta must be > 0 (got {})", beta));
    if (dim < 1) throw InvalidArgument(fmt::format("power_law: dim must be >= 1 (got {})", dim));
    Vector mu(dim);
    for (Index j = 0; j < dim; ++j) mu(j) = std::pow(static_cast<double>(j + 1), -beta);
    return Spectrum(std::move(mu), beta);
}

Spectrum Spectrum::from_eigenvalues(Vector eigenvalues) {
    if (eigenvalues.size() < 1) throw InvalidArgument("spectrum must have at least one eigenvalue");
    for (Index j = 0; j < eigenvalues.size(); ++j) {
        if (!(eigenvalues(j) > 0.0) || !std::isfinite(eigenvalues(j))) {
            throw InvalidArgument(fmt::format("eigenvalue {} is not a finite positive number ({})", j, eigenvalues(j)));
        }
        if (j > 0 && eigenvalues(j) > eigenvalues(j - 1)) {
            throw InvalidArgument(fmt::format("eigenvalues must be non-increasing (index {})", j));
        }
    }
    return Spectrum(std::move(eigenvalues), std::nullopt);
}

Vector Spectrum::inverse_eigenvalues() const { return eigenvalues_.cwiseInverse(); }

double Spectrum::inner(const Vector& a, const Vector& b) const {
    require_same_dim(a.size(), dim(), "inner");
    require_same_dim(b.size(), dim(), "inner");
    return (a.array() * b.array() / eigenvalues_.array()).sum();
}

double Spectrum::norm(const Vector& a) const { return std::sqrt(inner(a, a)); }

Vector Spectrum::whiten(const Vector& a) const {
    require_same_dim(a.size(), dim(), "whiten");
    return (a.array() / eigenvalues_.array().sqrt()).matrix();
}

Vector Spectrum::unwhiten(const Vector& a) const {
    require_same_dim(a.size(), dim(), "unwhiten");
    return (a.array() * eigenvalues_.array().sqrt()).matrix();
}

// ---------------------------------------------------------------- LinearMap

LinearMap::LinearMap(Kind kind, Vector diag, Matrix dense, Spectrum domain, Spectrum codomain)
    : kind_(kind), diag_(std::move(diag)), dense_(std::move(dense)), domain_(std::move(domain)), codomain_(std::move(codomain)) {}

LinearMap LinearMap::identity(Spectrum policy_spectrum, Spectrum reward_spectrum) {
    const Index d = policy_spectrum.dim();
    return diagonal(Vector::Ones(d), std::move(policy_spectrum), std::move(reward_spectrum));
}

LinearMap LinearMap::diagonal(Vector sigma, Spectrum policy_spectrum, Spectrum reward_spectrum) {
    if (policy_spectrum.dim() != reward_spectrum.dim()) {
        throw InvalidArgument("a diagonal map needs equal policy and reward dimensions");
    }
    require_same_dim(sigma.size(), policy_spectrum.dim(), "diagonal map");
    if (!sigma.allFinite()) throw InvalidArgument("map entries must be finite");
    return LinearMap(Kind::diagonal, std::move(sigma), Matrix(), std::move(policy_spectrum), std::move(reward_spectrum));
}

LinearMap LinearMap::dense(Matrix entries, Spectrum policy_spectrum, Spectrum reward_spectrum) {
    require_same_dim(entries.rows(), reward_spectrum.dim(), "dense map rows");
    require_same_dim(entries.cols(), policy_spectrum.dim(), "dense map cols");
    if (!entries.allFinite()) throw InvalidArgument("map entries must be finite");
    return LinearMap(Kind::dense, Vector(), std::move(entries), std::move(policy_spectrum), std::move(reward_spectrum));
}

const Vector& LinearMap::diagonal_entries() const {
    if (!is_diagonal()) throw InvalidArgument("diagonal_entries on a dense map");
    return diag_;
}

Matrix LinearMap::entries() const {
    if (is_diagonal()) return diag_.asDiagonal();
    return dense_;
}

Vector LinearMap::apply(const Vector& policy) const {
    require_same_dim(policy.size(), policy_dim(), "apply");
    if (is_diagonal()) return diag_.cwiseProduct(policy);
    return dense_ * policy;
}

Vector LinearMap::apply_transpose(const Vector& reward) const {
    require_same_dim(reward.size(), reward_dim(), "apply_transpose");
    if (is_diagonal()) return diag_.cwiseProduct(reward);
    return dense_.transpose() * reward;
}

Vector LinearMap::apply_adjoint(const Vector& reward) const {
    const Vector scaled = reward.cwiseQuotient(codomain_.eigenvalues());
    return apply_transpose(scaled).cwiseProduct(domain_.eigenvalues());
}

// ---------------------------------------------------------------- WhitenedDecomposition

WhitenedDecomposition WhitenedDecomposition::axis_aligned(Vector zeta, std::vector<Index> order, Vector whitened_diagonal) {
    WhitenedDecomposition out;
    out.zeta_ = std::move(zeta);
    out.axis_aligned_ = true;
    out.order_ = std::move(order);
    out.whitened_diagonal_ = std::move(whitened_diagonal);
    return out;
}

WhitenedDecomposition WhitenedDecomposition::general(Vector zeta, Matrix directions, Matrix whitened_map) {
    WhitenedDecomposition out;
    out.zeta_ = std::move(zeta);
    out.directions_ = std::move(directions);
    out.whitened_map_ = std::move(whitened_map);
    return out;
}

Vector WhitenedDecomposition::direction(Index j) const {
    if (j < 0 || j >= size()) throw InvalidArgument(fmt::format("direction index {} out of range", j));
    if (axis_aligned_) return Vector::Unit(size(), order_[static_cast<std::size_t>(j)]);
    return directions_.col(j);
}

Index WhitenedDecomposition::axis(Index j) const {
    if (!axis_aligned_) throw InvalidArgument("axis() needs an axis-aligned decomposition");
    if (j < 0 || j >= size()) throw InvalidArgument(fmt::format("direction index {} out of range", j));
    return order_[static_cast<std::size_t>(j)];
}

Matrix WhitenedDecomposition::directions() const {
    if (!axis_aligned_) return directions_;
    Matrix out = Matrix::Zero(size(), size());
    for (Index j = 0; j < size(); ++j) out(order_[static_cast<std::size_t>(j)], j) = 1.0;
    return out;
}

Matrix WhitenedDecomposition::whitened_map() const {
    if (!axis_aligned_) return whitened_map_;
    return whitened_diagonal_.asDiagonal();
}

// ---------------------------------------------------------------- free functions

Spectrum build_power_law_spectrum(double beta, Index dim) { return Spectrum::power_law(beta, dim); }

WhitenedDecomposition whiten(const LinearMap& map) {
    const Vector& mu_pi = map.policy_spectrum().eigenvalues();
    const Vector& mu_r = map.reward_spectrum().eigenvalues();
    if (map.is_diagonal()) {
        const Vector& sigma = map.diagonal_entries();
        const Vector scaled = sigma.array() * (mu_pi.array() / mu_r.array()).sqrt();
        const Vector raw = scaled.array().square();
        const auto order = descending_order(raw);
        Vector zeta(raw.size());
        for (Index j = 0; j < raw.size(); ++j) zeta(j) = raw(order[static_cast<std::size_t>(j)]);
        return WhitenedDecomposition::axis_aligned(std::move(zeta), order, scaled);
    }

    Matrix mt = dense_whitened(map);
    const Matrix gram = mt.transpose() * mt;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure(fmt::format("whiten: symmetric eigensolver failed on a {}x{} system (Frobenius norm {:.3e})",
                                           gram.rows(), gram.cols(), gram.norm()));
    }
    const Vector values = solver.eigenvalues();
    const auto order = descending_order(values);
    const Index d = values.size();
    Vector zeta(d);
    Matrix dirs(d, d);
    for (Index j = 0; j < d; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        zeta(j) = clamp_eigenvalue(values(src), j);
        Vector v = solver.eigenvectors().col(src);
        // Fix the sign so the largest-magnitude entry is positive.
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        dirs.col(j) = v;
    }
    return WhitenedDecomposition::general(std::move(zeta), std::move(dirs), std::move(mt));
}

Matrix adjoint(const LinearMap& map) {
    const Vector& mu_pi = map.policy_spectrum().eigenvalues();
    const Vector inv_mu_r = map.reward_spectrum().inverse_eigenvalues();
    return mu_pi.asDiagonal() * map.entries().transpose() * inv_mu_r.asDiagonal();
}

double boundedness_value(const LinearMap& map) {
    if (map.is_diagonal()) {
        const Vector scaled = map.diagonal_entries().array().abs() *
                              (map.policy_spectrum().eigenvalues().array() / map.reward_spectrum().eigenvalues().array()).sqrt();
        return scaled.maxCoeff();
    }
    Eigen::JacobiSVD<Matrix> svd(dense_whitened(map));
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

LinearMap align_bases(const Matrix& reward_basis, const Matrix& policy_basis, const LinearMap& map) {
    require_same_dim(reward_basis.rows(), map.reward_dim(), "align_bases reward basis");
    require_same_dim(policy_basis.rows(), map.policy_dim(), "align_bases policy basis");
    check_orthonormal(reward_basis, "reward basis");
    check_orthonormal(policy_basis, "policy basis");
    Matrix aligned = reward_basis.transpose() * map.entries() * policy_basis;
    return LinearMap::dense(std::move(aligned), map.policy_spectrum(), map.reward_spectrum());
}

Vector align_reward(const Matrix& reward_basis, const Vector& reward) {
    require_same_dim(reward_basis.rows(), reward.size(), "align_reward");
    return reward_basis.transpose() * reward;
}

Vector align_policy(const Matrix& policy_basis, const Vector& policy) {
    require_same_dim(policy_basis.rows(), policy.size(), "align_policy");
    return policy_basis.transpose() * policy;
}

Spectrum load_spectrum(const KeyValues& config) {
    reject_unknown_keys(config, {"kind", "beta", "dim", "entries_path"});
    const std::string kind = get_string(config, "kind", "power_law");
    try {
        if (kind == "power_law") return Spectrum::power_law(get_double(config, "beta"), get_int(config, "dim"));
        if (kind == "explicit") return Spectrum::from_eigenvalues(read_column(get_string(config, "entries_path")));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError(fmt::format("unknown spectrum kind '{}'", kind));
}

LinearMap load_map(const KeyValues& config, Spectrum policy_spectrum, Spectrum reward_spectrum) {
    reject_unknown_keys(config, {"kind", "entries_path"});
    const std::string kind = get_string(config, "kind", "identity");
    try {
        if (kind == "identity") return LinearMap::identity(std::move(policy_spectrum), std::move(reward_spectrum));
        if (kind == "diagonal") {
            return LinearMap::diagonal(read_column(get_string(config, "entries_path")), std::move(policy_spectrum),
                                       std::move(reward_spectrum));
        }
        if (kind == "dense_file") {
            const auto rows = csv::read_numeric(get_string(config, "entries_path"));
            Matrix entries(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (static_cast<Index>(rows[i].size()) != entries.cols()) throw ConfigError("ragged rows in map entries");
                for (std::size_t k = 0; k < rows[i].size(); ++k) entries(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
            }
            return LinearMap::dense(std::move(entries), std::move(policy_spectrum), std::move(reward_spectrum));
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError(fmt::format("unknown map kind '{}'", kind));
}

}  // namespace npbandit
