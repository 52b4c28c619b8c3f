#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

#include "npbandit/config.hpp"

namespace npbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Truncated RKHS spectrum: a positive, non-increasing eigenvalue sequence.
///
/// Coefficient vectors living in the space carry the inner product
/// <a, b> = sum_j a_j b_j / mu_j. The scaling matrix S = diag(1 / mu_j) is
/// exposed as `inverse_eigenvalues()`.
class Spectrum {
public:
    /// mu_j = j^(-beta), j = 1..dim.
    static Spectrum power_law(double beta, Index dim);
    static Spectrum from_eigenvalues(Vector eigenvalues);

    [[nodiscard]] const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] Index dim() const noexcept { return eigenvalues_.size(); }
    [[nodiscard]] std::optional<double> decay_exponent() const noexcept { return decay_exponent_; }

    /// Diagonal of S = diag(mu_j^-1).
    [[nodiscard]] Vector inverse_eigenvalues() const;

    [[nodiscard]] double inner(const Vector& a, const Vector& b) const;
    [[nodiscard]] double norm(const Vector& a) const;

    /// u -> S^{1/2} u (coordinates in which the inner product is Euclidean).
    [[nodiscard]] Vector whiten(const Vector& a) const;
    /// Inverse of whiten: u -> S^{-1/2} u.
    [[nodiscard]] Vector unwhiten(const Vector& a) const;

private:
    Spectrum(Vector eigenvalues, std::optional<double> decay_exponent);

    Vector eigenvalues_;
    std::optional<double> decay_exponent_;
};

/// Known linear map M from the policy space to the reward space, stored in the
/// aligned eigen-coordinates of both spaces.
class LinearMap {
public:
    enum class Kind { diagonal, dense };

    static LinearMap identity(Spectrum policy_spectrum, Spectrum reward_spectrum);
    static LinearMap diagonal(Vector sigma, Spectrum policy_spectrum, Spectrum reward_spectrum);
    static LinearMap dense(Matrix entries, Spectrum policy_spectrum, Spectrum reward_spectrum);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_diagonal() const noexcept { return kind_ == Kind::diagonal; }
    [[nodiscard]] Index policy_dim() const noexcept { return domain_.dim(); }
    [[nodiscard]] Index reward_dim() const noexcept { return codomain_.dim(); }
    [[nodiscard]] const Spectrum& policy_spectrum() const noexcept { return domain_; }
    [[nodiscard]] const Spectrum& reward_spectrum() const noexcept { return codomain_; }

    /// sigma_{M,j}; only valid for the diagonal kind.
    [[nodiscard]] const Vector& diagonal_entries() const;
    /// Dense d_r x d_pi matrix (materialized for the diagonal kind).
    [[nodiscard]] Matrix entries() const;

    [[nodiscard]] Vector apply(const Vector& policy) const;
    [[nodiscard]] Vector apply_transpose(const Vector& reward) const;
    /// M* r = S_pi^{-1} M^T S_r r, without forming M*.
    [[nodiscard]] Vector apply_adjoint(const Vector& reward) const;

private:
    LinearMap(Kind kind, Vector diag, Matrix dense, Spectrum domain, Spectrum codomain);

    Kind kind_;
    Vector diag_;
    Matrix dense_;
    Spectrum domain_;
    Spectrum codomain_;
};

/// Eigen-decomposition of Mt^T Mt with Mt = S_r^{1/2} M S_pi^{-1/2}.
///
/// Eigenpairs are ordered by decreasing zeta, ties broken by ascending
/// original index. For diagonal maps the directions are standard basis vectors
/// and only the permutation is stored.
class WhitenedDecomposition {
public:
    static WhitenedDecomposition axis_aligned(Vector zeta, std::vector<Index> order, Vector whitened_diagonal);
    static WhitenedDecomposition general(Vector zeta, Matrix directions, Matrix whitened_map);

    [[nodiscard]] const Vector& zeta() const noexcept { return zeta_; }
    [[nodiscard]] Index size() const noexcept { return zeta_.size(); }
    [[nodiscard]] bool is_axis_aligned() const noexcept { return axis_aligned_; }

    /// Unit vector phi_{Mt,j} (0-based j).
    [[nodiscard]] Vector direction(Index j) const;
    /// Original coordinate of direction j; only valid when axis aligned.
    [[nodiscard]] Index axis(Index j) const;
    /// All directions as columns (materialized for the axis-aligned kind).
    [[nodiscard]] Matrix directions() const;
    /// The matrix Mt (materialized for the axis-aligned kind).
    [[nodiscard]] Matrix whitened_map() const;

private:
    WhitenedDecomposition() = default;

    Vector zeta_;
    bool axis_aligned_ = false;
    std::vector<Index> order_;
    Vector whitened_diagonal_;
    Matrix directions_;
    Matrix whitened_map_;
};

Spectrum build_power_law_spectrum(double beta, Index dim);

WhitenedDecomposition whiten(const LinearMap& map);

/// Dense Hermitian adjoint M* = S_pi^{-1} M^T S_r.
Matrix adjoint(const LinearMap& map);

/// Operator norm of S_r^{1/2} M S_pi^{-1/2}.
double boundedness_value(const LinearMap& map);

/// Re-express a map given in arbitrary orthonormal eigenbases in the aligned
/// coordinates: returns Phi_r^T M Phi_pi over the same spectra.
LinearMap align_bases(const Matrix& reward_basis, const Matrix& policy_basis, const LinearMap& map);

/// Companion transforms for vectors under align_bases.
Vector align_reward(const Matrix& reward_basis, const Vector& reward);
Vector align_policy(const Matrix& policy_basis, const Vector& policy);

// Configuration loading. Keys: kind (power_law | explicit | dense_file),
// beta, dim, entries_path. `explicit` reads one eigenvalue per line.

Spectrum load_spectrum(const KeyValues& config);
/// kind identity | diagonal (entries_path: one sigma per line) |
/// dense_file (entries_path: row-major CSV, one matrix row per line).
LinearMap load_map(const KeyValues& config, Spectrum policy_spectrum, Spectrum reward_spectrum);

}  // namespace npbandit
