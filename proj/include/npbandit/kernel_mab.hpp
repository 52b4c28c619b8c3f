#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npbandit/pipeline.hpp"

namespace npbandit {

struct KernelSpec {
    enum class Family { matern, rbf };
    Family family = Family::matern;
    /// Smoothness for the Matern family: 1.5, 2.5 or 3.5.
    double nu = 2.5;
    double length_scale = 1.0;
};

/// matern32 | matern52 | matern72 | rbf.
KernelSpec parse_kernel(const std::string& name);
std::string to_string(const KernelSpec& spec);

/// Stationary kernel value at distance r; k(0) = 1 for every family.
double kernel_eval(const KernelSpec& spec, double r);
double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y);

/// sup over r in (0, 1) of e 2^{2-nu} nu K_{nu-1}(1) / Gamma(nu) * r e^{-sqrt(2 nu) r},
/// by grid search with `grid_points` points.
double lipschitz_constant(const KernelSpec& spec, int grid_points = 10000);

/// Finite point set in the Euclidean unit ball; one point per row.
struct Cover {
    Matrix points;
    double epsilon = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] Index size() const noexcept { return points.rows(); }
    [[nodiscard]] Index dim() const noexcept { return points.cols(); }
};

struct CoverOptions {
    /// Probes drawn per verification batch; construction stops after a batch
    /// in which every probe was already covered.
    int probe_batch = 1000;
    Index max_points = 20000;
    /// Start from these points instead of an empty set (nested refinement).
    const Cover* refine = nullptr;
};

/// Greedy keep-if-far cover from uniform samples of the unit ball.
Cover build_cover(double epsilon, Index d, std::uint64_t seed, const CoverOptions& options = {});

/// Largest distance from `probes` random points of the ball to the cover.
double cover_radius(const Cover& cover, int probes, std::uint64_t seed);

/// Uniform sample from the Euclidean unit ball.
Vector sample_unit_ball(Index d, Engine& engine);

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& points);

/// K + jitter I, using the smallest jitter (1e-10 trace/N, doubled at most 6
/// times) whose Cholesky factorization succeeds with a positive spectrum.
struct JitteredKernel {
    Matrix matrix;
    double jitter = 0.0;
};
JitteredKernel jittered_kernel(const KernelSpec& spec, const Matrix& points);

/// Kernel bandit over a cover, expressed in the framework with M = I: the
/// reward space carries <u, v>_r = u^T K^{-1} v and the policy space
/// <u, v>_pi = u^T K^{-2} v, both diagonalized by the eigenbasis of K.
struct EmbeddedInstance {
    Matrix kernel;  ///< jittered K
    double jitter = 0.0;
    Vector kappa;   ///< eigenvalues of K, non-increasing
    Matrix basis;   ///< matching orthonormal eigenvectors (columns)
    Spectrum reward_spectrum;
    Spectrum policy_spectrum;
    LinearMap map;
    /// Aligned coefficients Phi^T f on the cover.
    RewardFunction reward;
    /// Aligned coefficients of k_x for each cover point x.
    std::vector<Policy> policies;
    /// The cover values f(x) the reward was built from.
    Vector values;

    [[nodiscard]] PolicySet policy_set() const;
};

/// Embed cover values f(x_i) of the target function.
EmbeddedInstance embed_problem(const Vector& values, const Cover& cover, const KernelSpec& spec);

/// f(x) = sum_i alpha_i k(x, c_i), scaled to unit RKHS norm on its centers.
struct SynthesizedFunction {
    KernelSpec spec;
    Matrix centers;
    Vector alpha;

    [[nodiscard]] double operator()(const Vector& x) const;
    /// Values at the centers computed through the jittered K used for normalization.
    [[nodiscard]] Vector center_values() const;
    /// Values at arbitrary points (rows).
    [[nodiscard]] Vector values_at(const Matrix& points) const;
};

/// alpha Gaussian, rescaled so alpha^T K alpha = 1 with the jittered K of the cover.
SynthesizedFunction synth_function(const Cover& cover, const KernelSpec& spec, std::uint64_t seed);

struct SuboptimalityCheck {
    double gap = 0.0;
    double bound = 0.0;
    bool holds = true;
};

/// max over probes of f minus max over the cover of f, compared with
/// sqrt(2 L_K epsilon) + 1e-6.
SuboptimalityCheck cover_suboptimality_check(const Cover& cover, const SynthesizedFunction& f, const Matrix& probes,
                                             double lipschitz, double epsilon);

/// Regular grid on [-1, 1] for d = 1, uniform ball samples otherwise.
Matrix probe_points(Index d, int count, std::uint64_t seed);

struct KmabOptions {
    double tau_sq = 0.01;
    double collinearity_threshold = 0.0;
    std::optional<Index> J;
    std::optional<double> lambda_reg;
};

struct KmabResult {
    RiskReport report;
    Index cover_size = 0;
    double fitted_beta = 0.0;
};

/// Cover -> embedding -> passive pipeline; Delta is measured against the best cover point.
KmabResult kmab_experiment(const KernelSpec& spec, Index d, double epsilon, std::int64_t n, std::uint64_t seed,
                           const KmabOptions& options = {});

/// Design parameters for an embedded instance from the fitted decay beta of K:
/// J = round((n N_cov)^{1/(beta+2)}) clamped to [1, min(n, N_cov)] and
/// lambda = n^{-(beta+1)/(beta+2)}. Covers with fewer than 3 points explore every point.
DesignParams kmab_params(const EmbeddedInstance& instance, std::int64_t n);

void write_cover(const std::filesystem::path& path, const Cover& cover);
Cover read_cover(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

}  // namespace npbandit
