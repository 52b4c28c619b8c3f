#include "npbandit/kernel_mab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <numbers>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

namespace {

// K_{nu-1}(1) for the supported half-integer nu, and Gamma(nu).
struct MaternConstants {
    double bessel;
    double gamma;
};

MaternConstants matern_constants(double nu) {
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    if (nu == 1.5) return {0.461068504447895, sqrt_pi / 2.0};
    if (nu == 2.5) return {0.922137008895789, 3.0 * sqrt_pi / 4.0};
    if (nu == 3.5) return {3.22747953113526, 15.0 * sqrt_pi / 8.0};
    throw InvalidArgument(fmt::format("unsupported Matern smoothness nu={} (use 1.5, 2.5 or 3.5)", nu));
}

void validate(const KernelSpec& spec) {
    if (!(spec.length_scale > 0.0)) throw InvalidArgument("kernel length scale must be > 0");
    if (spec.family == KernelSpec::Family::matern) matern_constants(spec.nu);
}

double nearest_distance_sq(const std::vector<Vector>& points, const Vector& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, (p - x).squaredNorm());
    return best;
}

}  // namespace

KernelSpec parse_kernel(const std::string& name) {
    KernelSpec spec;
    if (name == "matern32") {
        spec.nu = 1.5;
    } else if (name == "matern52") {
        spec.nu = 2.5;
    } else if (name == "matern72") {
        spec.nu = 3.5;
    } else if (name == "rbf") {
        spec.family = KernelSpec::Family::rbf;
    } else {
        throw ConfigError(fmt::format("unknown kernel '{}' (expected matern32 | matern52 | matern72 | rbf)", name));
    }
    return spec;
}

std::string to_string(const KernelSpec& spec) {
    if (spec.family == KernelSpec::Family::rbf) return "rbf";
    if (spec.nu == 1.5) return "matern32";
    if (spec.nu == 2.5) return "matern52";
    if (spec.nu == 3.5) return "matern72";
    return fmt::format("matern(nu={})", spec.nu);
}

double kernel_eval(const KernelSpec& spec, double r) {
    if (!(r >= 0.0)) throw InvalidArgument(fmt::format("kernel distance must be >= 0 (got {})", r));
    validate(spec);
    const double x = r / spec.length_scale;
    if (spec.family == KernelSpec::Family::rbf) return std::exp(-0.5 * x * x);
    if (spec.nu == 1.5) {
        const double s = std::sqrt(3.0) * x;
        return (1.0 + s) * std::exp(-s);
    }
    if (spec.nu == 2.5) {
        const double s = std::sqrt(5.0) * x;
        return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    const double s = std::sqrt(7.0) * x;
    return (1.0 + s + 2.0 * s * s / 5.0 + s * s * s / 15.0) * std::exp(-s);
}

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y) { return kernel_eval(spec, (x - y).norm()); }

double lipschitz_constant(const KernelSpec& spec, int grid_points) {
    if (spec.family != KernelSpec::Family::matern) throw InvalidArgument("lipschitz_constant is defined for Matern kernels only");
    if (grid_points < 1) throw InvalidArgument("lipschitz_constant needs at least one grid point");
    const double nu = spec.nu;
    const auto [bessel, gamma] = matern_constants(nu);
    const double scale = std::numbers::e * std::pow(2.0, 2.0 - nu) * nu * bessel / gamma;
    const double rate = std::sqrt(2.0 * nu);
    double best = 0.0;
    for (int i = 1; i <= grid_points; ++i) {
        const double r = static_cast<double>(i) / static_cast<double>(grid_points + 1);
        best = std::max(best, scale * r * std::exp(-rate * r));
    }
    return best;
}

Vector sample_unit_ball(Index d, Engine& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vector x(d);
    double norm = 0.0;
    while (!(norm > 0.0)) {
        for (Index k = 0; k < d; ++k) x(k) = normal(engine);
        norm = x.norm();
    }
    const double radius = std::pow(uniform(engine), 1.0 / static_cast<double>(d));
    return x * (radius / norm);
}

Cover build_cover(double epsilon, Index d, std::uint64_t seed, const CoverOptions& options) {
    if (!(epsilon > 0.0 && epsilon <= 2.0)) throw InvalidArgument(fmt::format("cover epsilon must lie in (0, 2] (got {})", epsilon));
    if (d < 1) throw InvalidArgument("cover dimension must be >= 1");
    if (options.probe_batch < 1) throw InvalidArgument("probe batch must be >= 1");
    std::vector<Vector> points;
    if (options.refine != nullptr) {
        if (options.refine->dim() != d) throw InvalidArgument("refined cover has a different dimension");
        for (Index i = 0; i < options.refine->size(); ++i) points.emplace_back(options.refine->points.row(i).transpose());
    }
    Engine engine = make_engine(seed, StreamTag::cover);
    const double eps_sq = epsilon * epsilon;
    bool settled = false;
    while (!settled) {
        settled = true;
        for (int p = 0; p < options.probe_batch; ++p) {
            Vector x = sample_unit_ball(d, engine);
            if (nearest_distance_sq(points, x) > eps_sq) {
                points.push_back(std::move(x));
                settled = false;
                if (static_cast<Index>(points.size()) > options.max_points) {
                    throw CoverageFailure(fmt::format("cover with epsilon={} in d={} exceeded {} points", epsilon, d,
                                                      options.max_points));
                }
            }
        }
    }
    Cover cover;
    cover.epsilon = epsilon;
    cover.seed = seed;
    cover.points.resize(static_cast<Index>(points.size()), d);
    for (std::size_t i = 0; i < points.size(); ++i) cover.points.row(static_cast<Index>(i)) = points[i].transpose();
    return cover;
}

double cover_radius(const Cover& cover, int probes, std::uint64_t seed) {
    std::vector<Vector> points;
    for (Index i = 0; i < cover.size(); ++i) points.emplace_back(cover.points.row(i).transpose());
    Engine engine = make_engine(seed, StreamTag::probes);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) worst = std::max(worst, nearest_distance_sq(points, sample_unit_ball(cover.dim(), engine)));
    return std::sqrt(worst);
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& points) {
    const Index n = points.rows();
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Index j = i + 1; j < n; ++j) {
            k(i, j) = k(j, i) = kernel_eval(spec, (points.row(i) - points.row(j)).norm());
        }
    }
    return k;
}

JitteredKernel jittered_kernel(const KernelSpec& spec, const Matrix& points) {
    const Matrix raw = kernel_matrix(spec, points);
    const Index n = raw.rows();
    if (n < 1) throw InvalidArgument("kernel matrix of an empty cover");
    double jitter = 1e-10 * raw.trace() / static_cast<double>(n);
    for (int attempt = 0; attempt <= 6; ++attempt, jitter *= 2.0) {
        Matrix k = raw;
        k.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(k);
        if (llt.info() != Eigen::Success) continue;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(k, Eigen::EigenvaluesOnly);
        if (solver.info() == Eigen::Success && solver.eigenvalues().minCoeff() > 0.0) return {std::move(k), jitter};
    }
    throw NumericalFailure(fmt::format("kernel matrix of {} points stays indefinite after jitter {:.3e}", n, jitter / 2.0));
}

PolicySet EmbeddedInstance::policy_set() const { return PolicySet::finite(policies, policy_spectrum); }

EmbeddedInstance embed_problem(const Vector& values, const Cover& cover, const KernelSpec& spec) {
    if (values.size() != cover.size()) throw InvalidArgument("embed_problem: one value per cover point is required");
    JitteredKernel jk = jittered_kernel(spec, cover.points);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(jk.matrix);
    if (solver.info() != Eigen::Success) throw NumericalFailure("embed_problem: eigensolver failed on K");
    const Index n = cover.size();
    Vector kappa(n);
    Matrix basis(n, n);
    for (Index j = 0; j < n; ++j) {
        kappa(j) = solver.eigenvalues()(n - 1 - j);
        basis.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
    if (!(kappa.minCoeff() > 0.0)) throw NumericalFailure("embed_problem: K is not positive definite after jitter");

    Spectrum reward_spectrum = Spectrum::from_eigenvalues(kappa);
    Spectrum policy_spectrum = Spectrum::from_eigenvalues(kappa.cwiseAbs2());
    LinearMap map = LinearMap::identity(policy_spectrum, reward_spectrum);

    EmbeddedInstance inst{std::move(jk.matrix), jk.jitter, kappa, basis, reward_spectrum, policy_spectrum, std::move(map),
                          RewardFunction{basis.transpose() * values}, {}, values};
    inst.policies.reserve(static_cast<std::size_t>(n));
    // Phi^T k_x = kappa .* Phi^T e_x, formed elementwise so the K^{-2}
    // inner products stay exact even for tiny kappa.
    for (Index x = 0; x < n; ++x) inst.policies.push_back({kappa.cwiseProduct(basis.row(x).transpose())});
    return inst;
}

double SynthesizedFunction::operator()(const Vector& x) const {
    double out = 0.0;
    for (Index i = 0; i < centers.rows(); ++i) out += alpha(i) * kernel_eval(spec, (centers.row(i).transpose() - x).norm());
    return out;
}

Vector SynthesizedFunction::center_values() const { return jittered_kernel(spec, centers).matrix * alpha; }

Vector SynthesizedFunction::values_at(const Matrix& points) const {
    Vector out(points.rows());
    for (Index i = 0; i < points.rows(); ++i) out(i) = (*this)(points.row(i).transpose());
    return out;
}

SynthesizedFunction synth_function(const Cover& cover, const KernelSpec& spec, std::uint64_t seed) {
    const JitteredKernel jk = jittered_kernel(spec, cover.points);
    Engine engine = make_engine(seed, StreamTag::synth_function);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector alpha(cover.size());
    for (Index i = 0; i < alpha.size(); ++i) alpha(i) = normal(engine);
    const double norm_sq = alpha.dot(jk.matrix * alpha);
    if (!(norm_sq > 0.0)) throw NumericalFailure("synth_function drew a zero-norm function");
    return {spec, cover.points, alpha / std::sqrt(norm_sq)};
}

SuboptimalityCheck cover_suboptimality_check(const Cover& cover, const SynthesizedFunction& f, const Matrix& probes,
                                             double lipschitz, double epsilon) {
    if (probes.cols() != cover.dim()) throw InvalidArgument("probe dimension differs from the cover");
    const double cover_best = f.values_at(cover.points).maxCoeff();
    const double probe_best = f.values_at(probes).maxCoeff();
    SuboptimalityCheck out;
    out.gap = probe_best - cover_best;
    out.bound = std::sqrt(2.0 * lipschitz * epsilon) + 1e-6;
    out.holds = out.gap <= out.bound;
    return out;
}

Matrix probe_points(Index d, int count, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("probe_points needs count >= 1");
    Matrix out(count, d);
    if (d == 1) {
        for (int i = 0; i < count; ++i) out(i, 0) = count == 1 ? 0.0 : -1.0 + 2.0 * i / static_cast<double>(count - 1);
        return out;
    }
    Engine engine = make_engine(seed, StreamTag::probes);
    for (int i = 0; i < count; ++i) out.row(i) = sample_unit_ball(d, engine).transpose();
    return out;
}

DesignParams kmab_params(const EmbeddedInstance& instance, std::int64_t n) {
    const Index size = instance.kappa.size();
    double beta = 0.0;
    if (size >= 3) {
        // zeta = kappa for the embedded identity map.
        beta = fit_decay_exponent(instance.kappa.head(std::min<Index>(size, 200)));
    }
    if (!(beta > 0.0)) {
        // Too few cover points for a fit: every point is explored.
        DesignParams p;
        p.J = std::min<Index>(size, static_cast<Index>(n));
        p.lambda_reg = 1.0 / static_cast<double>(n);
        p.beta = beta;
        return p;
    }
    // The cover size enters the exploration exponent: J = (n N_cov)^{1/(beta+2)}.
    DesignParams p = choose_params(n, beta, size);
    p.J = choose_params(n * static_cast<std::int64_t>(size), beta, std::min<Index>(size, static_cast<Index>(n))).J;
    return p;
}

KmabResult kmab_experiment(const KernelSpec& spec, Index d, double epsilon, std::int64_t n, std::uint64_t seed,
                           const KmabOptions& options) {
    const Cover cover = build_cover(epsilon, d, seed);
    const SynthesizedFunction f = synth_function(cover, spec, seed);
    const EmbeddedInstance inst = embed_problem(f.center_values(), cover, spec);
    DesignParams params = kmab_params(inst, n);
    if (options.J) params.J = std::clamp<Index>(*options.J, 1, std::min<Index>(inst.kappa.size(), static_cast<Index>(n)));
    if (options.lambda_reg) params.lambda_reg = *options.lambda_reg;

    Oracle oracle(inst.reward, inst.map, options.tau_sq, seed);
    const PolicySet set = inst.policy_set();
    PipelineOptions popts;
    popts.collinearity_threshold = options.collinearity_threshold;
    popts.distinct_matching = true;
    const PipelineResult res = run_pipeline(oracle, set, n, params, popts);
    KmabResult out;
    out.report = res.report;
    out.cover_size = cover.size();
    out.fitted_beta = params.beta;
    return out;
}

void write_cover(const std::filesystem::path& path, const Cover& cover) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    out << fmt::format("# epsilon={},seed={}\n", csv::format_double(cover.epsilon), cover.seed);
    for (Index k = 0; k < cover.dim(); ++k) out << (k ? "," : "") << 'x' << k;
    out << '\n';
    for (Index i = 0; i < cover.size(); ++i) {
        for (Index k = 0; k < cover.dim(); ++k) out << (k ? "," : "") << csv::format_double(cover.points(i, k));
        out << '\n';
    }
}

Cover read_cover(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
    std::string first;
    std::getline(in, first);
    Cover cover;
    if (std::sscanf(first.c_str(), "# epsilon=%lf,seed=%lu", &cover.epsilon, &cover.seed) != 2) {
        throw InvalidArgument(fmt::format("'{}': missing cover metadata line", path.string()));
    }
    const auto rows = csv::read_numeric(path, true);
    if (rows.empty()) throw InvalidArgument(fmt::format("'{}': empty cover", path.string()));
    cover.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw InvalidArgument("ragged cover rows");
        for (std::size_t k = 0; k < rows[i].size(); ++k) cover.points(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return cover;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << csv::format_double(m(i, j));
        out << '\n';
    }
}

}  // namespace npbandit
