#include "npbandit/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "npbandit/csv_io.hpp"
#include "npbandit/errors.hpp"

namespace npbandit {

// ---------------------------------------------------------------- config

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "scaling") return ExperimentKind::scaling;
    if (name == "dim_sweep") return ExperimentKind::dim_sweep;
    if (name == "compare_baselines") return ExperimentKind::compare_baselines;
    if (name == "kmab") return ExperimentKind::kmab;
    if (name == "kmab_regret") return ExperimentKind::kmab_regret;
    if (name == "bounds") return ExperimentKind::bounds;
    throw ConfigError(fmt::format("unknown experiment '{}'", name));
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::scaling: return "scaling";
        case ExperimentKind::dim_sweep: return "dim_sweep";
        case ExperimentKind::compare_baselines: return "compare_baselines";
        case ExperimentKind::kmab: return "kmab";
        case ExperimentKind::kmab_regret: return "kmab_regret";
        case ExperimentKind::bounds: return "bounds";
    }
    return "unknown";
}

std::vector<std::string> allowed_keys(ExperimentKind kind) {
    std::vector<std::string> keys{"experiment", "seeds", "output_dir"};
    const std::vector<std::string> instance{"beta_pi", "beta_r", "map_beta", "tau_sq", "reward_prior", "n_grid"};
    const std::vector<std::string> kernel{"kernel", "domain_dim", "epsilon", "tau_sq", "collinearity_threshold"};
    switch (kind) {
        case ExperimentKind::scaling:
        case ExperimentKind::bounds:
            keys.insert(keys.end(), instance.begin(), instance.end());
            keys.push_back("d");
            break;
        case ExperimentKind::dim_sweep:
            keys.insert(keys.end(), instance.begin(), instance.end());
            keys.push_back("d_grid");
            break;
        case ExperimentKind::compare_baselines:
            keys.insert(keys.end(), instance.begin(), instance.end());
            keys.insert(keys.end(), {"d", "num_arms", "confidence_scale"});
            break;
        case ExperimentKind::kmab:
            keys.insert(keys.end(), kernel.begin(), kernel.end());
            keys.push_back("n_grid");
            break;
        case ExperimentKind::kmab_regret:
            keys.insert(keys.end(), kernel.begin(), kernel.end());
            keys.insert(keys.end(), {"T_grid", "alpha", "confidence_scale"});
            break;
    }
    return keys;
}

namespace {

std::vector<std::int64_t> increasing_grid(const KeyValues& raw, const std::string& key, const std::string& fallback) {
    const auto grid = parse_int_list(get_string(raw, key, fallback));
    if (grid.empty()) throw ConfigError(fmt::format("'{}' must not be empty", key));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 1) throw ConfigError(fmt::format("'{}' entries must be >= 1", key));
        if (i > 0 && grid[i] <= grid[i - 1]) throw ConfigError(fmt::format("'{}' must be strictly increasing", key));
    }
    return grid;
}

void require_positive(double value, const std::string& key) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(fmt::format("'{}' must be > 0 (got {})", key, value));
}

}  // namespace

ExperimentConfig parse_experiment_config(ExperimentKind kind, const KeyValues& raw) {
    reject_unknown_keys(raw, allowed_keys(kind));
    if (const auto it = raw.find("experiment"); it != raw.end() && parse_experiment(it->second) != kind) {
        throw ConfigError(fmt::format("config is for experiment '{}' but '{}' was requested", it->second, to_string(kind)));
    }
    ExperimentConfig c;
    c.kind = kind;
    c.raw = raw;
    c.beta_pi = get_double(raw, "beta_pi", c.beta_pi);
    c.beta_r = get_double(raw, "beta_r", c.beta_r);
    c.map_beta = get_double(raw, "map_beta", c.map_beta);
    c.tau_sq = get_double(raw, "tau_sq", kind == ExperimentKind::kmab || kind == ExperimentKind::kmab_regret ? 0.01 : c.tau_sq);
    if (!(c.tau_sq >= 0.0)) throw ConfigError("'tau_sq' must be >= 0");
    require_positive(c.beta_pi, "beta_pi");
    require_positive(c.beta_r, "beta_r");
    if (!(c.map_beta >= 0.0)) throw ConfigError("'map_beta' must be >= 0");
    c.reward_prior = parse_reward_prior(get_string(raw, "reward_prior", "ellipsoid"));

    const std::int64_t default_d = kind == ExperimentKind::compare_baselines ? 64 : 8192;
    c.d = static_cast<Index>(get_int(raw, "d", default_d));
    if (c.d < 1) throw ConfigError("'d' must be >= 1");
    if (kind == ExperimentKind::dim_sweep) {
        for (const auto v : increasing_grid(raw, "d_grid", "32,256,2048")) c.d_grid.push_back(static_cast<Index>(v));
    }
    const std::string default_n = kind == ExperimentKind::kmab ? "128,512,2048" : "256,512,1024,2048,4096";
    if (kind != ExperimentKind::kmab_regret) c.n_grid = increasing_grid(raw, "n_grid", default_n);
    if (kind == ExperimentKind::kmab_regret) c.T_grid = increasing_grid(raw, "T_grid", "256,512,1024,2048,4096");

    const auto seeds = parse_int_list(get_string(raw, "seeds", "0..9"));
    if (seeds.empty()) throw ConfigError("'seeds' must not be empty");
    for (const auto s : seeds) {
        if (s < 0) throw ConfigError("seeds must be non-negative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    c.output_dir = get_string(raw, "output_dir", ".");

    if (raw.count("num_arms")) {
        const auto arms = get_int(raw, "num_arms");
        if (arms < 1) throw ConfigError("'num_arms' must be >= 1");
        c.num_arms = static_cast<Index>(arms);
    }
    c.confidence_scale = get_double(raw, "confidence_scale", c.confidence_scale);
    if (!(c.confidence_scale >= 0.0)) throw ConfigError("'confidence_scale' must be >= 0");

    c.kernel = parse_kernel(get_string(raw, "kernel", "matern52"));
    c.domain_dim = static_cast<Index>(get_int(raw, "domain_dim", 1));
    if (c.domain_dim < 1) throw ConfigError("'domain_dim' must be >= 1");
    c.epsilon = get_double(raw, "epsilon", c.epsilon);
    if (!(c.epsilon > 0.0 && c.epsilon <= 2.0)) throw ConfigError("'epsilon' must lie in (0, 2]");
    if (raw.count("alpha")) {
        c.alpha = get_double(raw, "alpha");
        require_positive(*c.alpha, "alpha");
    }
    c.collinearity_threshold = get_double(raw, "collinearity_threshold", c.collinearity_threshold);
    if (!(c.collinearity_threshold >= 0.0 && c.collinearity_threshold <= 1.0)) {
        throw ConfigError("'collinearity_threshold' must lie in [0, 1]");
    }
    return c;
}

ExperimentConfig load_experiment_config(ExperimentKind kind, const std::filesystem::path& path) {
    return parse_experiment_config(kind, load_key_values(path));
}

// ---------------------------------------------------------------- statistics

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    SlopeFit fit;
    if (x.size() != y.size() || x.size() < 2) return fit;
    const auto m = static_cast<double>(x.size());
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return fit;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / m;
        my += ly[i] / m;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) return fit;
    fit.applicable = true;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

MeanStat mean_and_stderr(const std::vector<double>& values) {
    MeanStat s;
    if (values.empty()) return s;
    const auto k = static_cast<double>(values.size());
    for (const double v : values) s.mean += v / k;
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / (k - 1.0) / k);
    }
    return s;
}

// ---------------------------------------------------------------- cell runner

namespace {

// Evaluates fn(i) for i in [0, count) on `jobs` threads. On failure the rows
// of completed cells are flushed to `partial_path` (when set) before the
// lowest-index exception is rethrown.
template <class Result, class Fn, class RowFn>
std::vector<Result> run_cells(std::size_t count, int jobs, Fn&& fn, RowFn&& row, const std::string& header,
                              const std::filesystem::path* partial_path) {
    std::vector<std::optional<Result>> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= count || failed.load()) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!errors[i]) continue;
        if (partial_path != nullptr) {
            std::ofstream out(*partial_path);
            out << header << '\n';
            for (std::size_t k = 0; k < count; ++k) {
                if (results[k]) out << row(k, *results[k]) << '\n';
            }
        }
        std::rethrow_exception(errors[i]);
    }
    std::vector<Result> out;
    out.reserve(count);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

struct PowerLawInstance {
    LinearMap map;
    WhitenedDecomposition decomp;
    double beta;
};

PowerLawInstance make_instance(const ExperimentConfig& c, Index d) {
    Spectrum pi = Spectrum::power_law(c.beta_pi, d);
    Spectrum r = Spectrum::power_law(c.beta_r, d);
    LinearMap map = c.map_beta > 0.0
                        ? LinearMap::diagonal(Spectrum::power_law(c.map_beta, d).eigenvalues(), std::move(pi), std::move(r))
                        : LinearMap::identity(std::move(pi), std::move(r));
    WhitenedDecomposition decomp = whiten(map);
    const double beta = decomp.size() >= 3 ? fitted_beta(decomp) : c.beta_pi + 2.0 * c.map_beta - c.beta_r;
    if (!(beta > 0.0)) {
        throw ConfigError(fmt::format("composite decay exponent {:.4f} is not positive: the instance is not learnable", beta));
    }
    return {std::move(map), std::move(decomp), beta};
}

std::optional<std::filesystem::path> partial_file(const ExperimentConfig& c) {
    if (!c.flush_partial) return std::nullopt;
    return c.output_dir / (to_string(c.kind) + "_partial.csv");
}

RiskReport scaling_cell(const ExperimentConfig& c, const PowerLawInstance& inst, std::int64_t n, std::uint64_t seed) {
    const RewardFunction reward = sample_reward(inst.map.reward_spectrum(), seed, c.reward_prior);
    Oracle oracle(reward, inst.map, c.tau_sq, seed);
    const DesignParams params = choose_params(n, inst.beta, inst.map.policy_dim());
    PipelineOptions opts;
    opts.decomposition = &inst.decomp;
    return run_pipeline(oracle, PolicySet::unit_ball(), n, params, opts).report;
}

// The GP-UCB exponent with a flag when beta <= 1 makes it non-decaying.
std::string gp_ucb_text(double beta) {
    const double raw = -(beta - 1.0) / (2.0 * (beta + 1.0));
    if (beta > 1.0) return fmt::format("{:.4f}", raw);
    return fmt::format("{:.4f} (beta <= 1: the rate does not decay)", raw);
}

}  // namespace

// ---------------------------------------------------------------- experiments

ScalingResult scaling_experiment(const ExperimentConfig& c, int jobs) {
    const PowerLawInstance inst = make_instance(c, c.d);
    const std::size_t ns = c.seeds.size();
    const auto partial = partial_file(c);
    auto cells = run_cells<RiskReport>(
        c.n_grid.size() * ns, jobs,
        [&](std::size_t i) { return scaling_cell(c, inst, c.n_grid[i / ns], c.seeds[i % ns]); },
        [](std::size_t, const RiskReport& r) { return report_csv_row(r); }, report_csv_header(),
        partial ? &*partial : nullptr);

    ScalingResult out;
    out.beta = inst.beta;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
        std::vector<double> deltas;
        for (std::size_t s = 0; s < ns; ++s) deltas.push_back(cells[k * ns + s].realized_delta);
        out.n.push_back(c.n_grid[k]);
        out.J.push_back(cells[k * ns].J);
        out.lambda_reg.push_back(cells[k * ns].lambda_reg);
        out.delta.push_back(mean_and_stderr(deltas));
        xs.push_back(static_cast<double>(c.n_grid[k]));
        ys.push_back(out.delta.back().mean);
    }
    out.fit = fit_loglog(xs, ys);
    out.theory_exponent = power_law_exponent(inst.beta, PolicySetCase::unit_ball);
    if (inst.beta > 1.0) out.gp_ucb_exponent = gp_ucb_exponent(inst.beta);
    out.cells = std::move(cells);
    return out;
}

DimSweepResult dim_sweep(const ExperimentConfig& c, int jobs) {
    std::vector<PowerLawInstance> instances;
    for (const Index d : c.d_grid) instances.push_back(make_instance(c, d));
    const std::size_t ns = c.seeds.size();
    const std::size_t nn = c.n_grid.size();
    const auto partial = partial_file(c);
    auto cells = run_cells<RiskReport>(
        c.d_grid.size() * nn * ns, jobs,
        [&](std::size_t i) {
            return scaling_cell(c, instances[i / (nn * ns)], c.n_grid[(i / ns) % nn], c.seeds[i % ns]);
        },
        [&](std::size_t i, const RiskReport& r) { return fmt::format("{},{}", c.d_grid[i / (nn * ns)], report_csv_row(r)); },
        "d," + report_csv_header(), partial ? &*partial : nullptr);

    DimSweepResult out;
    out.d = c.d_grid;
    out.n = c.n_grid;
    for (std::size_t i = 0; i < c.d_grid.size(); ++i) {
        std::vector<MeanStat> row;
        for (std::size_t k = 0; k < nn; ++k) {
            std::vector<double> deltas;
            for (std::size_t s = 0; s < ns; ++s) deltas.push_back(cells[(i * nn + k) * ns + s].realized_delta);
            row.push_back(mean_and_stderr(deltas));
        }
        // Larger n must not be worse, allowing two standard errors of slack.
        for (std::size_t k = 1; k < nn; ++k) {
            const double slack = 2.0 * std::hypot(row[k].stderr_, row[k - 1].stderr_);
            if (row[k].mean > row[k - 1].mean + slack) out.ordering_holds = false;
        }
        out.delta.push_back(std::move(row));
    }
    if (c.d_grid.size() >= 2) {
        const auto& a = out.delta[out.delta.size() - 2];
        const auto& b = out.delta.back();
        for (std::size_t k = 0; k < nn; ++k) out.plateau_change.push_back(std::abs(b[k].mean - a[k].mean) / a[k].mean);
    }
    return out;
}

CompareResult compare_baselines(const ExperimentConfig& c, int jobs) {
    const PowerLawInstance inst = make_instance(c, c.d);
    const Index arms_count = c.num_arms.value_or(
        std::max<Index>(1, static_cast<Index>(std::llround(64.0 * std::sqrt(static_cast<double>(c.d))))));
    const std::size_t ns = c.seeds.size();
    struct Cell {
        double designed, random, gp_ucb;
    };
    const auto partial = partial_file(c);
    auto cells = run_cells<Cell>(
        c.n_grid.size() * ns, jobs,
        [&](std::size_t i) {
            const std::int64_t n = c.n_grid[i / ns];
            const std::uint64_t seed = c.seeds[i % ns];
            const RewardFunction reward = sample_reward(inst.map.reward_spectrum(), seed, c.reward_prior);
            const DesignParams params = choose_params(n, inst.beta, inst.map.policy_dim());
            Cell cell{};
            {
                Oracle oracle(reward, inst.map, c.tau_sq, seed);
                PipelineOptions opts;
                opts.decomposition = &inst.decomp;
                opts.analytics = false;
                cell.designed = run_pipeline(oracle, PolicySet::unit_ball(), n, params, opts).report.realized_delta;
            }
            {
                Oracle oracle(reward, inst.map, c.tau_sq, seed);
                cell.random =
                    random_query_baseline(oracle, PolicySet::unit_ball(), n, params.lambda_reg, seed).report.realized_delta;
            }
            {
                Engine engine = make_engine(seed, StreamTag::arms);
                std::vector<Policy> arms;
                for (Index a = 0; a < arms_count; ++a) arms.push_back(random_unit_policy(inst.map.policy_spectrum(), engine));
                Oracle oracle(reward, inst.map, c.tau_sq, seed);
                const auto res = gp_ucb_run(oracle, arms, n, c.confidence_scale);
                cell.gp_ucb = res.trace.best_value - evaluate(res.recommendation, reward, inst.map);
            }
            return cell;
        },
        [&](std::size_t i, const Cell& cell) {
            return fmt::format("{},{},{},{},{}", c.n_grid[i / ns], c.seeds[i % ns], csv::format_double(cell.designed),
                               csv::format_double(cell.random), csv::format_double(cell.gp_ucb));
        },
        "n,seed,designed,random,gp_ucb", partial ? &*partial : nullptr);

    CompareResult out;
    out.beta = inst.beta;
    out.plugin_exponent = power_law_exponent(inst.beta, PolicySetCase::unit_ball);
    if (inst.beta > 1.0) out.gp_ucb_exponent = gp_ucb_exponent(inst.beta);
    const std::vector<std::pair<std::string, double Cell::*>> methods{
        {"designed", &Cell::designed}, {"random", &Cell::random}, {"gp_ucb", &Cell::gp_ucb}};
    for (const auto& [name, field] : methods) {
        MethodCurve curve;
        curve.method = name;
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
            std::vector<double> v;
            for (std::size_t s = 0; s < ns; ++s) v.push_back(cells[k * ns + s].*field);
            curve.x.push_back(c.n_grid[k]);
            curve.y.push_back(mean_and_stderr(v));
            xs.push_back(static_cast<double>(c.n_grid[k]));
            ys.push_back(curve.y.back().mean);
        }
        curve.fit = fit_loglog(xs, ys);
        out.curves.push_back(std::move(curve));
    }
    return out;
}

KmabSweepResult kmab_sweep(const ExperimentConfig& c, int jobs) {
    const std::size_t ns = c.seeds.size();
    KmabOptions opts;
    opts.tau_sq = c.tau_sq;
    opts.collinearity_threshold = c.collinearity_threshold;
    const auto partial = partial_file(c);
    auto cells = run_cells<KmabResult>(
        c.n_grid.size() * ns, jobs,
        [&](std::size_t i) { return kmab_experiment(c.kernel, c.domain_dim, c.epsilon, c.n_grid[i / ns], c.seeds[i % ns], opts); },
        [](std::size_t, const KmabResult& r) { return report_csv_row(r.report); }, report_csv_header(),
        partial ? &*partial : nullptr);
    KmabSweepResult out;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
        std::vector<double> deltas;
        double cover = 0.0, beta = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const auto& cell = cells[k * ns + s];
            deltas.push_back(cell.report.realized_delta);
            cover += static_cast<double>(cell.cover_size) / static_cast<double>(ns);
            beta += cell.fitted_beta / static_cast<double>(ns);
        }
        out.n.push_back(c.n_grid[k]);
        out.delta.push_back(mean_and_stderr(deltas));
        out.mean_cover_size.push_back(cover);
        out.mean_beta.push_back(beta);
        xs.push_back(static_cast<double>(c.n_grid[k]));
        ys.push_back(out.delta.back().mean);
    }
    out.fit = fit_loglog(xs, ys);
    return out;
}

double matern_etc_alpha(double nu, Index d) {
    const double dd = static_cast<double>(d);
    return (2.0 * nu + dd) / (4.0 * nu + dd * (6.0 + 4.0 * dd));
}

KmabRegretResult kmab_regret(const ExperimentConfig& c, int jobs) {
    const double nu = c.kernel.family == KernelSpec::Family::matern ? c.kernel.nu : 2.5;
    const double alpha = c.alpha.value_or(matern_etc_alpha(nu, c.domain_dim));
    const std::size_t ns = c.seeds.size();
    struct Cell {
        double etc, gp_ucb;
    };
    const auto partial = partial_file(c);
    auto cells = run_cells<Cell>(
        c.T_grid.size() * ns, jobs,
        [&](std::size_t i) {
            const std::int64_t T = c.T_grid[i / ns];
            const std::uint64_t seed = c.seeds[i % ns];
            const Cover cover = build_cover(c.epsilon, c.domain_dim, seed);
            const SynthesizedFunction f = synth_function(cover, c.kernel, seed);
            const EmbeddedInstance inst = embed_problem(f.center_values(), cover, c.kernel);
            const PolicySet set = inst.policy_set();
            const PipelineFn pipeline = [&](Oracle& oracle, std::int64_t n) {
                PipelineOptions opts;
                opts.collinearity_threshold = c.collinearity_threshold;
                opts.distinct_matching = true;
                opts.analytics = false;
                return run_pipeline(oracle, set, n, kmab_params(inst, n), opts);
            };
            Cell cell{};
            {
                Oracle oracle(inst.reward, inst.map, c.tau_sq, seed);
                cell.etc = explore_then_commit(pipeline, oracle, T, alpha).final_regret();
            }
            {
                Oracle oracle(inst.reward, inst.map, c.tau_sq, seed);
                cell.gp_ucb = gp_ucb_run(oracle, inst.policies, T, c.confidence_scale).trace.final_regret();
            }
            return cell;
        },
        [&](std::size_t i, const Cell& cell) {
            return fmt::format("{},{},{},{}", c.T_grid[i / ns], c.seeds[i % ns], csv::format_double(cell.etc),
                               csv::format_double(cell.gp_ucb));
        },
        "T,seed,etc,gp_ucb", partial ? &*partial : nullptr);

    KmabRegretResult out;
    out.alpha = alpha;
    out.theory_exponent = 1.0 / (1.0 + alpha);
    const std::vector<std::pair<std::string, double Cell::*>> methods{{"etc", &Cell::etc}, {"gp_ucb", &Cell::gp_ucb}};
    for (const auto& [name, field] : methods) {
        MethodCurve curve;
        curve.method = name;
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < c.T_grid.size(); ++k) {
            std::vector<double> v;
            for (std::size_t s = 0; s < ns; ++s) v.push_back(cells[k * ns + s].*field);
            curve.x.push_back(c.T_grid[k]);
            curve.y.push_back(mean_and_stderr(v));
            xs.push_back(static_cast<double>(c.T_grid[k]));
            ys.push_back(curve.y.back().mean);
        }
        curve.fit = fit_loglog(xs, ys);
        out.curves.push_back(std::move(curve));
    }
    return out;
}

BoundsResult bounds_experiment(const ExperimentConfig& c) {
    const PowerLawInstance inst = make_instance(c, c.d);
    BoundsResult out;
    out.beta = inst.beta;
    for (const auto n : c.n_grid) {
        const DesignParams p = choose_params(n, inst.beta, inst.map.policy_dim());
        out.rows.push_back({n, p.J, p.lambda_reg, bound_unit_ball(inst.decomp.zeta(), p.J, p.lambda_reg, c.tau_sq, n),
                            power_law_rate(inst.beta, n, PolicySetCase::unit_ball)});
    }
    return out;
}

// ---------------------------------------------------------------- output

namespace {

constexpr const char* kExponentNote =
    "note: the plug-in exponent is -beta/(beta+2); a rate of n^{-beta/(beta+1)} is sometimes quoted for the same "
    "estimator and is not used here.";

std::string format_fit(const SlopeFit& fit) {
    if (!fit.applicable) return "n/a (needs at least two grid points with positive values)";
    return fmt::format("{:.4f} (R^2 = {:.4f})", fit.slope, fit.r_squared);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    out << body;
}

std::string stat_cells(const MeanStat& s) { return fmt::format("{},{}", csv::format_double(s.mean), csv::format_double(s.stderr_)); }

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const InvalidArgument*>(&e) != nullptr) return 2;
    if (dynamic_cast<const NumericalFailure*>(&e) != nullptr) return 3;
    return 1;
}

std::string data_hash(const ExperimentConfig& config) {
    KeyValues kv = config.raw;
    kv.erase("output_dir");
    return config_hash(kv);
}

std::string run_and_write(const ExperimentConfig& input, int jobs) {
    ExperimentConfig config = input;
    config.flush_partial = true;
    std::filesystem::create_directories(config.output_dir);
    const std::string name = to_string(config.kind);
    const std::string hash = data_hash(config);
    const std::string hash_line = fmt::format("# config_hash={}\n", hash);
    std::ostringstream csv_out;
    std::ostringstream report;
    csv_out << hash_line;
    report << fmt::format("experiment: {}\nconfig_hash: {}\nseeds: {}\n", name, hash, config.seeds.size());

    switch (config.kind) {
        case ExperimentKind::scaling: {
            const auto r = scaling_experiment(config, jobs);
            csv_out << "n,J,lambda_reg,mean_delta,stderr\n";
            for (std::size_t k = 0; k < r.n.size(); ++k) {
                csv_out << fmt::format("{},{},{},{}\n", r.n[k], r.J[k], csv::format_double(r.lambda_reg[k]), stat_cells(r.delta[k]));
            }
            std::ostringstream cells;
            cells << hash_line << report_csv_header() << '\n';
            for (const auto& cell : r.cells) cells << report_csv_row(cell) << '\n';
            write_file(config.output_dir / "scaling_cells.csv", cells.str());
            report << fmt::format("reward_prior: {}\nfitted_beta: {:.6f}\nfitted_slope: {}\ntheory_exponent: {:.4f}\n",
                                  to_string(config.reward_prior), r.beta, format_fit(r.fit), r.theory_exponent);
            report << fmt::format("gp_ucb_exponent: {}\n{}\n", gp_ucb_text(r.beta), kExponentNote);
            break;
        }
        case ExperimentKind::dim_sweep: {
            const auto r = dim_sweep(config, jobs);
            csv_out << "d,n,mean_delta,stderr\n";
            for (std::size_t i = 0; i < r.d.size(); ++i) {
                for (std::size_t k = 0; k < r.n.size(); ++k) csv_out << fmt::format("{},{},{}\n", r.d[i], r.n[k], stat_cells(r.delta[i][k]));
            }
            report << fmt::format("reward_prior: {}\nordering (larger n gives smaller mean delta, 2 s.e. slack): {}\n",
                                  to_string(config.reward_prior), r.ordering_holds ? "holds" : "VIOLATED");
            for (std::size_t k = 0; k < r.plateau_change.size(); ++k) {
                report << fmt::format("relative change between the two largest d at n={}: {:.4f}\n", r.n[k], r.plateau_change[k]);
            }
            break;
        }
        case ExperimentKind::compare_baselines: {
            const auto r = compare_baselines(config, jobs);
            csv_out << "method,n,mean_delta,stderr\n";
            for (const auto& curve : r.curves) {
                for (std::size_t k = 0; k < curve.x.size(); ++k) csv_out << fmt::format("{},{},{}\n", curve.method, curve.x[k], stat_cells(curve.y[k]));
            }
            report << fmt::format("fitted_beta: {:.6f}\nplugin_exponent: {:.4f}\ngp_ucb_exponent: {}\n", r.beta, r.plugin_exponent,
                                  gp_ucb_text(r.beta));
            for (const auto& curve : r.curves) report << fmt::format("slope[{}]: {}\n", curve.method, format_fit(curve.fit));
            report << "gp_ucb delta is measured against the best of its arms; designed and random against the unit-ball optimum.\n";
            report << kExponentNote << '\n';
            break;
        }
        case ExperimentKind::kmab: {
            const auto r = kmab_sweep(config, jobs);
            csv_out << "n,mean_delta,stderr,mean_cover_size,mean_beta\n";
            for (std::size_t k = 0; k < r.n.size(); ++k) {
                csv_out << fmt::format("{},{},{},{}\n", r.n[k], stat_cells(r.delta[k]), csv::format_double(r.mean_cover_size[k]),
                                       csv::format_double(r.mean_beta[k]));
            }
            report << fmt::format("kernel: {}\ndomain_dim: {}\nepsilon: {}\nslope: {}\n", to_string(config.kernel), config.domain_dim,
                                  config.epsilon, format_fit(r.fit));
            break;
        }
        case ExperimentKind::kmab_regret: {
            const auto r = kmab_regret(config, jobs);
            csv_out << "method,T,mean_cum_regret,stderr\n";
            for (const auto& curve : r.curves) {
                for (std::size_t k = 0; k < curve.x.size(); ++k) csv_out << fmt::format("{},{},{}\n", curve.method, curve.x[k], stat_cells(curve.y[k]));
            }
            report << fmt::format("kernel: {}\ndomain_dim: {}\nepsilon: {}\nalpha: {:.6f}\nexploration exponent 1/(1+alpha): {:.4f}\n",
                                  to_string(config.kernel), config.domain_dim, config.epsilon, r.alpha, r.theory_exponent);
            for (const auto& curve : r.curves) report << fmt::format("slope[{}]: {}\n", curve.method, format_fit(curve.fit));
            break;
        }
        case ExperimentKind::bounds: {
            const auto r = bounds_experiment(config);
            csv_out << "n,J,lambda_reg,bound,rate\n";
            for (const auto& row : r.rows) {
                csv_out << fmt::format("{},{},{},{},{}\n", row.n, row.J, csv::format_double(row.lambda_reg),
                                       csv::format_double(row.bound), csv::format_double(row.rate));
            }
            report << fmt::format("fitted_beta: {:.6f}\nuniversal constant c: 1\n", r.beta);
            break;
        }
    }
    write_file(config.output_dir / (name + ".csv"), csv_out.str());
    write_file(config.output_dir / (name + "_report.txt"), report.str());
    return report.str();
}

}  // namespace npbandit
