#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "npbandit/errors.hpp"
#include "npbandit/kernel_mab.hpp"
#include "test_support.hpp"

using namespace npbandit;

namespace {
KernelSpec matern(double nu) {
    KernelSpec s;
    s.nu = nu;
    return s;
}

// Half-integer Matern kernels in closed form.
double matern_closed_form(double nu, double r) {
    if (nu == 1.5) {
        const double z = std::sqrt(3.0) * r;
        return (1.0 + z) * std::exp(-z);
    }
    if (nu == 2.5) {
        const double z = std::sqrt(5.0) * r;
        return (1.0 + z + z * z / 3.0) * std::exp(-z);
    }
    const double z = std::sqrt(7.0) * r;
    return (1.0 + z + 2.0 * z * z / 5.0 + z * z * z / 15.0) * std::exp(-z);
}

// K_{1/2}(1) = sqrt(pi/2) e^{-1}; the recurrence gives K_{3/2}(1) = 2 K_{1/2}(1), K_{5/2}(1) = 7 K_{1/2}(1).
double bessel_k_half_integer_at_one(double order) {
    const double k_half = std::sqrt(M_PI / 2.0) * std::exp(-1.0);
    if (order == 0.5) return k_half;
    if (order == 1.5) return 2.0 * k_half;
    return 7.0 * k_half;
}

// The supremum of r exp(-sqrt(2 nu) r) is attained at r = 1/sqrt(2 nu) < 1.
double lipschitz_closed_form(double nu) {
    const double a = std::sqrt(2.0 * nu);
    return std::exp(1.0) * std::pow(2.0, 2.0 - nu) * nu * bessel_k_half_integer_at_one(nu - 1.0) / std::tgamma(nu) /
           (a * std::exp(1.0));
}

double quadratic_form_inverse(const Matrix& K, const Vector& f) { return f.dot(K.llt().solve(f)); }
}  // namespace

TEST_CASE("kernel values") {
    for (double nu : {1.5, 2.5, 3.5}) {
        CHECK(kernel_eval(matern(nu), 0.0) == 1.0);
        CHECK(kernel_eval(matern(nu), 8.0) < 1e-3);
        for (double r = 0.0; r < 4.0; r += 0.01)
            CHECK(std::abs(kernel_eval(matern(nu), r) - matern_closed_form(nu, r)) <= 1e-14);
        double prev = 2.0;
        for (int i = 0; i <= 1000; ++i) {
            const double v = kernel_eval(matern(nu), 4.0 * i / 1000.0);
            CHECK(v <= prev);
            prev = v;
        }
    }
    // Reference value from 30-digit Bessel arithmetic.
    CHECK(std::abs(kernel_eval(matern(1.5), 1.0) - 0.483357724596508) <= 1e-12);
    CHECK(kernel_eval(parse_kernel("rbf"), 0.0) == 1.0);
    CHECK(kernel_eval(parse_kernel("rbf"), 1.0) == doctest::Approx(std::exp(-0.5)));
    CHECK_THROWS_AS(kernel_eval(matern(2.0), 1.0), InvalidArgument);
    CHECK_THROWS_AS(parse_kernel("laplace"), ConfigError);
    CHECK(to_string(parse_kernel("matern72")) == "matern72");
}

TEST_CASE("Lipschitz constant matches the closed form") {
    for (double nu : {1.5, 2.5, 3.5}) {
        const double L = lipschitz_constant(matern(nu));
        CHECK(std::isfinite(L));
        CHECK(L > 0.0);
        CHECK(std::abs(L - lipschitz_closed_form(nu)) <= 1e-7 * L);
        CHECK(std::abs(L - lipschitz_constant(matern(nu), 20000)) <= 1e-6);
    }
    CHECK_THROWS_AS(lipschitz_constant(parse_kernel("rbf")), InvalidArgument);
}

TEST_CASE("Lipschitz constant bounds the kernel decrement on the disk") {
    Engine engine = make_engine(3, StreamTag::probes);
    for (double nu : {1.5, 2.5}) {
        const double L = lipschitz_constant(matern(nu));
        double worst = 0.0;
        for (int k = 0; k < 20000; ++k) {
            const Vector x = sample_unit_ball(2, engine), y = sample_unit_ball(2, engine);
            const double r = (x - y).norm();
            if (r > 0.0) worst = std::max(worst, (1.0 - kernel_eval(matern(nu), r)) / r);
        }
        CHECK(worst <= L);
    }
}

TEST_CASE("cover construction") {
    const Cover one = build_cover(2.0, 1, 0);
    CHECK(one.size() == 1);

    const Cover c = build_cover(0.5, 2, 4);
    for (Index i = 0; i < c.size(); ++i) CHECK(c.points.row(i).norm() <= 1.0);
    CHECK(cover_radius(c, 1000, 99) <= 0.5);

    std::vector<double> sizes;
    for (double eps : {0.5, 0.25, 0.125}) sizes.push_back(double(build_cover(eps, 2, 7).size()));
    for (std::size_t k = 1; k < sizes.size(); ++k) {
        CHECK(sizes[k] / sizes[k - 1] >= 2.0);
        CHECK(sizes[k] / sizes[k - 1] <= 8.0);
    }

    CoverOptions tight;
    tight.max_points = 5;
    CHECK_THROWS_AS(build_cover(0.05, 2, 1, tight), CoverageFailure);
    CHECK_THROWS_AS(build_cover(0.0, 2, 1), InvalidArgument);
}

TEST_CASE("refined covers are nested") {
    const Cover base = build_cover(0.2, 1, 5);
    CoverOptions opts;
    opts.refine = &base;
    const Cover fine = build_cover(0.1, 1, 6, opts);
    CHECK(fine.size() >= base.size());
    CHECK(fine.points.topRows(base.size()) == base.points);
}

TEST_CASE("jitter keeps a duplicated cover positive definite") {
    Matrix pts(3, 1);
    pts << 0.1, 0.1, 0.5;
    const auto jk = jittered_kernel(matern(2.5), pts);
    CHECK(jk.jitter > 0.0);
    CHECK(jk.matrix.llt().info() == Eigen::Success);
}

TEST_CASE("embedding reproduces the cover values exactly") {
    const auto spec = matern(2.5);
    const Cover cover = build_cover(0.1, 1, 2);
    const auto f = synth_function(cover, spec, 3);
    const auto inst = embed_problem(f.center_values(), cover, spec);
    const Index N = cover.size();
    CHECK((inst.basis.transpose() * inst.basis - Matrix::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Index x = 0; x < N; ++x)
        CHECK(std::abs(evaluate(inst.policies[x], inst.reward, inst.map) - inst.values(x)) <= 1e-8);
    CHECK(inst.reward_spectrum.norm(inst.reward.coefficients) <= 1.0 + 1e-8);
    for (Index x = 0; x < N; ++x) CHECK(inst.policy_spectrum.norm(inst.policies[x].coefficients) <= 1.0 + 1e-8);
    CHECK(std::isfinite(boundedness_value(inst.map)));
}

TEST_CASE("synthesized functions") {
    const auto spec = matern(2.5);
    const Cover cover = build_cover(0.1, 1, 8);
    const auto f = synth_function(cover, spec, 9);
    const auto jk = jittered_kernel(spec, cover.points);
    CHECK(f.alpha.dot(jk.matrix * f.alpha) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(synth_function(cover, spec, 9).alpha == f.alpha);

    // Unit norm bounds the derivative by sqrt(-k''(0)) = sqrt(nu / (nu - 1)).
    const double slope_bound = std::sqrt(2.5 / 1.5);
    const Matrix grid = probe_points(1, 2001, 0);
    const Vector v = f.values_at(grid);
    for (Index i = 1; i < grid.rows(); ++i) CHECK(std::abs(v(i) - v(i - 1)) / (grid(i, 0) - grid(i - 1, 0)) <= slope_bound + 1e-6);
}

TEST_CASE("restricting to a sub-cover never increases the norm") {
    const auto spec = matern(2.5);
    const Cover base = build_cover(0.2, 1, 10);
    CoverOptions opts;
    opts.refine = &base;
    const Cover fine = build_cover(0.05, 1, 11, opts);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = synth_function(fine, spec, seed);
        const Vector values = f.values_at(fine.points);
        const double full = quadratic_form_inverse(jittered_kernel(spec, fine.points).matrix, values);
        const double sub = quadratic_form_inverse(jittered_kernel(spec, base.points).matrix, values.head(base.size()));
        CHECK(sub <= full + 1e-8);
    }
}

TEST_CASE("cover suboptimality") {
    const auto spec = matern(2.5);
    const double L = lipschitz_constant(spec);
    const Cover cover = build_cover(0.1, 1, 12);
    const auto f0 = synth_function(cover, spec, 0);
    CHECK(cover_suboptimality_check(cover, f0, cover.points, L, 0.1).gap == 0.0);

    const Matrix probes = probe_points(1, 10001, 0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto chk = cover_suboptimality_check(cover, synth_function(cover, spec, seed), probes, L, 0.1);
        CHECK(chk.holds);
        CHECK(chk.gap <= chk.bound);
    }

    const Cover coarse = build_cover(0.2, 1, 13);
    CoverOptions o1;
    o1.refine = &coarse;
    const Cover mid = build_cover(0.1, 1, 14, o1);
    CoverOptions o2;
    o2.refine = &mid;
    const Cover fine = build_cover(0.05, 1, 15, o2);
    const auto f = synth_function(fine, spec, 16);
    const double g1 = cover_suboptimality_check(coarse, f, probes, L, 0.2).gap;
    const double g2 = cover_suboptimality_check(mid, f, probes, L, 0.1).gap;
    const double g3 = cover_suboptimality_check(fine, f, probes, L, 0.05).gap;
    CHECK(g2 <= g1);
    CHECK(g3 <= g2);
}

TEST_CASE("kernel bandit in the exact regime") {
    KmabOptions opts;
    opts.tau_sq = 0.0;
    opts.J = 1000000;
    opts.lambda_reg = 1e-12;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto res = kmab_experiment(matern(2.5), 1, 0.1, 400, seed, opts);
        CHECK(res.report.J == res.cover_size);
        CHECK(res.report.realized_delta <= 1e-6);
    }
}

TEST_CASE("kernel eigenvalue decay on a one-dimensional cover") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto res = kmab_experiment(matern(2.5), 1, 0.1, 128, seed);
        CHECK(res.fitted_beta >= 4.2);
        CHECK(res.fitted_beta <= 7.8);
    }
}

TEST_CASE("cover files round-trip") {
    const auto dir = npbandit::testing::scratch_dir("cover");
    const Cover c = build_cover(0.3, 2, 17);
    write_cover(dir / "cover.csv", c);
    const Cover back = read_cover(dir / "cover.csv");
    CHECK(back.points == c.points);
    CHECK(back.epsilon == c.epsilon);
    CHECK(back.seed == c.seed);
}
