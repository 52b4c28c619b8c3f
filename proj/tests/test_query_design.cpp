#include <doctest.h>

#include <cmath>
#include <set>

#include "npbandit/errors.hpp"
#include "npbandit/query_design.hpp"
#include "test_support.hpp"

using namespace npbandit;
using npbandit::testing::random_matrix;

TEST_CASE("parameter schedule") {
    const auto one = choose_params(1, 1.0);
    CHECK(one.J == 1);
    CHECK(one.lambda_reg == 1.0);

    // Reference values from 30-digit arithmetic.
    const auto big = choose_params(4096, 0.75);
    CHECK(big.J == 21);
    CHECK(big.lambda_reg == doctest::Approx(0.00502603475784934).epsilon(1e-12));
    const auto small = choose_params(256, 0.75);
    CHECK(small.J == 8);
    CHECK(small.lambda_reg == doctest::Approx(0.0293415909581783).epsilon(1e-12));

    CHECK(choose_params(4096, 0.75, 5).J == 5);
    CHECK_THROWS_AS(choose_params(16, 0.0), InvalidArgument);
    CHECK_THROWS_AS(choose_params(0, 1.0), InvalidArgument);
}

TEST_CASE("J and lambda are monotone in n") {
    Index prev_J = 0;
    double prev_lambda = 2.0;
    for (std::int64_t n = 1; n <= 100000; n *= 3) {
        const auto p = choose_params(n, 1.5);
        CHECK(p.J >= prev_J);
        CHECK(p.lambda_reg < prev_lambda);
        CHECK(p.J <= n);
        prev_J = p.J;
        prev_lambda = p.lambda_reg;
    }
}

TEST_CASE("diagonal plan puts sqrt(mu) on the axes") {
    const auto pi = Spectrum::power_law(1.75, 10), r = Spectrum::power_law(1.0, 10);
    const auto w = whiten(LinearMap::identity(pi, r));
    const auto plan = design_queries(100, w, pi, 4);
    REQUIRE(plan.J == 4);
    for (Index j = 0; j < 4; ++j) {
        const Vector& c = plan.directions[j].coefficients;
        CHECK(c(j) == doctest::Approx(std::sqrt(pi.eigenvalues()(j))));
        CHECK(c.cwiseAbs().sum() == doctest::Approx(std::sqrt(pi.eigenvalues()(j))));
        CHECK(plan.repeats[j] == 25);
        CHECK(pi.norm(c) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("leftover queries go to the leading directions") {
    const auto s = Spectrum::power_law(1.0, 6);
    const auto w = whiten(LinearMap::identity(s, s));
    const auto plan = design_queries(10, w, s, 4);
    CHECK(plan.repeats == std::vector<std::int64_t>{3, 3, 2, 2});
    std::int64_t total = 0;
    for (auto k : plan.repeats) total += k;
    CHECK(total == 10);
    CHECK_THROWS_AS(design_queries(10, w, s, 7), InvalidArgument);
    CHECK_THROWS_AS(design_queries(3, w, s, 4), InvalidArgument);
}

TEST_CASE("dense plan: unit norm, orthogonal directions, full rank covariance") {
    const Index d = 8, J = 5;
    const auto pi = Spectrum::power_law(1.5, d), r = Spectrum::power_law(1.0, d);
    const auto w = whiten(LinearMap::dense(random_matrix(d, d, 3), pi, r));
    const auto plan = design_queries(50, w, pi, J);
    Matrix cov = Matrix::Zero(d, d);
    for (Index a = 0; a < J; ++a) {
        const Vector& pa = plan.directions[a].coefficients;
        CHECK(pi.norm(pa) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((pi.whiten(pa) - w.direction(a)).norm() <= 1e-12);
        for (Index b = 0; b < a; ++b) CHECK(std::abs(pi.inner(pa, plan.directions[b].coefficients)) <= 1e-10);
        cov += static_cast<double>(plan.repeats[a]) / 50.0 * pa * pa.transpose();
    }
    Eigen::FullPivLU<Matrix> lu(cov);
    lu.setThreshold(1e-10);
    CHECK(lu.rank() == J);
}

TEST_CASE("diagonal covariance eigenvalues are mu_j times the repeat share") {
    const auto pi = Spectrum::power_law(1.75, 12), r = Spectrum::power_law(1.0, 12);
    const auto w = whiten(LinearMap::identity(pi, r));
    const auto plan = design_queries(4096, w, pi, 7);
    Vector diag = Vector::Zero(12);
    for (Index a = 0; a < 7; ++a) diag += double(plan.repeats[a]) / 4096.0 * plan.directions[a].coefficients.cwiseAbs2();
    for (Index j = 0; j < 7; ++j)
        CHECK(diag(j) == doctest::Approx(pi.eigenvalues()(j) * double(plan.repeats[j]) / 4096.0).epsilon(1e-12));
    for (Index j = 7; j < 12; ++j) CHECK(diag(j) == 0.0);
}

TEST_CASE("matching against the unit ball leaves the direction unchanged") {
    const auto s = Spectrum::power_law(1.0, 5);
    Vector v = Vector::Zero(5);
    v(2) = std::sqrt(s.eigenvalues()(2));
    const auto m = match_to_policy_set({v}, PolicySet::unit_ball(), s);
    CHECK(m.policy.coefficients == v);
    CHECK(m.candidate_index == -1);
    CHECK(m.collinearity == 1.0);
}

TEST_CASE("matching finds an exact candidate") {
    const auto s = Spectrum::power_law(1.0, 3);
    Vector v = Vector::Zero(3);
    v(1) = std::sqrt(s.eigenvalues()(1));
    Vector other = Vector::Zero(3);
    other(0) = 1.0;
    const auto set = PolicySet::finite({{other}, {-v}, {v}}, s);
    const auto m = match_to_policy_set({v}, set, s);
    CHECK(m.candidate_index == 1);
    CHECK(m.collinearity == doctest::Approx(1.0));
}

TEST_CASE("matching agrees with exhaustive search") {
    const Index d = 10;
    const auto s = Spectrum::power_law(1.5, d);
    Engine engine = make_engine(11, StreamTag::arms);
    std::vector<Policy> cands;
    for (int k = 0; k < 500; ++k) cands.push_back(random_unit_policy(s, engine));
    const auto set = PolicySet::finite(cands, s);
    for (int t = 0; t < 20; ++t) {
        const Policy dir = random_unit_policy(s, engine);
        std::size_t best = 0;
        double best_cos = -1.0;
        for (std::size_t k = 0; k < cands.size(); ++k) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (Index j = 0; j < d; ++j) {
                const double mu = s.eigenvalues()(j);
                dot += dir.coefficients(j) * cands[k].coefficients(j) / mu;
                na += dir.coefficients(j) * dir.coefficients(j) / mu;
                nb += cands[k].coefficients(j) * cands[k].coefficients(j) / mu;
            }
            const double c = std::abs(dot) / std::sqrt(na * nb);
            if (c > best_cos) {
                best_cos = c;
                best = k;
            }
        }
        const auto m = match_to_policy_set(dir, set, s, 0.0);
        CHECK(m.candidate_index == static_cast<std::int64_t>(best));
        CHECK(m.collinearity == doctest::Approx(best_cos).epsilon(1e-12));
    }
}

TEST_CASE("matching below the collinearity threshold names the direction") {
    const auto s = Spectrum::from_eigenvalues(Vector::Ones(2));
    Vector v(2), w(2);
    v << 1.0, 0.0;
    w << 0.0, 1.0;
    const auto set = PolicySet::finite({{w}}, s);
    try {
        (void)match_to_policy_set({v}, set, s, 0.5, 3);
        FAIL("expected AssumptionViolated");
    } catch (const AssumptionViolated& e) {
        CHECK(e.direction_index() == 3);
    }
}

TEST_CASE("distinct matching never reuses a candidate") {
    const Index d = 6;
    const auto s = Spectrum::power_law(1.0, d);
    const auto w = whiten(LinearMap::identity(s, s));
    const auto plan = design_queries(60, w, s, 4);
    Engine engine = make_engine(1, StreamTag::arms);
    std::vector<Policy> cands;
    for (int k = 0; k < 30; ++k) cands.push_back(random_unit_policy(s, engine));
    const auto matched = match_plan(plan, PolicySet::finite(cands, s), s, 0.0, true);
    std::set<std::int64_t> used(matched.source_index.begin(), matched.source_index.end());
    CHECK(used.size() == 4);
    CHECK(matched.repeats == plan.repeats);
}

TEST_CASE("decay exponent fit") {
    Vector exact(50), scaled(50), noisy(200);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (Index j = 0; j < 50; ++j) {
        exact(j) = std::pow(double(j + 1), -0.75);
        scaled(j) = 3.0 * std::pow(double(j + 1), -2.0);
    }
    for (Index j = 0; j < 200; ++j) noisy(j) = std::pow(double(j + 1), -1.0) * (1.0 + jitter(gen));
    CHECK(fit_decay_exponent(exact) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(fit_decay_exponent(scaled) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(fit_decay_exponent(noisy) - 1.0) <= 0.05);
    Vector bad = exact;
    bad(3) = 0.0;
    CHECK_THROWS_AS(fit_decay_exponent(bad), InvalidArgument);

    const auto pi = Spectrum::power_law(1.75, 300), r = Spectrum::power_law(1.0, 300);
    CHECK(fitted_beta(whiten(LinearMap::identity(pi, r))) == doctest::Approx(0.75).epsilon(1e-9));
}
