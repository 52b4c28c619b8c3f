#include <doctest.h>

#include <cmath>

#include "npbandit/bandit_env.hpp"
#include "npbandit/errors.hpp"
#include "test_support.hpp"

using namespace npbandit;
using npbandit::testing::random_matrix;
using npbandit::testing::random_vector;

namespace {
Spectrum ones(Index d) { return Spectrum::from_eigenvalues(Vector::Ones(d)); }

Policy scaled_to_unit(const Vector& v, const Spectrum& s) { return {v / s.norm(v)}; }
}  // namespace

TEST_CASE("evaluate with the identity map and unit spectra is a dot product") {
    const auto s = ones(2);
    const auto map = LinearMap::identity(s, s);
    CHECK(evaluate({Vector::Ones(2)}, {Vector::Ones(2)}, map) == doctest::Approx(2.0));
    Vector e1 = Vector::Zero(2), e2 = Vector::Zero(2);
    e1(0) = 1.0;
    e2(1) = 1.0;
    CHECK(evaluate({e1}, {e2}, map) == 0.0);
}

TEST_CASE("evaluate matches the termwise sum") {
    const Index d = 5;
    const auto pi = Spectrum::power_law(1.5, d), r = Spectrum::power_law(1.0, d);
    const Matrix M = random_matrix(d, d, 4);
    const auto map = LinearMap::dense(M, pi, r);
    const Vector rv = random_vector(d, 5), pv = random_vector(d, 6);
    double sum = 0.0;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) sum += rv(i) / r.eigenvalues()(i) * M(i, j) * pv(j);
    CHECK(evaluate({pv}, {rv}, map) == doctest::Approx(sum).epsilon(1e-13));
}

TEST_CASE("noiseless oracle returns the exact value, any seed") {
    const auto s = Spectrum::power_law(1.0, 4);
    const auto map = LinearMap::identity(s, s);
    const Vector rv = random_vector(4, 1), pv = random_vector(4, 2);
    const double exact = evaluate({pv}, {rv}, map);
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        Oracle o({rv}, map, 0.0, seed);
        CHECK(o.query({pv}) == exact);
        CHECK(oracle_query(o, {pv}) == exact);
        CHECK(o.queries_made() == 2);
    }
}

TEST_CASE("noisy oracle is reproducible and centred") {
    const auto s = Spectrum::power_law(1.0, 3);
    const auto map = LinearMap::identity(s, s);
    const Vector rv = random_vector(3, 8), pv = random_vector(3, 9);
    const double exact = evaluate({pv}, {rv}, map);
    const double tau_sq = 0.01;
    Oracle a({rv}, map, tau_sq, 42), b({rv}, map, tau_sq, 42);
    for (int i = 0; i < 10; ++i) CHECK(a.query({pv}) == b.query({pv}));

    Oracle o({rv}, map, tau_sq, 7);
    const int N = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < N; ++i) {
        const double y = o.query({pv}) - exact;
        sum += y;
        sq += y * y;
    }
    CHECK(std::abs(sum / N) <= 3.0 * std::sqrt(tau_sq / N));
    CHECK(sq / N == doctest::Approx(tau_sq).epsilon(0.02));
    CHECK_THROWS_AS(Oracle({rv}, map, -1.0, 0), InvalidArgument);
}

TEST_CASE("unit-ball optimum for M = I is the leading axis") {
    Vector mu(3);
    mu << 0.9, 0.5, 0.1;
    const auto s = Spectrum::from_eigenvalues(mu);
    const auto map = LinearMap::identity(s, s);
    Vector e1 = Vector::Zero(3);
    e1(0) = 1.0;
    const Policy p = optimal_policy({e1}, PolicySet::unit_ball(), map);
    CHECK(p.coefficients(0) == doctest::Approx(std::sqrt(0.9)));
    CHECK(std::abs(p.coefficients(1)) + std::abs(p.coefficients(2)) <= 1e-15);
    CHECK(s.norm(p.coefficients) == doctest::Approx(1.0));
}

TEST_CASE("finite-set optimum and ties") {
    const auto s = ones(2);
    const auto map = LinearMap::identity(s, s);
    Vector r(2);
    r << 1.0, 0.0;
    Vector a(2), b(2);
    a << 0.2, 0.0;
    b << 0.7, 0.0;
    const auto set = PolicySet::finite({{a}, {b}}, s);
    CHECK(optimal_index({r}, set, map) == 1);
    CHECK(optimal_value({r}, set, map) == doctest::Approx(0.7));

    const auto tied = PolicySet::finite({{b}, {a}, {b}}, s);
    CHECK(optimal_index({r}, tied, map) == 0);

    Vector big(2);
    big << 2.0, 0.0;
    CHECK_THROWS_AS(PolicySet::finite({{big}}, s), InvalidArgument);
    CHECK_THROWS_AS(PolicySet::finite({}, s), InvalidArgument);
}

TEST_CASE("unit-ball optimum beats random search") {
    const Index d = 3;
    const auto pi = Spectrum::power_law(1.5, d), r = Spectrum::power_law(1.0, d);
    const auto map = LinearMap::dense(random_matrix(d, d, 12), pi, r);
    const auto reward = sample_reward(r, 3);
    const double best = optimal_value(reward, PolicySet::unit_ball(), map);
    Engine engine = make_engine(5, StreamTag::random_queries);
    double search = -1e300;
    for (int k = 0; k < 10000; ++k) search = std::max(search, evaluate(random_unit_policy(pi, engine), reward, map));
    CHECK(search <= best + 1e-12);
    CHECK(search >= best * (1.0 - 1e-2));
}

TEST_CASE("excess risk") {
    const Index d = 4;
    const auto pi = Spectrum::power_law(1.5, d), r = Spectrum::power_law(1.0, d);
    const auto map = LinearMap::identity(pi, r);
    const auto reward = sample_reward(r, 1);
    const auto ball = PolicySet::unit_ball();
    const Policy star = optimal_policy(reward, ball, map);
    CHECK(excess_risk(star, reward, ball, map) == 0.0);
    const Policy flipped{-star.coefficients};
    CHECK(excess_risk(flipped, reward, ball, map) == doctest::Approx(2.0 * evaluate(star, reward, map)));

    Engine engine = make_engine(2, StreamTag::arms);
    std::vector<Policy> cands;
    for (int k = 0; k < 50; ++k) cands.push_back(random_unit_policy(pi, engine));
    const auto set = PolicySet::finite(cands, pi);
    for (const auto& c : cands) CHECK(excess_risk(c, reward, set, map) >= 0.0);
}

TEST_CASE("sampled rewards have unit norm and are centred") {
    const auto r = Spectrum::power_law(1.0, 20);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CHECK(r.norm(sample_reward(r, seed).coefficients) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.norm(sample_reward(r, seed, RewardPrior::ellipsoid).coefficients) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(sample_reward(r, 5).coefficients == sample_reward(r, 5).coefficients);

    Vector mu(1);
    mu << 0.25;
    const auto one = Spectrum::from_eigenvalues(mu);
    CHECK(std::abs(sample_reward(one, 9).coefficients(0)) == doctest::Approx(0.5));

    // Mean of F(pi, r) over the prior is zero.
    const auto pi = Spectrum::power_law(1.5, 20);
    const auto map = LinearMap::identity(pi, r);
    Engine engine = make_engine(1, StreamTag::arms);
    const Policy p = random_unit_policy(pi, engine);
    const int N = 10000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < N; ++k) {
        const double v = evaluate(p, sample_reward(r, 1000 + k), map);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / N;
    const double se = std::sqrt((sq / N - mean * mean) / N);
    CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("evaluation difference is bounded by the adjoint norm") {
    const Index d = 6;
    const auto pi = Spectrum::power_law(1.25, d), r = Spectrum::power_law(1.0, d);
    const auto map = LinearMap::dense(random_matrix(d, d, 77), pi, r);
    const auto reward = sample_reward(r, 4);
    const double adj_norm = pi.norm(map.apply_adjoint(reward.coefficients));
    const double bound = boundedness_value(map);
    Engine engine = make_engine(3, StreamTag::arms);
    for (int k = 0; k < 1000; ++k) {
        const Policy x = random_unit_policy(pi, engine), y = random_unit_policy(pi, engine);
        const double diff = std::abs(evaluate(x, reward, map) - evaluate(y, reward, map));
        CHECK(diff <= adj_norm * pi.norm(x.coefficients - y.coefficients) + 1e-12);
        CHECK(std::abs(evaluate(x, reward, map)) <= bound * r.norm(reward.coefficients) * pi.norm(x.coefficients) + 1e-12);
    }
}

TEST_CASE("coefficient files round-trip") {
    const auto dir = npbandit::testing::scratch_dir("coefficients");
    const auto r = Spectrum::power_law(1.0, 7);
    const auto reward = sample_reward(r, 2);
    write_reward(dir / "r.csv", reward);
    CHECK(read_reward(dir / "r.csv").coefficients == reward.coefficients);
    write_policy(dir / "p.csv", {reward.coefficients});
    CHECK_THROWS(read_reward(dir / "p.csv"));
}

TEST_CASE("reward prior names") {
    CHECK(parse_reward_prior("sphere") == RewardPrior::sphere);
    CHECK(parse_reward_prior("ellipsoid") == RewardPrior::ellipsoid);
    CHECK(to_string(RewardPrior::ellipsoid) == "ellipsoid");
    CHECK_THROWS(parse_reward_prior("cube"));
}
