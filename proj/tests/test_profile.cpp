#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thinhomog/profile.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace thinhomog;

TEST_CASE("constant profile") {
    Profile g = Profile::constant(2.0);
    CHECK(g.value(0.3, 17.9) == 2.0);
    CHECK(g.value_eps(0.5, 0.125) == 2.0);
    CHECK(g.x_independent());
    CHECK(g.L == 1.0);
    CHECK(g.G0 == 2.0);
    CHECK(g.G1 == 2.0);

    Profile g2 = Profile::constant(0.7, 3.0);
    CHECK(g2.L == 3.0);
    CHECK(g2.value(0, -5.0) == 0.7);

    CHECK_THROWS_AS(Profile::constant(0.0), ValidationError);
    CHECK_THROWS_AS(Profile::constant(-1.0), ValidationError);
    CHECK_THROWS_AS(Profile::constant(1.0, 0.0), ValidationError);
}

TEST_CASE("expression profile evaluation and periodic wrap") {
    Profile g = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    CHECK(g.value(0.0, 0.25) == doctest::Approx(1.5));
    CHECK(g.value(0.0, 0.75) == doctest::Approx(0.5));
    // Evaluation wraps the fast variable into one period.
    CHECK(g.value(0.0, 5.25) == doctest::Approx(g.value(0.0, 0.25)).epsilon(1e-13));
    CHECK(g.value(0.0, -0.75) == doctest::Approx(g.value(0.0, 0.25)).epsilon(1e-13));
    CHECK(g.x_independent());

    // value_eps composes the oscillation: G(x, x/eps).
    double eps = 0.125;
    CHECK(g.value_eps(0.4, eps) == doctest::Approx(g.value(0.4, 0.4 / eps)).epsilon(1e-13));

    Profile slow = Profile::expression("1+0.2*x+0.1*sin(2*pi*y)", 1.0, 0.8, 1.4, 0.7);
    CHECK(!slow.x_independent());
    CHECK(slow.value(0.5, 0.25) == doctest::Approx(1.2));

    CHECK_THROWS_AS(Profile::expression("1+qq", 1.0, 0.5, 1.5), ParseError);
    CHECK_THROWS_AS(Profile::expression("1", 1.0, 1.5, 0.5), ValidationError); // G0 > G1
    CHECK_THROWS_AS(Profile::expression("1", 1.0, -0.5, 1.5), ValidationError);
}

TEST_CASE("piecewise profile intervals") {
    Profile g = Profile::piecewise({0.0, 0.5, 1.0}, {"1", "2+0*y"}, 1.0, 0.9, 2.1);
    CHECK(g.interval_of(0.0) == 0);
    CHECK(g.interval_of(0.49) == 0);
    CHECK(g.interval_of(0.5) == 1);
    CHECK(g.interval_of(1.0) == 1); // last interval closed
    CHECK(g.value(0.25, 0.7) == 1.0);
    CHECK(g.value(0.75, 0.7) == 2.0);
    CHECK(!g.x_independent());

    CHECK_THROWS_AS(Profile::piecewise({0.0, 1.0}, {"1", "2"}, 1.0, 0.5, 2.5),
                    ValidationError); // count mismatch
    CHECK_THROWS_AS(Profile::piecewise({0.0, 0.7, 0.5, 1.0}, {"1", "2", "3"}, 1.0, 0.5, 3.5),
                    ValidationError); // not increasing
    CHECK_THROWS_AS(Profile::piecewise({0.1, 1.0}, {"1"}, 1.0, 0.5, 1.5),
                    ValidationError); // must start at 0
}

TEST_CASE("canonical form and hashing") {
    Profile a = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    Profile b = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    Profile c = Profile::expression("1+0.25*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    CHECK(a.canonical() != c.canonical());
    CHECK(a.hash() != c.hash());
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("hypothesis validation accepts the standard examples") {
    SUBCASE("flat") {
        HypothesisReport rep = validate_hypothesis(Profile::constant(2.0));
        CHECK(rep.pass);
        CHECK(rep.min_value == doctest::Approx(2.0));
        CHECK(rep.max_value == doctest::Approx(2.0));
        CHECK(rep.periodicity_defect <= 1e-12);
    }
    SUBCASE("sine") {
        Profile g = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
        HypothesisReport rep = validate_hypothesis(g);
        CHECK(rep.pass);
        CHECK(rep.min_value >= 0.4);
        CHECK(rep.max_value <= 1.6);
        CHECK(rep.max_dy <= 3.2 + 1e-6);
        CHECK(rep.max_dy == doctest::Approx(M_PI).epsilon(0.01));
    }
    SUBCASE("slow modulation with breakpoint jump recorded") {
        Profile g = Profile::piecewise({0.0, 0.5, 1.0}, {"1", "1.5"}, 1.0, 0.9, 1.6);
        HypothesisReport rep = validate_hypothesis(g);
        CHECK(rep.pass); // jumps at breakpoints are allowed, only recorded
        REQUIRE(rep.jumps.size() == 1);
        CHECK(rep.jumps[0].x == doctest::Approx(0.5));
        CHECK(rep.jumps[0].max_gap == doctest::Approx(0.5).epsilon(1e-9));
    }
}

TEST_CASE("hypothesis validation rejects violations") {
    SUBCASE("declared bounds too tight") {
        Profile g = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.9, 1.1, 3.2);
        HypothesisReport rep = validate_hypothesis(g);
        CHECK(!rep.pass);
        CHECK(!rep.failures.empty());
    }
    SUBCASE("not periodic in the fast variable") {
        Profile g = Profile::expression("1+0.1*y", 1.0, 0.5, 99.0);
        HypothesisReport rep = validate_hypothesis(g);
        CHECK(!rep.pass);
    }
    SUBCASE("declared derivative bound exceeded") {
        Profile g = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 1.0);
        HypothesisReport rep = validate_hypothesis(g);
        CHECK(!rep.pass);
    }
}

TEST_CASE("piecewise surrogate sandwiches the profile") {
    // 0 <= approx - G <= delta must hold pointwise, by construction.
    Profile g = Profile::expression("1+0.2*x+0.1*sin(2*pi*y)", 1.0, 0.8, 1.4, 0.7);
    for (double delta : {0.2, 0.1, 0.05}) {
        PiecewiseProfile approx = build_piecewise_approx(g, delta);
        CHECK(approx.delta <= delta);
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> ux(0.0, 1.0), uy(0.0, 1.0);
        double max_gap = 0.0;
        for (int k = 0; k < 4000; ++k) {
            double x = ux(rng), y = uy(rng);
            double gap = approx.value(x, y) - g.value(x, y);
            CHECK(gap >= -1e-12);
            CHECK(gap <= delta + 1e-12);
            max_gap = std::max(max_gap, gap);
        }
        CHECK(max_gap > 0.0);
    }
}

TEST_CASE("piecewise surrogate refines as delta shrinks") {
    Profile g = Profile::expression("1+0.2*x+0.1*sin(2*pi*y)", 1.0, 0.8, 1.4, 0.7);
    PiecewiseProfile coarse = build_piecewise_approx(g, 0.2);
    PiecewiseProfile fine = build_piecewise_approx(g, 0.01);
    CHECK(fine.partition.size() >= coarse.partition.size());
    CHECK(fine.delta < coarse.delta + 1e-15);
    // Partition stays a partition of [0, 1].
    CHECK(fine.partition.front() == 0.0);
    CHECK(fine.partition.back() == 1.0);
    for (std::size_t i = 1; i < fine.partition.size(); ++i)
        CHECK(fine.partition[i] > fine.partition[i - 1]);
    // The surrogate converts to a Profile preserving values.
    Profile as_prof = fine.as_profile();
    for (double x : {0.1, 0.31, 0.77})
        for (double y : {0.2, 0.65})
            CHECK(as_prof.value(x, y) == doctest::Approx(fine.value(x, y)).epsilon(1e-13));
}

TEST_CASE("x-independent profile collapses to a single piece") {
    Profile g = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    double delta = 0.05;
    PiecewiseProfile approx = build_piecewise_approx(g, delta);
    CHECK(approx.partition.size() == 2); // no x-variation, nothing to bisect
    // The surrogate sits delta/2 above the slice, so the gap is exactly delta/2.
    for (double y : {0.0, 0.31, 0.8})
        CHECK(approx.value(0.4, y) - g.value(0.4, y) == doctest::Approx(delta / 2).epsilon(1e-12));
}

TEST_CASE("impossible tolerance throws") {
    Profile g = Profile::expression("1+0.2*x+0.1*sin(2*pi*y)", 1.0, 0.8, 1.4, 0.7);
    CHECK_THROWS_AS(build_piecewise_approx(g, 1e-9, 16), ValidationError);
}

TEST_CASE("c1 distance") {
    Profile a = Profile::expression("1+0.5*sin(2*pi*y)", 1.0, 0.4, 1.6, 3.2);
    Profile b = Profile::expression("1+0.4*sin(2*pi*y)", 1.0, 0.5, 1.5, 2.6);
    // sup|a-b| = 0.1, sup|da/dy-db/dy| = 0.1*2pi.
    CHECK(c1_distance(a, b) == doctest::Approx(0.1 + 0.1 * 2 * M_PI).epsilon(1e-3));
    CHECK(c1_distance(a, a) <= 1e-9);

    Profile slow = Profile::expression("1+0.2*x", 1.0, 0.9, 1.3);
    CHECK_THROWS_AS(c1_distance(a, slow), ValidationError);
    Profile other_period = Profile::expression("1+0.5*sin(2*pi*y/2)", 2.0, 0.4, 1.6);
    CHECK_THROWS_AS(c1_distance(a, other_period), ValidationError);
}
