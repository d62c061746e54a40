#include "edbn/metrics.hpp"
#include "edbn/error.hpp"
#include "edbn/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

TEST_CASE("pearson perfect correlation and anticorrelation") {
    std::vector<double> x{1, 2, 3, 5};
    CHECK(edbn::pearson(x, x) == 1.0);
    std::vector<double> neg{-1, -2, -3, -5};
    CHECK(edbn::pearson(x, neg) == -1.0);
}

TEST_CASE("pearson hand case: 0.8 within 1e-12") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<double> y{1, 3, 2, 4};
    CHECK(std::abs(edbn::pearson(x, y) - 0.8) < 1e-12);
}

TEST_CASE("pearson degenerate and misuse errors") {
    std::vector<double> x{1, 2, 3};
    std::vector<double> constant{7, 7, 7};
    CHECK_THROWS_WITH_AS(edbn::pearson(x, constant), doctest::Contains("undefined correlation"),
                         edbn::NumericError);
    CHECK_THROWS_AS(edbn::pearson(constant, x), edbn::NumericError);

    std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(edbn::pearson(x, shorter), edbn::ValueError);
    std::vector<double> one{1};
    CHECK_THROWS_AS(edbn::pearson(one, one), edbn::ValueError);
}

TEST_CASE("pearson shift/scale invariance on 100 random cases") {
    edbn::Rng rng(1001);
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 3 + rng.below(40);
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = rng.uniform(-10, 10);
        for (auto& v : y) v = rng.uniform(-10, 10);
        double base = edbn::pearson(x, y);

        double a = 0.0;
        while (std::abs(a) < 1e-3) a = rng.uniform(-5, 5);
        double b = rng.uniform(-100, 100);
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = a * x[i] + b;
        double got = edbn::pearson(scaled, y);
        double want = (a > 0 ? base : -base);
        CHECK(std::abs(got - want) < 1e-10);
    }
}

TEST_CASE("pearson is symmetric, bounded, and matches the two-pass oracle") {
    edbn::Rng rng(2002);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t n = 2 + rng.below(60);
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = rng.uniform(-3, 3);
        for (auto& v : y) v = rng.uniform(-3, 3);
        if (n == 2 && (x[0] == x[1] || y[0] == y[1])) continue;
        double xy = edbn::pearson(x, y);
        CHECK(edbn::pearson(y, x) == xy);
        CHECK(std::abs(xy) <= 1.0);
        CHECK(std::abs(xy - oracles::two_pass_pearson(x, y)) < 1e-12);
    }
}

TEST_CASE("mse_metric values and homogeneity") {
    std::vector<double> x{1, 2, 3};
    CHECK(edbn::mse_metric(x, x) == 0.0);

    std::vector<double> zeros{0, 0};
    std::vector<double> y{1, 3};
    CHECK(edbn::mse_metric(zeros, y) == 5.0);

    edbn::Rng rng(3);
    std::vector<double> a(9), b(9);
    for (auto& v : a) v = rng.uniform(-2, 2);
    for (auto& v : b) v = rng.uniform(-2, 2);
    double base = edbn::mse_metric(a, b);
    const double c = 3.5;
    std::vector<double> ac(9), bc(9);
    for (std::size_t i = 0; i < 9; ++i) {
        ac[i] = c * a[i];
        bc[i] = c * b[i];
    }
    CHECK(edbn::mse_metric(ac, bc) == doctest::Approx(c * c * base).epsilon(1e-12));

    std::vector<double> shorter{1};
    CHECK_THROWS_AS(edbn::mse_metric(x, shorter), edbn::ValueError);
}

TEST_CASE("grouped pearson mean over time buckets") {
    // two groups, known per-group coefficients 1 and -1
    std::vector<std::int64_t> keys{0, 0, 0, 1, 1, 1, 2};
    std::vector<float> x{1, 2, 3, 1, 2, 3, 9};
    std::vector<float> y{2, 4, 6, 3, 2, 1, 9}; // group 2 has a single row: skipped
    double m = edbn::grouped_pearson_mean(keys, x, y);
    CHECK(m == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<std::int64_t> single{0, 1};
    std::vector<float> a{1, 2}, b{3, 4};
    CHECK_THROWS_AS(edbn::grouped_pearson_mean(single, a, b), edbn::ValueError);
}
