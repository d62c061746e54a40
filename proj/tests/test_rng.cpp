#include "edbn/rng.hpp"

#include <doctest.h>

#include <cmath>

TEST_CASE("seeded_uniform degenerate interval") {
    edbn::Rng rng(3);
    edbn::MatF m = edbn::seeded_uniform<float>(rng, 2.5, 2.5, 4, 3);
    for (float v : m.data) CHECK(v == 2.5f);
}

TEST_CASE("seeded_uniform determinism: same seed, same bits") {
    edbn::Rng a(1234), b(1234);
    edbn::MatF ma = edbn::seeded_uniform<float>(a, -1, 1, 8, 8);
    edbn::MatF mb = edbn::seeded_uniform<float>(b, -1, 1, 8, 8);
    CHECK(ma == mb);

    edbn::Rng c(1235);
    edbn::MatF mc = edbn::seeded_uniform<float>(c, -1, 1, 8, 8);
    CHECK_FALSE(ma == mc);
}

TEST_CASE("seeded_uniform sample mean, 1e5 draws on [0,1)") {
    edbn::Rng rng(99);
    edbn::MatF m = edbn::seeded_uniform<float>(rng, 0, 1, 100000, 1);
    double sum = 0;
    for (float v : m.data) {
        CHECK(v >= 0.0f);
        CHECK(v < 1.0f);
        sum += v;
    }
    CHECK(std::abs(sum / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("seeded_uniform rejects lo > hi") {
    edbn::Rng rng(0);
    CHECK_THROWS_AS(edbn::seeded_uniform<float>(rng, 1.0, 0.0, 2, 2), edbn::ValueError);
}

TEST_CASE("splitmix64 known sequence") {
    // Reference values for seed 1234567 from the published SplitMix64
    // algorithm; pins the generator across platforms.
    edbn::Rng rng(1234567);
    CHECK(rng.next_u64() == 6457827717110365317ULL);
    CHECK(rng.next_u64() == 3203168211198807973ULL);
}

TEST_CASE("derived streams are independent of draw position") {
    edbn::Rng a(77);
    edbn::Rng b(77);
    (void)b.next_u64(); // advancing the parent must not shift derived streams
    CHECK(a.derive(5).next_u64() == b.derive(5).next_u64());
    CHECK(a.derive(5).next_u64() != a.derive(6).next_u64());
}

TEST_CASE("normal draws have roughly standard moments") {
    edbn::Rng rng(5);
    double sum = 0, sq = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.03);
}
