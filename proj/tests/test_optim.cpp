#include "edbn/optim.hpp"
#include "edbn/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

using edbn::AdamState;
using edbn::WarmupSchedule;

namespace {

template <class T>
void step_scalar(std::vector<T>& p, const std::vector<T>& g, AdamState<T>& s, double lr) {
    std::vector<std::span<T>> pv{std::span<T>(p)};
    std::vector<std::span<const T>> gv{std::span<const T>(g)};
    edbn::adam_step(pv, gv, s, lr);
}

} // namespace

TEST_CASE("warmup_lr ramp and plateau") {
    WarmupSchedule s; // 0.001 over 1000 steps
    CHECK(edbn::warmup_lr(1, s) == 1e-6);
    CHECK(edbn::warmup_lr(1000, s) == 0.001);
    CHECK(edbn::warmup_lr(1001, s) == 0.001);
    CHECK(edbn::warmup_lr(50000, s) == 0.001);

    WarmupSchedule w100{0.001, 100};
    CHECK(edbn::warmup_lr(50, w100) == 0.0005);
}

TEST_CASE("warmup_lr is nondecreasing and constant after W") {
    WarmupSchedule s{0.02, 37};
    double prev = -1.0;
    for (std::size_t t = 1; t <= 200; ++t) {
        double lr = edbn::warmup_lr(t, s);
        CHECK(lr >= prev);
        if (t >= 37) CHECK(lr == 0.02);
        prev = lr;
    }
}

TEST_CASE("adam: zero gradient from zero state leaves parameters unchanged") {
    std::vector<double> p{1.0, -2.0, 3.5};
    std::vector<double> g{0.0, 0.0, 0.0};
    auto s = AdamState<double>::from_shapes({std::span<double>(p)});
    step_scalar(p, g, s, 0.001);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.5});
    CHECK(s.t == 1);
}

TEST_CASE("adam first step moves by ~lr regardless of gradient scale") {
    // bias correction makes m_hat/sqrt(v_hat) = sign(g) up to eps on step 1
    std::vector<double> p{1.0};
    std::vector<double> g{0.5};
    auto s = AdamState<double>::from_shapes({std::span<double>(p)});
    step_scalar(p, g, s, 0.001);
    CHECK(p[0] == doctest::Approx(0.999).epsilon(1e-6));

    std::vector<double> p2{1.0};
    std::vector<double> g2{5.0};
    auto s2 = AdamState<double>::from_shapes({std::span<double>(p2)});
    step_scalar(p2, g2, s2, 0.001);
    CHECK(std::abs(p[0] - p2[0]) < 1e-6);
}

TEST_CASE("adam with lr 0 updates moments but not parameters") {
    std::vector<double> p{2.0};
    std::vector<double> g{0.7};
    auto s = AdamState<double>::from_shapes({std::span<double>(p)});
    step_scalar(p, g, s, 0.0);
    CHECK(p[0] == 2.0);
    CHECK(s.m[0][0] == doctest::Approx(0.07).epsilon(1e-12));
    CHECK(s.v[0][0] == doctest::Approx(0.001 * 0.49).epsilon(1e-9));
    CHECK(s.t == 1);
}

TEST_CASE("adam keeps second moments nonnegative and parameters finite") {
    edbn::Rng rng(31);
    std::vector<float> p(64);
    for (auto& v : p) v = static_cast<float>(rng.uniform(-1, 1));
    auto s = AdamState<float>::from_shapes({std::span<float>(p)});
    for (int step = 0; step < 200; ++step) {
        std::vector<float> g(64);
        for (auto& v : g) v = static_cast<float>(rng.uniform(-100, 100));
        step_scalar(p, g, s, 0.01);
        for (float v : s.v[0]) CHECK(v >= 0.0f);
        for (float v : p) CHECK(std::isfinite(v));
    }
    CHECK(s.t == 200);
}

TEST_CASE("adam rejects mismatched shapes") {
    std::vector<double> p{1.0, 2.0};
    std::vector<double> g{1.0};
    auto s = AdamState<double>::from_shapes({std::span<double>(p)});
    std::vector<std::span<double>> pv{std::span<double>(p)};
    std::vector<std::span<const double>> gv{std::span<const double>(g)};
    CHECK_THROWS_AS(edbn::adam_step(pv, gv, s, 0.001), edbn::ValueError);
}
