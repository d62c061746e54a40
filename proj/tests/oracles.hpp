// Test-only reference implementations, kept independent of the library
// code paths they check.
#pragma once

#include "edbn/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// Naive triple loop, scalar accumulator, inner index ascending.
template <class T>
edbn::Mat<T> naive_matmul(const edbn::Mat<T>& a, const edbn::Mat<T>& b) {
    edbn::Mat<T> out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            T acc = T(0);
            for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

// Center first, then cosine of the centered vectors (separate square roots).
inline double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    std::vector<double> cx(x.size()), cy(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = x[i] - mx;
    for (std::size_t i = 0; i < y.size(); ++i) cy[i] = y[i] - my;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += cx[i] * cy[i];
        dx += cx[i] * cx[i];
        dy += cy[i] * cy[i];
    }
    return num / (std::sqrt(dx) * std::sqrt(dy));
}

// Central finite difference of a scalar-valued function with respect to one
// in-place perturbed parameter.
template <class F>
double central_diff(F&& f, double& param, double h = 1e-5) {
    const double orig = param;
    param = orig + h;
    const double fp = f();
    param = orig - h;
    const double fm = f();
    param = orig;
    return (fp - fm) / (2.0 * h);
}

// Gradcheck comparison: relative error with an absolute floor so exactly-zero
// gradients compare cleanly.
inline double grad_rel_err(double analytic, double numeric) {
    const double denom = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
    return std::abs(analytic - numeric) / denom;
}

} // namespace oracles
