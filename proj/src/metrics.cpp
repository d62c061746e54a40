#include "edbn/metrics.hpp"

#include "edbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace edbn {
namespace {

// Two-pass: explicit means first, then centered sums.
double pearson_impl(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValueError("pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    if (x.size() < 2) throw ValueError("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericError("pearson: undefined correlation, input vector is constant");
    double rho = sxy / std::sqrt(sxx * syy);
    return std::clamp(rho, -1.0, 1.0);
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    return pearson_impl(x, y);
}

double pearson(std::span<const float> x, std::span<const float> y) {
    std::vector<double> xd(x.begin(), x.end());
    std::vector<double> yd(y.begin(), y.end());
    return pearson_impl(xd, yd);
}

double mse_metric(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValueError("mse_metric: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    if (x.empty()) throw ValueError("mse_metric: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double mse_metric(std::span<const float> x, std::span<const float> y) {
    std::vector<double> xd(x.begin(), x.end());
    std::vector<double> yd(y.begin(), y.end());
    return mse_metric(std::span<const double>(xd), std::span<const double>(yd));
}

double grouped_pearson_mean(std::span<const std::int64_t> keys, std::span<const float> x,
                            std::span<const float> y) {
    if (keys.size() != x.size() || keys.size() != y.size())
        throw ValueError("grouped_pearson_mean: column lengths differ");
    std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto& g = groups[keys[i]];
        g.first.push_back(x[i]);
        g.second.push_back(y[i]);
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& [key, g] : groups) {
        if (g.first.size() < 2) continue;
        sum += pearson_impl(g.first, g.second);
        ++used;
    }
    if (used == 0) throw ValueError("grouped_pearson_mean: no group has 2 or more rows");
    return sum / static_cast<double>(used);
}

} // namespace edbn
