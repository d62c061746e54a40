#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace edbn {

struct MetricReport {
    double pearson = 0.0;
    double mse = 0.0;
    std::size_t n = 0;
};

// Correlation coefficient: centered covariance over the product of standard
// deviations. Always computed in 64-bit and clamped to [-1, 1] against
// rounding. Throws NumericError when either vector is constant, ValueError
// for length mismatch or fewer than 2 points.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(std::span<const float> x, std::span<const float> y);

// Mean squared difference, 64-bit accumulation.
double mse_metric(std::span<const double> x, std::span<const double> y);
double mse_metric(std::span<const float> x, std::span<const float> y);

// Mean of per-group pearson coefficients, groups given by key (typically
// time_id). Groups with fewer than 2 rows are skipped; a constant vector
// inside an evaluated group raises the usual NumericError.
double grouped_pearson_mean(std::span<const std::int64_t> keys, std::span<const float> x,
                            std::span<const float> y);

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(std::span<const double>(x), std::span<const double>(y));
}
inline double mse_metric(const std::vector<double>& x, const std::vector<double>& y) {
    return mse_metric(std::span<const double>(x), std::span<const double>(y));
}

} // namespace edbn
