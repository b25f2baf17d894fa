#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace nl2l {

double mean(const std::vector<double>& x);
/// Standard error of the mean; 0 for fewer than two samples.
double sem(const std::vector<double>& x);
/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> x, double q);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Percentile bootstrap interval of `statistic` over resampled row indices.
/// The statistic receives the resampled indices into the caller's data.
Interval bootstrap_ci(int n, const std::function<double(const std::vector<int>&)>& statistic, int resamples,
                      double level, std::uint64_t seed);

/// Bootstrap interval of the sample mean.
Interval bootstrap_mean_ci(const std::vector<double>& x, int resamples, double level, std::uint64_t seed);

} // namespace nl2l
