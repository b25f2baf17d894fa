#include "nl2l/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nl2l/errors.hpp"
#include "nl2l/rng.hpp"

namespace nl2l {

double mean(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sem(const std::vector<double>& x) {
    const auto n = x.size();
    if (n < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw ContractViolation("quantile: empty sample");
    std::sort(x.begin(), x.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(x.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= x.size()) return x.back();
    return x[i] + frac * (x[i + 1] - x[i]);
}

Interval bootstrap_ci(int n, const std::function<double(const std::vector<int>&)>& statistic, int resamples,
                      double level, std::uint64_t seed) {
    if (n < 1) throw ContractViolation("bootstrap_ci: empty sample");
    if (resamples < 1) throw ContractViolation("bootstrap_ci: resamples must be positive");
    Rng rng(seed);
    std::vector<int> idx(n);
    std::vector<double> stats(resamples);
    for (int b = 0; b < resamples; ++b) {
        for (int i = 0; i < n; ++i) idx[i] = uniform_index(rng, n);
        stats[b] = statistic(idx);
    }
    const double tail = 0.5 * (1.0 - level);
    return {quantile(stats, tail), quantile(stats, 1.0 - tail)};
}

Interval bootstrap_mean_ci(const std::vector<double>& x, int resamples, double level, std::uint64_t seed) {
    return bootstrap_ci(
        static_cast<int>(x.size()),
        [&](const std::vector<int>& idx) {
            double s = 0.0;
            for (int i : idx) s += x[i];
            return s / static_cast<double>(idx.size());
        },
        resamples, level, seed);
}

} // namespace nl2l
