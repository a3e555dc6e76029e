#include "eps/stats.hpp"

#include "eps/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eps {

double percentile_sorted(std::span<const double> sorted, double p, PercentileMethod method)
{
    if (sorted.empty())
        throw Error(ErrorKind::InvalidInput, "percentile of empty set");
    if (!(p >= 0.0 && p <= 100.0))
        throw Error(ErrorKind::InvalidInput, "percentile must be in [0, 100]");
    const std::size_t n = sorted.size();
    if (method == PercentileMethod::NearestRank) {
        const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
        return sorted[rank == 0 ? 0 : rank - 1];
    }
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::span<const double> values, double p, PercentileMethod method)
{
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p, method);
}

double median(std::span<const double> values)
{
    return percentile(values, 50.0);
}

double mean(std::span<const double> values)
{
    if (values.empty())
        throw Error(ErrorKind::InvalidInput, "mean of empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace eps
