#pragma once

#include <span>
#include <vector>

namespace eps {

enum class PercentileMethod {
    // rank = (p/100)(n-1), linear between neighbouring order statistics
    Linear,
    // smallest value with at least p% of the data at or below it
    NearestRank,
};

// p in [0, 100]. Throws InvalidInput on empty input or out-of-range p.
double percentile(std::span<const double> values, double p, PercentileMethod method = PercentileMethod::Linear);
double percentile_sorted(std::span<const double> sorted, double p, PercentileMethod method = PercentileMethod::Linear);
double median(std::span<const double> values);
double mean(std::span<const double> values);

}  // namespace eps
