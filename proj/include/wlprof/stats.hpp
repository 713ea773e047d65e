#pragma once

#include <span>
#include <vector>

namespace wlprof {

// Linear interpolation between closest ranks: h = (n - 1) * q,
// result = x[floor h] + (h - floor h) * (x[floor h + 1] - x[floor h]).
// `sorted` must be ascending and nonempty; q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);
// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace wlprof
