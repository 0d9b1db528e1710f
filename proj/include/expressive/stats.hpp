#pragma once

#include <optional>
#include <span>
#include <vector>

namespace expressive::stats {

double mean(std::span<const double> x);

/// Population variance (divides by n).
double variance_pop(std::span<const double> x);

/// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> x);

/// Linear-interpolation quantile on sorted data at position q * (n - 1).
double quantile_sorted(std::span<const double> sorted, double q);

double quantile(std::vector<double> x, double q);

}  // namespace expressive::stats
