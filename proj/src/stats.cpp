#include "expressive/stats.hpp"

#include <algorithm>
#include <cmath>

#include "expressive/error.hpp"

namespace expressive::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw Error(ErrorKind::EmptyInput, "mean of empty sequence");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance_pop(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "pearson: lengths differ");
    if (x.size() < 2) throw Error(ErrorKind::TooShort, "pearson: need at least 2 points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "quantile of empty sequence");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, q);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

}  // namespace expressive::stats
