#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace infotrade::stats {

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
    size_t n = 0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        double d = x - out.mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

// z-style separation between two estimates; guards the zero-variance case.
inline double separation(const MeanStderr& a, const MeanStderr& b) {
    double combined = std::sqrt(a.se * a.se + b.se * b.se);
    double diff = a.mean - b.mean;
    if (combined == 0.0) {
        return diff == 0.0 ? 0.0 : (diff > 0 ? 1e18 : -1e18);
    }
    return diff / combined;
}

inline bool exceeds_by_3se(const MeanStderr& a, const MeanStderr& b) {
    return separation(a, b) > 3.0;
}

inline bool within_3se(const MeanStderr& a, double reference) {
    if (a.se == 0.0) return a.mean == reference;
    return std::abs(a.mean - reference) <= 3.0 * a.se;
}

inline bool within_3se(const MeanStderr& a, const MeanStderr& b) {
    double combined = std::sqrt(a.se * a.se + b.se * b.se);
    if (combined == 0.0) return a.mean == b.mean;
    return std::abs(a.mean - b.mean) <= 3.0 * combined;
}

// Two-sample Kolmogorov-Smirnov statistic; ties advance both samples.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0;
    size_t j = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        double fa = static_cast<double>(i) / static_cast<double>(a.size());
        double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// Rejects equality of distributions at level alpha; the critical value is
// c(alpha) * sqrt((n+m)/(n m)) with c(alpha) = sqrt(-ln(alpha/2)/2).
inline bool ks_same_distribution(const std::vector<double>& a, const std::vector<double>& b,
                                 double alpha = 0.001) {
    double d = ks_statistic(a, b);
    double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    double nm = static_cast<double>(a.size()) * static_cast<double>(b.size());
    double crit = c * std::sqrt((static_cast<double>(a.size() + b.size())) / nm);
    return d < crit;
}

// Chi-squared statistic against the uniform distribution over the buckets.
inline double chi_squared_uniform(std::span<const size_t> counts) {
    size_t total = 0;
    for (size_t c : counts) total += c;
    double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (size_t c : counts) {
        double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

// Critical value of chi-squared with 15 degrees of freedom at p = 0.001;
// the share-uniformity check uses 16 buckets.
constexpr double kChi2Crit15Df001 = 37.697;

}  // namespace infotrade::stats
