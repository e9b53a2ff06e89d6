#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace seqpred {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving the log domain.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// log of the rising factorial a(a+1)...(a+m-1); equals 0 for m == 0.
inline double log_rising(double a, long m) {
    if (m == 0) return 0.0;
    return std::lgamma(a + static_cast<double>(m)) - std::lgamma(a);
}

// log(n!) for nonnegative integer n.
inline double log_factorial(long n) {
    return std::lgamma(static_cast<double>(n) + 1.0);
}

// Shortest round-trip decimal rendering; used so that emitted reports are
// byte-identical across runs and thread counts.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// 95% normal-approximation confidence interval for a sample mean.
struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

inline MeanCi mean_ci95(std::span<const double> samples) {
    MeanCi out;
    size_t n = samples.size();
    if (n == 0) return out;
    double s = 0.0;
    for (double x : samples) s += x;
    out.mean = s / static_cast<double>(n);
    if (n == 1) {
        out.lo = out.hi = out.mean;
        return out;
    }
    double ss = 0.0;
    for (double x : samples) ss += (x - out.mean) * (x - out.mean);
    double se = std::sqrt(ss / (static_cast<double>(n) * (static_cast<double>(n) - 1.0)));
    out.lo = out.mean - 1.959963984540054 * se;
    out.hi = out.mean + 1.959963984540054 * se;
    return out;
}

}  // namespace seqpred
