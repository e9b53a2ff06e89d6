#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace seqpred {

// splitmix64 finalizer; used both as a stand-alone mixer and to derive
// independent streams from (master seed, indices) so that results do not
// depend on scheduling or thread count.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = mix64(master ^ 0x6a09e667f3bcc909ULL);
    s = mix64(s ^ mix64(a));
    s = mix64(s ^ mix64(b));
    s = mix64(s ^ mix64(c));
    return s;
}

class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(mix64(seed)) {}

    // Uniform double in [0, 1) with 53 random bits; avoids the
    // implementation-defined std::uniform_real_distribution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    uint64_t bits() { return eng_(); }

    // Index sampled from an (unnormalized is fine) nonnegative weight vector
    // by inverse CDF; deterministic across platforms, unlike
    // std::discrete_distribution.
    int discrete(std::span<const double> w) {
        double total = 0.0;
        for (double x : w) total += x;
        double u = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i + 1 < w.size(); ++i) {
            acc += w[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(w.size()) - 1;
    }

    // Dirichlet(1,...,1) row via normalized exponentials.
    std::vector<double> simplex(int n) {
        std::vector<double> v(n);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double u = uniform();
            if (u <= 0.0) u = 0x1.0p-53;
            v[i] = -std::log(u);
            s += v[i];
        }
        for (double& x : v) x /= s;
        return v;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace seqpred
