#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seqpred/errors.hpp"

namespace seqpred {

// Symbols and hidden states are 0-based ints throughout.
using SymbolSequence = std::vector<int>;
using StatePath = std::vector<int>;

// Distribution over the next symbol; probs sums to 1 within 1e-10.
struct PredictiveDist {
    std::vector<double> probs;

    int alphabet() const { return static_cast<int>(probs.size()); }
    double operator[](int j) const { return probs[j]; }
};

// Validates that probs is a distribution (entries >= -1e-12, sum within tol of
// 1), clamps negatives, and renormalizes exactly.
PredictiveDist make_predictive(std::vector<double> probs, double tol = 1e-9);

struct HmmParams {
    int k = 0;                  // number of hidden states
    int l = 0;                  // alphabet size
    std::vector<double> trans;  // k x k, row-major, rows on the simplex
    std::vector<double> emit;   // k x l, row-major, rows on the simplex
    std::vector<double> stat;   // stationary distribution of trans
    bool non_unique_stationary = false;

    double t(int i, int j) const { return trans[static_cast<size_t>(i) * k + j]; }
    double e(int z, int x) const { return emit[static_cast<size_t>(z) * l + x]; }
};

// Validates rows (sum within 1e-9 of 1, entries in [0,1] up to 1e-12 slop),
// renormalizes exactly, and solves for the stationary distribution by a dense
// direct solve of (trans^T - I) pi = 0 augmented with the sum-to-one row.  If
// that system is singular (equivalently: the stationary law is not unique),
// solves the uniform-restart perturbation (1-eps) trans + eps/k at eps = 1e-8
// instead and sets non_unique_stationary.
HmmParams make_hmm(int k, int l, std::vector<double> trans, std::vector<double> emit);

// Samples Z_1 ~ stat, Z_{t+1} ~ trans(Z_t, .), X_t ~ emit(Z_t, .).
std::pair<SymbolSequence, StatePath> sample_hmm_path(const HmmParams& p, int n, uint64_t seed);

// P(X_{n+1} = . | X^n = x) via the forward recursion in log domain.
// Throws ImpossibleSequenceError when P(x) = 0.
PredictiveDist hmm_oracle_predictive(const HmmParams& p, std::span<const int> x);

// log P(X^m = x); -inf for impossible sequences.
double hmm_exact_sequence_prob(const HmmParams& p, std::span<const int> x);

// Stationary renewal process on {0,1}: 1s occur at renewal times whose gaps
// are i.i.d. from a finitely supported interarrival law mu on {1,...,S}.
struct RenewalLaw {
    std::vector<double> mu;        // mu[i] = P(gap = i+1), sums to 1
    std::vector<double> stat_wait; // stat_wait[i] = P(first 1 at time i+1) under stationarity
    double mean = 0.0;             // E[gap]

    int support() const { return static_cast<int>(mu.size()); }
    double gap_prob(int g) const {  // g >= 1
        return (g >= 1 && g <= support()) ? mu[g - 1] : 0.0;
    }
};

// Validates (sum within 1e-9 of 1, entries nonnegative), renormalizes exactly,
// and precomputes the mean and the stationary waiting-time law
// stat_wait(i) = (sum_{j >= i} mu(j)) / mean.
RenewalLaw make_renewal(std::vector<double> mu);

// First 1 placed at T0 ~ stat_wait, later 1s at i.i.d. mu gaps.
SymbolSequence sample_renewal_path(const RenewalLaw& law, int n, uint64_t seed);

// Hazard form of P(X_{n+1} = . | x): with tau = steps since the last 1,
// P(1) = mu(tau+1) / sum_{t > tau} mu(t); if no 1 has occurred yet the same
// ratio is taken under the stationary waiting-time law.  Throws
// HazardUndefinedError when the denominator is 0 and ImpossibleSequenceError
// when x itself has probability 0.
PredictiveDist renewal_hazard_predictive(const RenewalLaw& law, std::span<const int> x);

// Equivalent countdown HMM: state i (0-based) means "next 1 in i steps";
// state 0 emits 1 and restarts with a mu-distributed countdown, state i > 0
// decrements deterministically.  Its stationary law equals stat_wait.
HmmParams renewal_as_hmm(const RenewalLaw& law);

}  // namespace seqpred
