#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqpred/assignments.hpp"
#include "seqpred/models.hpp"
#include "seqpred/predictor.hpp"

namespace seqpred {

constexpr double kDefaultExactCap = 1e7;  // table cells (k * l^m)

// Exhaustive law of X^m (optionally jointly with Z_1) as a table of log
// probabilities.  Sequences are indexed big-endian: x_1 is the most
// significant base-l digit, so prefixes occupy contiguous blocks.
struct ExactLaw {
    int l = 0;
    int m = 0;
    int k = 1;            // z-dimension; 1 when with_z1 is false
    bool with_z1 = false;
    std::vector<double> logp;  // size k * l^m, entry [z * l^m + seq]

    size_t seq_count() const { return logp.size() / static_cast<size_t>(k); }
    double at(int z, size_t seq) const { return logp[static_cast<size_t>(z) * seq_count() + seq]; }

    // Decodes a sequence index into symbols.
    std::vector<int> decode(size_t seq) const;
};

ExactLaw exact_law(const HmmParams& p, int m, bool with_z1, double cap = kDefaultExactCap);

// Entropy of a log-probability table, in nats.
double table_entropy(std::span<const double> logp);

// KL(p || q) for aligned log-probability tables; throws SupportViolationError
// when p puts mass where q has none.
double kl_divergence(std::span<const double> logp, std::span<const double> logq);

// Marginalizes out the most significant (earliest) symbol: table over
// sequences of length len -> length len-1.
std::vector<double> drop_first_symbol(std::span<const double> logp, int l);
// Marginalizes out the least significant (latest) symbol.
std::vector<double> drop_last_symbol(std::span<const double> logp, int l);

// Conditional mutual information between the next symbol and the distant past
// given the most recent t symbols, for t = 1..n, all from the exhaustive law
// of X^{n+1}.
struct MemoryDecomposition {
    std::vector<double> per_lag;  // per_lag[t-1] = I(X_{n+1}; X^{n-t} | last t symbols)
    double sum = 0.0;
};

MemoryDecomposition memory_term(const HmmParams& p, int n, double cap = kDefaultExactCap);

// I(Z_1; X^m) computed exhaustively.
double latent_info(const HmmParams& p, int m, double cap = kDefaultExactCap);

// E_P[log P(X^m) - log Q(X^m)], exhaustively.
double expected_redundancy_exact(const HmmParams& p, const Assignment& q, int m,
                                 double cap = kDefaultExactCap);

struct ValueCi {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    long trials = 0;
};

// Monte Carlo estimate of the same expectation with a 95% normal CI.
ValueCi expected_redundancy_mc(const HmmParams& p, const Assignment& q, int m, long trials,
                               uint64_t seed);

// log of the true joint path probability minus the add-one joint assignment,
// for one (x, z) pair; -inf when the pair is impossible under p.
double pointwise_joint_redundancy(const HmmParams& p, std::span<const int> x,
                                  std::span<const int> z);

// E_{X^n}[ KL( P(. | X^n) || predictor(X^n) ) ], exhaustively over all
// positive-probability length-n sequences.
double exact_prediction_risk(const HmmParams& p, const Predictor& predict, int n,
                             double cap = kDefaultExactCap);

// log sum over sequences of the maximized likelihood, for three model
// classes.  All values in nats.
double shtarkov_sum_iid(int l, int m);
double shtarkov_sum_markov1(int l, int m, double cap = kDefaultExactCap);
double shtarkov_sum_renewal(int support_bound, int m, double cap = kDefaultExactCap);

}  // namespace seqpred
