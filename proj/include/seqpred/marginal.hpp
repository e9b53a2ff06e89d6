#pragma once

#include <array>
#include <cstdint>
#include <gmpxx.h>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "seqpred/assignments.hpp"

namespace seqpred {

// Packed encoding of a CountStats (digits in a fixed cell order, base chosen
// larger than any entry).  The remaining prefix length (= sum of emission
// counts) and the forced terminal state (read off the row-sum discrepancy)
// are implied by the counts, so only the two matrices are encoded.  Injective
// on the reachable set by construction; decodes back to the exact matrices.
struct CountKey {
    std::array<uint64_t, 4> w{};
    bool operator==(const CountKey&) const = default;
};

struct CountKeyHash {
    size_t operator()(const CountKey& key) const;
};

CountKey pack_counts(const CountStats& s, long base);
CountStats unpack_counts(const CountKey& key, int k, int l, long base);

// Upper bound on the number of distinct (M, T) pairs reachable from paths
// over prefixes of x; used to refuse hopeless inputs before allocating.
double feasibility_estimate(int k, int l, std::span<const int> x);

constexpr double kDefaultBudget = 1e8;  // memo entries
constexpr double kDefaultBruteCap = 1e7;  // enumerated paths / table cells

// Number of state paths z consistent with both the count matrices and the
// observed symbols, counted exactly.  Counts inconsistent with any path
// (wrong totals, bad row-sum discrepancy, mismatched symbols) yield 0.
// A counter instance is bound to one observed sequence and may be reused
// across many (M, T) queries against that sequence; queries share one memo
// (single-threaded use).
class TrajectoryCounter {
  public:
    TrajectoryCounter(std::span<const int> x, int k, int l, double budget = kDefaultBudget);
    mpz_class count(const CountStats& s);

  private:
    mpz_class rec(CountStats& s, long bigk);

    std::vector<int> x_;
    int k_;
    int l_;
    long base_;
    double budget_;
    std::unordered_map<CountKey, mpz_class, CountKeyHash> memo_;
};

mpz_class count_trajectories(const CountStats& s, std::span<const int> x,
                             double budget = kDefaultBudget);

// Forward dynamic program over (current state, running CountStats) computing
// marginal probabilities of the joint add-one assignment without enumerating
// state paths.  Masses are kept linearly with a running log scale.
class MarginalDp {
  public:
    MarginalDp(int k, int l, double budget = kDefaultBudget);
    virtual ~MarginalDp() = default;

    virtual void reset();
    virtual void extend(int symbol);              // consume one more symbol
    virtual double log_prob() const;              // log Q(prefix consumed so far)
    virtual std::vector<double> extension_log_probs() const;  // log Q(prefix + j) per j

    int alphabet() const { return l_; }

  protected:
    int k_;
    int l_;
    double budget_;

  private:
    struct Node {
        int state;
        CountStats counts;
        double mass;
    };

    int t_ = 0;  // symbols consumed
    std::vector<Node> nodes_;
    double log_scale_ = 0.0;
    double log_prob_ = 0.0;
    size_t states_seen_ = 0;
};

// log Q(x) of the joint add-one assignment with the hidden path summed out.
double marginal_assignment_logprob(std::span<const int> x, int k, int l,
                                   double budget = kDefaultBudget);

// Same value by brute-force enumeration of all k^K state paths (oracle
// route); refuses k^K beyond `cap`.
double brute_marginal_logprob(std::span<const int> x, int k, int l,
                              double cap = kDefaultBruteCap);

// One-step conditional Q(. | prefix) of the marginal assignment; the empty
// prefix gives the uniform distribution.
PredictiveDist marginal_conditional(std::span<const int> prefix, int k, int l,
                                    double budget = kDefaultBudget);

// The marginal assignment as a sequential probability assignment.
class MarginalAssignment : public Assignment {
  public:
    MarginalAssignment(int k, int l, double budget = kDefaultBudget)
        : k_(k), l_(l), budget_(budget) {}
    int alphabet() const override { return l_; }
    PredictiveDist conditional(std::span<const int> prefix) const override {
        return marginal_conditional(prefix, k_, l_, budget_);
    }
    double joint_log_prob(std::span<const int> x) const override {
        return marginal_assignment_logprob(x, k_, l_, budget_);
    }

  private:
    int k_;
    int l_;
    double budget_;
};

// Dense-array specialization of MarginalDp for k = l = 2, used on hot paths.
// The running counts collapse to (first state, visits to state 0, M00, T00)
// given the observed symbol histogram, so the frontier lives in a small dense
// array instead of a hash map.
class MarginalDp22 final : public MarginalDp {
  public:
    explicit MarginalDp22(double budget = kDefaultBudget);

    void reset() override;
    void extend(int symbol) override;
    double log_prob() const override;
    std::vector<double> extension_log_probs() const override;

  private:
    // mass_ is indexed by (((z*2 + z1)*(t+1) + n0)*t + m00)*(t+1) + t00 at
    // prefix length t.
    size_t idx(int z, int z1, int n0, int m00, int t00) const;

    int t_ = 0;   // symbols consumed
    int c0_ = 0;  // count of symbol 0 in the prefix
    std::vector<double> mass_;
    double log_scale_ = 0.0;
    double log_prob_ = 0.0;
};

// Picks the dense specialization when it applies.
std::unique_ptr<MarginalDp> make_marginal_dp(int k, int l, double budget = kDefaultBudget);

}  // namespace seqpred
