#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "seqpred/models.hpp"

namespace seqpred {

// Transition/emission count matrices of a joint path (z, x) of length K.
struct CountStats {
    int k = 0;
    int l = 0;
    std::vector<long> trans_counts;  // k x k, trans_counts[i*k+j] = #{t: z_t=i, z_{t+1}=j}
    std::vector<long> emit_counts;   // k x l, emit_counts[z*l+x] = #{t: z_t=z, x_t=x}

    CountStats() = default;
    CountStats(int k_, int l_)
        : k(k_), l(l_), trans_counts(static_cast<size_t>(k_) * k_, 0),
          emit_counts(static_cast<size_t>(k_) * l_, 0) {}

    static CountStats from_path(std::span<const int> x, std::span<const int> z, int k, int l);

    long& m(int i, int j) { return trans_counts[static_cast<size_t>(i) * k + j]; }
    long m(int i, int j) const { return trans_counts[static_cast<size_t>(i) * k + j]; }
    long& t(int z, int x) { return emit_counts[static_cast<size_t>(z) * l + x]; }
    long t(int z, int x) const { return emit_counts[static_cast<size_t>(z) * l + x]; }

    long total_emissions() const;   // K
    long total_transitions() const; // K - 1 for a real path
    long m_row(int i) const;
    long t_row(int z) const;
    bool operator==(const CountStats&) const = default;
};

// A sequential probability assignment: a measure on symbol sequences exposed
// through its one-step conditionals.
struct Assignment {
    virtual ~Assignment() = default;
    virtual int alphabet() const = 0;
    virtual PredictiveDist conditional(std::span<const int> prefix) const = 0;
    // log Q(x) = sum_t log Q(x_t | x^{t-1}); overridden when a cheaper route exists.
    virtual double joint_log_prob(std::span<const int> x) const;
};

// Laplace rule on raw symbol counts: P(j) = (1 + c_j) / (l + sum c).
PredictiveDist addone_conditional(std::span<const long> counts);

// Injective packing of a context string over alphabet l (leading-1 base-l
// integer); strings of different lengths never collide.
inline uint64_t pack_context(std::span<const int> ctx, int l) {
    uint64_t v = 1;
    for (int s : ctx) v = v * static_cast<uint64_t>(l) + static_cast<uint64_t>(s);
    return v;
}

// Same smoothing read off a per-context count vector of an order-d model.
inline PredictiveDist addone_markov_conditional(std::span<const long> context_counts) {
    return addone_conditional(context_counts);
}

// Order-d add-one Markov assignment over alphabet l.  Contexts shorter than d
// occur during warm-up (position t conditions on min(d, t) previous symbols).
class AddOneMarkovAssignment : public Assignment {
  public:
    AddOneMarkovAssignment(int order, int alphabet_size);
    int alphabet() const override { return l_; }
    int order() const { return d_; }
    PredictiveDist conditional(std::span<const int> prefix) const override;
    double joint_log_prob(std::span<const int> x) const override;

  private:
    int d_;
    int l_;
};

std::unique_ptr<Assignment> make_markov_assignment(int order, int alphabet_size);

// log of the joint add-one probability of (x, z): uniform initial state, then
// alternating add-one emission and transition factors whose counts run over
// strictly earlier positions.
double joint_addone_logprob(std::span<const int> x, std::span<const int> z, int k, int l);

// log F(M, T): the same joint probability as a closed form in the counts
// alone, via factorials over cells and rising factorials over row sums.
double f_of_counts(const CountStats& s);

}  // namespace seqpred
