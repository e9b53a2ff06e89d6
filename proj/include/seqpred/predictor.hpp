#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "seqpred/assignments.hpp"
#include "seqpred/marginal.hpp"

namespace seqpred {

// A next-symbol predictor: maps an observed sequence to a distribution over
// the next symbol.
using Predictor = std::function<PredictiveDist(std::span<const int>)>;

// Averages the assignment's one-step conditionals over all suffixes of x:
// (1/n) sum_{t=1}^{n} Q(. | last t symbols).  The empty sequence falls back
// to Q(. | empty).
PredictiveDist average_predictor(const Assignment& q, std::span<const int> x);

// Averaged conditionals of the hidden-path-marginalized add-one assignment,
// sharing the forward DP across the l+1 evaluations of each suffix.
PredictiveDist optimal_hmm_predictor(int k, int l, std::span<const int> x,
                                     double budget = kDefaultBudget);

// Markov order used when none is given: max(1, floor(log n / (2 log l))).
int markov_auto_order(int l, size_t n);

// Averaged conditionals of the order-d add-one Markov assignment, computed
// incrementally in O(n (d + l)) by maintaining suffix context counts while
// the suffix grows leftward.  order < 0 selects markov_auto_order.
PredictiveDist markov_approx_predictor(int l, std::span<const int> x, int order = -1);

// Plug-in hazard rule: interarrival law estimated by add-one smoothing over
// the completed gaps (support {1..tau+1} union observed gaps), hazard
// mu(tau+1) / sum_{t > tau} mu(t); falls back to n^{-floor_exp} when no gap
// has completed or the tail mass dips below that floor.
PredictiveDist renewal_empirical_hazard_predictor(std::span<const int> x,
                                                  double floor_exp = 1.0);

// --- Maximum-likelihood machinery for stationary renewal laws ------------

// log P(y) of the stationary renewal process with interarrival law mu
// (indexed so mu[i] = P(gap = i+1)); -inf when impossible.
double renewal_stationary_loglik(std::span<const int> y, std::span<const double> mu);

// sup over interarrival laws on {1..support_bound} of the stationary renewal
// log-likelihood of y, via multiplicative-weight ascent from several starts
// followed by a local polish.  Deterministic for fixed inputs.
double renewal_max_loglik(std::span<const int> y, int support_bound);

// Maximizing argument alongside the value.
std::pair<double, std::vector<double>> renewal_max_loglik_arg(std::span<const int> y,
                                                              int support_bound);

// Independent reference maximizer: exhaustive simplex grid at `coarse` step,
// then a local grid at `fine` step around the best coarse point.
double renewal_max_loglik_grid(std::span<const int> y, int support_bound,
                               double coarse = 1e-2, double fine = 1e-3);

// Normalized-maximum-likelihood table over {0,1}^horizon for the renewal
// class, with prefix marginals for sequential conditionals.
struct RenewalNmlTable {
    int horizon = 0;
    std::vector<double> sup_log;                  // 2^horizon unnormalized logs
    std::vector<std::vector<double>> prefix_log;  // prefix_log[t][bits] = log sum over completions
};

RenewalNmlTable build_renewal_nml_table(int horizon, int support_bound);

// Averaged conditionals of the normalized-maximum-likelihood assignment for
// the renewal class.  Tables are built lazily per horizon and cached;
// prediction itself is pure, so instances can be shared across threads.
class RenewalNmlPredictor {
  public:
    explicit RenewalNmlPredictor(int support_bound, int horizon_cap = 12);
    PredictiveDist predict(std::span<const int> x) const;
    int support_bound() const { return s_; }

  private:
    const RenewalNmlTable& table(int horizon) const;

    int s_;
    int cap_;
    mutable std::mutex mu_;
    mutable std::unordered_map<int, std::unique_ptr<RenewalNmlTable>> cache_;
};

// One-shot convenience wrapper around RenewalNmlPredictor.
PredictiveDist renewal_nml_predictor(std::span<const int> x, int support_bound,
                                     int horizon_cap = 12);

}  // namespace seqpred
