#include "seqpred/models.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace seqpred {

namespace {

// Validates one simplex row in place: entries in [0,1] up to 1e-12 slop, sum
// within `tol` of 1; clamps and renormalizes exactly.
void fix_row(double* row, int n, double tol, const char* what) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(row[i] >= -1e-12) || !(row[i] <= 1.0 + 1e-12))
            throw NonStochasticError(std::string(what) + ": entry out of [0,1]");
        if (row[i] < 0.0) row[i] = 0.0;
        sum += row[i];
    }
    if (std::abs(sum - 1.0) > tol)
        throw NonStochasticError(std::string(what) + ": row sums to " + std::to_string(sum));
    for (int i = 0; i < n; ++i) row[i] /= sum;
}

// Solves pi^T M = pi^T, sum(pi) = 1 for row-stochastic M by replacing the last
// row of (M^T - I) with all-ones.  That square system is nonsingular exactly
// when the stationary law is unique.
bool solve_stationary(const std::vector<double>& m, int k, std::vector<double>& pi) {
    Eigen::MatrixXd a(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) a(i, j) = m[static_cast<size_t>(j) * k + i] - (i == j ? 1.0 : 0.0);
    for (int j = 0; j < k; ++j) a(k - 1, j) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-9);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd x = lu.solve(b);
    pi.assign(k, 0.0);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        pi[i] = std::max(0.0, x(i));
        sum += pi[i];
    }
    for (double& v : pi) v /= sum;
    return true;
}

struct Forward {
    std::vector<double> log_belief;  // log P(Z_n = . | x), empty x => log stat
    double log_prob = 0.0;           // log P(x); -inf when impossible
};

Forward run_forward(const HmmParams& p, std::span<const int> x) {
    for (int s : x)
        if (s < 0 || s >= p.l) throw ConfigError("symbol out of range for alphabet");
    Forward f;
    f.log_belief.resize(p.k);
    for (int z = 0; z < p.k; ++z) f.log_belief[z] = std::log(p.stat[z]);
    std::vector<double> next(p.k);
    for (size_t t = 0; t < x.size(); ++t) {
        for (int z = 0; z < p.k; ++z) f.log_belief[z] += std::log(p.e(z, x[t]));
        double c = log_sum_exp(f.log_belief);
        if (c == kNegInf) {
            f.log_prob = kNegInf;
            return f;
        }
        f.log_prob += c;
        for (int z = 0; z < p.k; ++z) f.log_belief[z] -= c;
        if (t + 1 < x.size()) {
            for (int z2 = 0; z2 < p.k; ++z2) {
                double acc = kNegInf;
                for (int z = 0; z < p.k; ++z) acc = log_add(acc, f.log_belief[z] + std::log(p.t(z, z2)));
                next[z2] = acc;
            }
            f.log_belief.swap(next);
        }
    }
    return f;
}

}  // namespace

PredictiveDist make_predictive(std::vector<double> probs, double tol) {
    fix_row(probs.data(), static_cast<int>(probs.size()), tol, "predictive");
    return PredictiveDist{std::move(probs)};
}

HmmParams make_hmm(int k, int l, std::vector<double> trans, std::vector<double> emit) {
    if (k < 1 || l < 1) throw ConfigError("make_hmm: k and l must be >= 1");
    if (trans.size() != static_cast<size_t>(k) * k || emit.size() != static_cast<size_t>(k) * l)
        throw ConfigError("make_hmm: matrix shape mismatch");
    for (int i = 0; i < k; ++i) fix_row(&trans[static_cast<size_t>(i) * k], k, 1e-9, "trans");
    for (int i = 0; i < k; ++i) fix_row(&emit[static_cast<size_t>(i) * l], l, 1e-9, "emit");

    HmmParams p;
    p.k = k;
    p.l = l;
    p.trans = std::move(trans);
    p.emit = std::move(emit);
    if (!solve_stationary(p.trans, k, p.stat)) {
        // Non-unique stationary law: take the uniform-restart limit point.
        constexpr double eps = 1e-8;
        std::vector<double> pert(p.trans.size());
        for (size_t i = 0; i < pert.size(); ++i) pert[i] = (1.0 - eps) * p.trans[i] + eps / k;
        if (!solve_stationary(pert, k, p.stat))
            throw Error("stationary solve failed on perturbed chain");
        p.non_unique_stationary = true;
    }
    return p;
}

std::pair<SymbolSequence, StatePath> sample_hmm_path(const HmmParams& p, int n, uint64_t seed) {
    Rng rng(seed);
    SymbolSequence x(n);
    StatePath z(n);
    int cur = 0;
    for (int t = 0; t < n; ++t) {
        if (t == 0)
            cur = rng.discrete(p.stat);
        else
            cur = rng.discrete(std::span<const double>(&p.trans[static_cast<size_t>(cur) * p.k], p.k));
        z[t] = cur;
        x[t] = rng.discrete(std::span<const double>(&p.emit[static_cast<size_t>(cur) * p.l], p.l));
    }
    return {std::move(x), std::move(z)};
}

PredictiveDist hmm_oracle_predictive(const HmmParams& p, std::span<const int> x) {
    Forward f = run_forward(p, x);
    if (f.log_prob == kNegInf)
        throw ImpossibleSequenceError("conditioning sequence has probability 0");
    // One-step state predictive, then emit.
    std::vector<double> belief(p.k), nextstate(p.k, 0.0);
    for (int z = 0; z < p.k; ++z) belief[z] = std::exp(f.log_belief[z]);
    if (x.empty())
        nextstate = belief;  // Z_1 ~ stat
    else
        for (int z = 0; z < p.k; ++z)
            for (int z2 = 0; z2 < p.k; ++z2) nextstate[z2] += belief[z] * p.t(z, z2);
    std::vector<double> probs(p.l, 0.0);
    for (int z = 0; z < p.k; ++z)
        for (int j = 0; j < p.l; ++j) probs[j] += nextstate[z] * p.e(z, j);
    return make_predictive(std::move(probs));
}

double hmm_exact_sequence_prob(const HmmParams& p, std::span<const int> x) {
    return run_forward(p, x).log_prob;
}

RenewalLaw make_renewal(std::vector<double> mu) {
    while (!mu.empty() && mu.back() == 0.0) mu.pop_back();  // trim so support() is tight
    if (mu.empty()) throw ConfigError("make_renewal: empty interarrival law");
    fix_row(mu.data(), static_cast<int>(mu.size()), 1e-9, "mu");
    RenewalLaw law;
    law.mu = std::move(mu);
    int s = law.support();
    law.mean = 0.0;
    for (int i = 0; i < s; ++i) law.mean += (i + 1) * law.mu[i];
    law.stat_wait.resize(s);
    double tail = 0.0;
    for (int i = s - 1; i >= 0; --i) {
        tail += law.mu[i];
        law.stat_wait[i] = tail / law.mean;
    }
    double sum = std::accumulate(law.stat_wait.begin(), law.stat_wait.end(), 0.0);
    for (double& v : law.stat_wait) v /= sum;
    return law;
}

SymbolSequence sample_renewal_path(const RenewalLaw& law, int n, uint64_t seed) {
    Rng rng(seed);
    SymbolSequence x(n, 0);
    int next = rng.discrete(law.stat_wait);  // 0-based index of the first 1
    while (next < n) {
        x[next] = 1;
        next += rng.discrete(law.mu) + 1;
    }
    return x;
}

namespace {

// Steps since the last 1; x.size() when no 1 has occurred.
int gap_since_last_one(std::span<const int> x) {
    for (int i = static_cast<int>(x.size()) - 1; i >= 0; --i)
        if (x[i] == 1) return static_cast<int>(x.size()) - 1 - i;
    return static_cast<int>(x.size());
}

// P(x) > 0 under the stationary renewal law?
bool renewal_possible(const RenewalLaw& law, std::span<const int> x) {
    int s = law.support();
    int prev = -1;
    bool seen_one = false;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 1) continue;
        int pos = static_cast<int>(i);
        if (!seen_one) {
            if (pos >= s || law.stat_wait[pos] <= 0.0) return false;
            seen_one = true;
        } else {
            int gap = pos - prev;
            if (law.gap_prob(gap) <= 0.0) return false;
        }
        prev = pos;
    }
    int tau = gap_since_last_one(x);
    if (!seen_one) {
        double tail = 0.0;
        for (int i = tau; i < s; ++i) tail += law.stat_wait[i];
        return tail > 0.0;
    }
    double tail = 0.0;
    for (int g = tau + 1; g <= s; ++g) tail += law.gap_prob(g);
    return tail > 0.0;
}

}  // namespace

PredictiveDist renewal_hazard_predictive(const RenewalLaw& law, std::span<const int> x) {
    for (int s : x)
        if (s != 0 && s != 1) throw ConfigError("renewal paths are binary");
    if (!renewal_possible(law, x))
        throw ImpossibleSequenceError("conditioning sequence has probability 0 under renewal law");
    int tau = gap_since_last_one(x);
    bool no_one_yet = (tau == static_cast<int>(x.size()));
    double num, den = 0.0;
    if (no_one_yet) {
        // Condition the stationary waiting time on exceeding tau steps.
        num = (tau < law.support()) ? law.stat_wait[tau] : 0.0;
        for (int i = tau; i < law.support(); ++i) den += law.stat_wait[i];
    } else {
        num = law.gap_prob(tau + 1);
        for (int g = tau + 1; g <= law.support(); ++g) den += law.gap_prob(g);
    }
    if (den <= 0.0) throw HazardUndefinedError("no interarrival mass beyond observed gap");
    double h = num / den;
    return make_predictive({1.0 - h, h});
}

HmmParams renewal_as_hmm(const RenewalLaw& law) {
    int s = law.support();
    std::vector<double> trans(static_cast<size_t>(s) * s, 0.0);
    std::vector<double> emit(static_cast<size_t>(s) * 2, 0.0);
    for (int j = 0; j < s; ++j) trans[j] = law.mu[j];  // restart row of state 0
    for (int i = 1; i < s; ++i) trans[static_cast<size_t>(i) * s + (i - 1)] = 1.0;
    emit[1] = 1.0;  // state 0 emits 1
    for (int i = 1; i < s; ++i) emit[static_cast<size_t>(i) * 2] = 1.0;
    return make_hmm(s, 2, std::move(trans), std::move(emit));
}

}  // namespace seqpred
