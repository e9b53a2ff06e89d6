#include "seqpred/assignments.hpp"

#include <cmath>
#include <unordered_map>

#include "seqpred/numerics.hpp"

namespace seqpred {

CountStats CountStats::from_path(std::span<const int> x, std::span<const int> z, int k, int l) {
    if (x.size() != z.size()) throw ConfigError("count stats: path length mismatch");
    CountStats s(k, l);
    for (size_t t = 0; t < x.size(); ++t) {
        if (z[t] < 0 || z[t] >= k || x[t] < 0 || x[t] >= l)
            throw ConfigError("count stats: symbol or state out of range");
        ++s.t(z[t], x[t]);
        if (t + 1 < x.size()) ++s.m(z[t], z[t + 1]);
    }
    return s;
}

long CountStats::total_emissions() const {
    long n = 0;
    for (long c : emit_counts) n += c;
    return n;
}

long CountStats::total_transitions() const {
    long n = 0;
    for (long c : trans_counts) n += c;
    return n;
}

long CountStats::m_row(int i) const {
    long n = 0;
    for (int j = 0; j < k; ++j) n += m(i, j);
    return n;
}

long CountStats::t_row(int z) const {
    long n = 0;
    for (int x = 0; x < l; ++x) n += t(z, x);
    return n;
}

double Assignment::joint_log_prob(std::span<const int> x) const {
    double lp = 0.0;
    for (size_t t = 0; t < x.size(); ++t)
        lp += std::log(conditional(x.first(t))[x[t]]);
    return lp;
}

PredictiveDist addone_conditional(std::span<const long> counts) {
    int l = static_cast<int>(counts.size());
    long total = 0;
    for (long c : counts) {
        if (c < 0) throw ConfigError("addone: negative count");
        total += c;
    }
    std::vector<double> probs(l);
    for (int j = 0; j < l; ++j)
        probs[j] = (1.0 + static_cast<double>(counts[j])) / (static_cast<double>(l) + static_cast<double>(total));
    return make_predictive(std::move(probs));
}

AddOneMarkovAssignment::AddOneMarkovAssignment(int order, int alphabet_size)
    : d_(order), l_(alphabet_size) {
    if (order < 0 || alphabet_size < 1) throw ConfigError("markov assignment: bad order or alphabet");
    double bits = (order + 1) * std::log2(static_cast<double>(std::max(2, alphabet_size)));
    if (bits > 62) throw ConfigError("markov assignment: context space too large to pack");
}

PredictiveDist AddOneMarkovAssignment::conditional(std::span<const int> prefix) const {
    size_t n = prefix.size();
    size_t glen = std::min<size_t>(d_, n);
    std::span<const int> g = prefix.subspan(n - glen, glen);
    uint64_t gkey = pack_context(g, l_);
    std::vector<long> counts(l_, 0);
    for (size_t t = 0; t < n; ++t) {
        size_t clen = std::min<size_t>(d_, t);
        if (clen != glen) continue;
        if (pack_context(prefix.subspan(t - clen, clen), l_) == gkey) ++counts[prefix[t]];
    }
    return addone_conditional(counts);
}

double AddOneMarkovAssignment::joint_log_prob(std::span<const int> x) const {
    // One pass with a running context -> count table.
    std::unordered_map<uint64_t, std::pair<long, std::vector<long>>> table;
    double lp = 0.0;
    for (size_t t = 0; t < x.size(); ++t) {
        if (x[t] < 0 || x[t] >= l_) throw ConfigError("symbol out of range for alphabet");
        size_t clen = std::min<size_t>(d_, t);
        uint64_t key = pack_context(x.subspan(t - clen, clen), l_);
        auto& cell = table[key];
        if (cell.second.empty()) cell.second.assign(l_, 0);
        lp += std::log((1.0 + static_cast<double>(cell.second[x[t]])) /
                       (static_cast<double>(l_) + static_cast<double>(cell.first)));
        ++cell.first;
        ++cell.second[x[t]];
    }
    return lp;
}

std::unique_ptr<Assignment> make_markov_assignment(int order, int alphabet_size) {
    return std::make_unique<AddOneMarkovAssignment>(order, alphabet_size);
}

double joint_addone_logprob(std::span<const int> x, std::span<const int> z, int k, int l) {
    size_t bigk = x.size();
    if (z.size() != bigk) throw ConfigError("joint assignment: path length mismatch");
    if (bigk == 0) return 0.0;
    CountStats s(k, l);
    std::vector<long> visits(k, 0);  // #{i <= t-1: z_i = z}, denominator of both factors
    double lp = -std::log(static_cast<double>(k));
    for (size_t t = 0; t < bigk; ++t) {
        if (z[t] < 0 || z[t] >= k || x[t] < 0 || x[t] >= l)
            throw ConfigError("joint assignment: symbol or state out of range");
        lp += std::log((1.0 + static_cast<double>(s.t(z[t], x[t]))) /
                       (static_cast<double>(l) + static_cast<double>(visits[z[t]])));
        if (t + 1 < bigk)
            lp += std::log((1.0 + static_cast<double>(s.m(z[t], z[t + 1]))) /
                           (static_cast<double>(k) + static_cast<double>(visits[z[t]])));
        ++s.t(z[t], x[t]);
        ++visits[z[t]];
        if (t + 1 < bigk) ++s.m(z[t], z[t + 1]);
    }
    return lp;
}

double f_of_counts(const CountStats& s) {
    if (s.total_emissions() != s.total_transitions() + 1)
        throw ConfigError("count stats: emission total must exceed transition total by 1");
    double lp = -std::log(static_cast<double>(s.k));
    for (int z = 0; z < s.k; ++z) {
        for (int j = 0; j < s.k; ++j) lp += log_factorial(s.m(z, j));
        lp -= log_rising(static_cast<double>(s.k), s.m_row(z));
        for (int x = 0; x < s.l; ++x) lp += log_factorial(s.t(z, x));
        lp -= log_rising(static_cast<double>(s.l), s.t_row(z));
    }
    return lp;
}

}  // namespace seqpred
