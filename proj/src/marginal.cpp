#include "seqpred/marginal.hpp"

#include <cmath>

#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace seqpred {

namespace {

// 256-bit accumulator * base + digit; throws on overflow.
void mul_add(std::array<uint64_t, 4>& w, uint64_t base, uint64_t digit) {
    unsigned __int128 carry = digit;
    for (auto& word : w) {
        unsigned __int128 cur = static_cast<unsigned __int128>(word) * base + carry;
        word = static_cast<uint64_t>(cur);
        carry = cur >> 64;
    }
    if (carry != 0) throw BudgetExceededError("count key overflow", 0.0);
}

// Extracts accumulator % base (the most recently packed digit) and divides.
uint64_t div_extract(std::array<uint64_t, 4>& w, uint64_t base) {
    unsigned __int128 rem = 0;
    for (int i = 3; i >= 0; --i) {
        unsigned __int128 cur = (rem << 64) | w[i];
        w[i] = static_cast<uint64_t>(cur / base);
        rem = cur % base;
    }
    return static_cast<uint64_t>(rem);
}

CountKey pack_with_state(int state, const CountStats& s, long base) {
    CountKey key;
    mul_add(key.w, static_cast<uint64_t>(base), static_cast<uint64_t>(state));
    for (long c : s.trans_counts) mul_add(key.w, static_cast<uint64_t>(base), static_cast<uint64_t>(c));
    for (long c : s.emit_counts) mul_add(key.w, static_cast<uint64_t>(base), static_cast<uint64_t>(c));
    return key;
}

double binom(double n, double r) {  // log C(n, r)
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

}  // namespace

size_t CountKeyHash::operator()(const CountKey& key) const {
    uint64_t h = 0x243f6a8885a308d3ULL;
    for (uint64_t word : key.w) h = mix64(h ^ word);
    return static_cast<size_t>(h);
}

CountKey pack_counts(const CountStats& s, long base) {
    CountKey key;
    for (long c : s.trans_counts) {
        if (c < 0 || c >= base) throw ConfigError("pack_counts: digit out of range");
        mul_add(key.w, static_cast<uint64_t>(base), static_cast<uint64_t>(c));
    }
    for (long c : s.emit_counts) {
        if (c < 0 || c >= base) throw ConfigError("pack_counts: digit out of range");
        mul_add(key.w, static_cast<uint64_t>(base), static_cast<uint64_t>(c));
    }
    return key;
}

CountStats unpack_counts(const CountKey& key, int k, int l, long base) {
    CountStats s(k, l);
    std::array<uint64_t, 4> w = key.w;
    for (int i = static_cast<int>(s.emit_counts.size()) - 1; i >= 0; --i)
        s.emit_counts[i] = static_cast<long>(div_extract(w, static_cast<uint64_t>(base)));
    for (int i = static_cast<int>(s.trans_counts.size()) - 1; i >= 0; --i)
        s.trans_counts[i] = static_cast<long>(div_extract(w, static_cast<uint64_t>(base)));
    return s;
}

double feasibility_estimate(int k, int l, std::span<const int> x) {
    std::vector<long> hist(l, 0);
    double total = 0.0;
    double kk = static_cast<double>(k) * k;
    for (size_t j = 1; j <= x.size(); ++j) {
        ++hist[x[j - 1]];
        double lg = binom(static_cast<double>(j) - 1.0 + kk - 1.0, kk - 1.0);
        for (int a = 0; a < l; ++a)
            lg += binom(static_cast<double>(hist[a]) + k - 1.0, static_cast<double>(k) - 1.0);
        total += std::exp(lg);
        if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
    }
    return total;
}

TrajectoryCounter::TrajectoryCounter(std::span<const int> x, int k, int l, double budget)
    : x_(x.begin(), x.end()), k_(k), l_(l), base_(static_cast<long>(x.size()) + 1), budget_(budget) {
    if (k < 1 || l < 1) throw ConfigError("trajectory counter: k and l must be >= 1");
    for (int s : x_)
        if (s < 0 || s >= l) throw ConfigError("symbol out of range for alphabet");
}

mpz_class TrajectoryCounter::count(const CountStats& s) {
    if (s.k != k_ || s.l != l_) throw ConfigError("trajectory counter: shape mismatch");
    for (long c : s.trans_counts)
        if (c < 0) throw ConfigError("trajectory counter: negative count");
    for (long c : s.emit_counts)
        if (c < 0) throw ConfigError("trajectory counter: negative count");
    if (s.total_emissions() != static_cast<long>(x_.size())) return 0;
    CountStats work = s;
    return rec(work, static_cast<long>(x_.size()));
}

mpz_class TrajectoryCounter::rec(CountStats& s, long bigk) {
    if (s.total_transitions() != bigk - 1) return 0;
    // The path must end in the unique state whose emission row exceeds its
    // transition row by one; any other discrepancy pattern is unrealizable.
    int terminal = -1;
    for (int i = 0; i < k_; ++i) {
        long d = s.t_row(i) - s.m_row(i);
        if (d == 1) {
            if (terminal != -1) return 0;
            terminal = i;
        } else if (d != 0) {
            return 0;
        }
    }
    if (terminal == -1) return 0;
    if (bigk == 1) return s.t(terminal, x_[0]) == 1 ? 1 : 0;
    int sym = x_[bigk - 1];
    if (s.t(terminal, sym) < 1) return 0;

    CountKey key = pack_counts(s, base_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    mpz_class total = 0;
    --s.t(terminal, sym);
    for (int i = 0; i < k_; ++i) {
        if (s.m(i, terminal) < 1) continue;
        --s.m(i, terminal);
        total += rec(s, bigk - 1);
        ++s.m(i, terminal);
    }
    ++s.t(terminal, sym);

    if (static_cast<double>(memo_.size()) >= budget_)
        throw BudgetExceededError("trajectory counter memo", static_cast<double>(memo_.size()));
    memo_.emplace(key, total);
    return total;
}

mpz_class count_trajectories(const CountStats& s, std::span<const int> x, double budget) {
    TrajectoryCounter counter(x, s.k, s.l, budget);
    return counter.count(s);
}

MarginalDp::MarginalDp(int k, int l, double budget) : k_(k), l_(l), budget_(budget) {
    if (k < 1 || l < 1) throw ConfigError("marginal dp: k and l must be >= 1");
}

void MarginalDp::reset() {
    t_ = 0;
    nodes_.clear();
    log_scale_ = 0.0;
    log_prob_ = 0.0;
    states_seen_ = 0;
}

void MarginalDp::extend(int symbol) {
    if (symbol < 0 || symbol >= l_) throw ConfigError("symbol out of range for alphabet");
    std::vector<Node> next;
    std::unordered_map<CountKey, size_t, CountKeyHash> index;
    long base = std::max<long>(t_ + 2, k_ + 1);
    auto add_mass = [&](int state, CountStats&& counts, double mass) {
        CountKey key = pack_with_state(state, counts, base);
        auto [it, fresh] = index.try_emplace(key, next.size());
        if (fresh)
            next.push_back(Node{state, std::move(counts), mass});
        else
            next[it->second].mass += mass;
    };

    if (t_ == 0) {
        for (int z = 0; z < k_; ++z) {
            CountStats s(k_, l_);
            ++s.t(z, symbol);
            add_mass(z, std::move(s), 1.0 / (static_cast<double>(k_) * l_));
        }
    } else {
        for (const Node& node : nodes_) {
            const CountStats& s = node.counts;
            long mrow = s.m_row(node.state);
            for (int z2 = 0; z2 < k_; ++z2) {
                double w = (1.0 + static_cast<double>(s.m(node.state, z2))) /
                           (static_cast<double>(k_) + static_cast<double>(mrow));
                w *= (1.0 + static_cast<double>(s.t(z2, symbol))) /
                     (static_cast<double>(l_) + static_cast<double>(s.t_row(z2)));
                CountStats s2 = s;
                ++s2.m(node.state, z2);
                ++s2.t(z2, symbol);
                add_mass(z2, std::move(s2), node.mass * w);
            }
        }
    }

    double total = 0.0, peak = 0.0;
    for (const Node& node : next) {
        total += node.mass;
        peak = std::max(peak, node.mass);
    }
    log_prob_ = log_scale_ + std::log(total);
    for (Node& node : next) node.mass /= peak;
    log_scale_ += std::log(peak);

    nodes_.swap(next);
    ++t_;
    states_seen_ += nodes_.size();
    if (static_cast<double>(states_seen_) > budget_)
        throw BudgetExceededError("marginal dp frontier", static_cast<double>(states_seen_));
}

double MarginalDp::log_prob() const { return log_prob_; }

std::vector<double> MarginalDp::extension_log_probs() const {
    std::vector<double> out(l_);
    if (t_ == 0) {
        for (int j = 0; j < l_; ++j) out[j] = -std::log(static_cast<double>(l_));
        return out;
    }
    for (int j = 0; j < l_; ++j) {
        double acc = 0.0;
        for (const Node& node : nodes_) {
            const CountStats& s = node.counts;
            long mrow = s.m_row(node.state);
            for (int z2 = 0; z2 < k_; ++z2) {
                double w = (1.0 + static_cast<double>(s.m(node.state, z2))) /
                           (static_cast<double>(k_) + static_cast<double>(mrow));
                w *= (1.0 + static_cast<double>(s.t(z2, j))) /
                     (static_cast<double>(l_) + static_cast<double>(s.t_row(z2)));
                acc += node.mass * w;
            }
        }
        out[j] = log_scale_ + std::log(acc);
    }
    return out;
}

double marginal_assignment_logprob(std::span<const int> x, int k, int l, double budget) {
    if (x.empty()) return 0.0;
    double est = feasibility_estimate(k, l, x) * k;
    if (est > budget) throw BudgetExceededError("marginal logprob infeasible", est);
    MarginalDp dp(k, l, budget);
    for (int s : x) dp.extend(s);
    return dp.log_prob();
}

double brute_marginal_logprob(std::span<const int> x, int k, int l, double cap) {
    size_t bigk = x.size();
    if (bigk == 0) return 0.0;
    double paths = std::pow(static_cast<double>(k), static_cast<double>(bigk));
    if (paths > cap) throw CapExceededError("brute marginal: too many state paths");
    std::vector<int> z(bigk, 0);
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(paths));
    while (true) {
        terms.push_back(joint_addone_logprob(x, z, k, l));
        size_t pos = 0;
        while (pos < bigk && ++z[pos] == k) z[pos++] = 0;
        if (pos == bigk) break;
    }
    return log_sum_exp(terms);
}

PredictiveDist marginal_conditional(std::span<const int> prefix, int k, int l, double budget) {
    auto dp = make_marginal_dp(k, l, budget);
    for (int s : prefix) dp->extend(s);
    std::vector<double> ext = dp->extension_log_probs();
    double lp = dp->log_prob();
    std::vector<double> probs(l);
    for (int j = 0; j < l; ++j) probs[j] = std::exp(ext[j] - lp);
    return make_predictive(std::move(probs), 1e-6);
}

MarginalDp22::MarginalDp22(double budget) : MarginalDp(2, 2, budget) {}

size_t MarginalDp22::idx(int z, int z1, int n0, int m00, int t00) const {
    size_t c = static_cast<size_t>(t_) + 1;
    size_t d = static_cast<size_t>(std::max(t_, 1));
    return (((static_cast<size_t>(z) * 2 + z1) * c + n0) * d + m00) * c + t00;
}

void MarginalDp22::reset() {
    t_ = 0;
    c0_ = 0;
    mass_.clear();
    log_scale_ = 0.0;
    log_prob_ = 0.0;
}

void MarginalDp22::extend(int symbol) {
    if (symbol < 0 || symbol >= 2) throw ConfigError("symbol out of range for alphabet");
    if (t_ == 0) {
        t_ = 1;
        c0_ = (symbol == 0) ? 1 : 0;
        mass_.assign(2 * 2 * 2 * 1 * 2, 0.0);
        for (int z = 0; z < 2; ++z)
            mass_[idx(z, z, z == 0 ? 1 : 0, 0, (z == 0 && symbol == 0) ? 1 : 0)] = 0.25;
        log_prob_ = std::log(0.5);
        log_scale_ = std::log(0.25);
        for (double& m : mass_) m = (m > 0.0) ? 1.0 : 0.0;
        return;
    }

    int t = t_;
    size_t nc = static_cast<size_t>(t) + 2, nd = static_cast<size_t>(t + 1);
    std::vector<double> next(4 * nc * nd * nc, 0.0);
    auto nidx = [&](int z, int z1, int n0, int m00, int t00) {
        return (((static_cast<size_t>(z) * 2 + z1) * nc + n0) * nd + m00) * nc + t00;
    };

    double total = 0.0, peak = 0.0;
    for (int z = 0; z < 2; ++z)
        for (int z1 = 0; z1 < 2; ++z1)
            for (int n0 = 0; n0 <= t; ++n0)
                for (int m00 = 0; m00 < std::max(t, 1); ++m00)
                    for (int t00 = 0; t00 <= t; ++t00) {
                        double m = mass_[idx(z, z1, n0, m00, t00)];
                        if (m <= 0.0) continue;
                        // Reconstruct the count matrices from the reduced state.
                        int n1 = t - n0;
                        int t01 = n0 - t00;
                        int t10 = c0_ - t00;
                        int t11 = (t - c0_) - t01;
                        int mrow0 = n0 - (z == 0 ? 1 : 0);
                        int mrow1 = n1 - (z == 1 ? 1 : 0);
                        int mcol0 = n0 - (z1 == 0 ? 1 : 0);
                        int m01 = mrow0 - m00;
                        int m10 = mcol0 - m00;
                        int m11 = mrow1 - m10;
                        int mrow[2] = {mrow0, mrow1};
                        int mm[2][2] = {{m00, m01}, {m10, m11}};
                        int tt[2][2] = {{t00, t01}, {t10, t11}};
                        int trow[2] = {n0, n1};
                        for (int z2 = 0; z2 < 2; ++z2) {
                            double w = (1.0 + mm[z][z2]) / (2.0 + mrow[z]) *
                                       (1.0 + tt[z2][symbol]) / (2.0 + trow[z2]);
                            double nm = m * w;
                            next[nidx(z2, z1, n0 + (z2 == 0 ? 1 : 0),
                                      m00 + ((z == 0 && z2 == 0) ? 1 : 0),
                                      t00 + ((z2 == 0 && symbol == 0) ? 1 : 0))] += nm;
                        }
                    }
    for (double m : next) {
        total += m;
        peak = std::max(peak, m);
    }
    log_prob_ = log_scale_ + std::log(total);
    for (double& m : next) m /= peak;
    log_scale_ += std::log(peak);
    mass_.swap(next);
    ++t_;
    c0_ += (symbol == 0) ? 1 : 0;
}

double MarginalDp22::log_prob() const { return t_ == 0 ? 0.0 : log_prob_; }

std::vector<double> MarginalDp22::extension_log_probs() const {
    if (t_ == 0) return {std::log(0.5), std::log(0.5)};
    int t = t_;
    double acc[2] = {0.0, 0.0};
    for (int z = 0; z < 2; ++z)
        for (int z1 = 0; z1 < 2; ++z1)
            for (int n0 = 0; n0 <= t; ++n0)
                for (int m00 = 0; m00 < std::max(t, 1); ++m00)
                    for (int t00 = 0; t00 <= t; ++t00) {
                        double m = mass_[idx(z, z1, n0, m00, t00)];
                        if (m <= 0.0) continue;
                        int n1 = t - n0;
                        int t01 = n0 - t00;
                        int t10 = c0_ - t00;
                        int t11 = (t - c0_) - t01;
                        int mrow0 = n0 - (z == 0 ? 1 : 0);
                        int mrow1 = n1 - (z == 1 ? 1 : 0);
                        int mcol0 = n0 - (z1 == 0 ? 1 : 0);
                        int m01 = mrow0 - m00;
                        int m10 = mcol0 - m00;
                        int m11 = mrow1 - m10;
                        int mrow[2] = {mrow0, mrow1};
                        int mm[2][2] = {{m00, m01}, {m10, m11}};
                        int tt[2][2] = {{t00, t01}, {t10, t11}};
                        int trow[2] = {n0, n1};
                        for (int j = 0; j < 2; ++j)
                            for (int z2 = 0; z2 < 2; ++z2)
                                acc[j] += m * (1.0 + mm[z][z2]) / (2.0 + mrow[z]) *
                                          (1.0 + tt[z2][j]) / (2.0 + trow[z2]);
                    }
    return {log_scale_ + std::log(acc[0]), log_scale_ + std::log(acc[1])};
}

std::unique_ptr<MarginalDp> make_marginal_dp(int k, int l, double budget) {
    if (k == 2 && l == 2) return std::make_unique<MarginalDp22>(budget);
    return std::make_unique<MarginalDp>(k, l, budget);
}

}  // namespace seqpred
