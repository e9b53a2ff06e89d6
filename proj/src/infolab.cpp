#include "seqpred/infolab.hpp"

#include <cmath>
#include <functional>

#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace seqpred {

std::vector<int> ExactLaw::decode(size_t seq) const {
    std::vector<int> x(m);
    for (int t = m - 1; t >= 0; --t) {
        x[t] = static_cast<int>(seq % static_cast<size_t>(l));
        seq /= static_cast<size_t>(l);
    }
    return x;
}

ExactLaw exact_law(const HmmParams& p, int m, bool with_z1, double cap) {
    if (m < 1) throw ConfigError("exact law: m must be >= 1");
    double cells = static_cast<double>(p.k) * std::pow(static_cast<double>(p.l), m);
    if (cells > cap) throw CapExceededError("exact law table would need " +
                                            std::to_string(cells) + " cells");
    size_t nseq = 1;
    for (int t = 0; t < m; ++t) nseq *= static_cast<size_t>(p.l);

    ExactLaw law;
    law.l = p.l;
    law.m = m;
    law.k = with_z1 ? p.k : 1;
    law.with_z1 = with_z1;
    law.logp.assign(static_cast<size_t>(law.k) * nseq, kNegInf);

    // Depth-first over sequences, carrying log P(Z1=z1, x^t, Z_t=z) so shared
    // prefixes are computed once.
    std::vector<double> alpha(static_cast<size_t>(p.k) * p.k);
    std::function<void(int, size_t, const std::vector<double>&)> rec =
        [&](int t, size_t idx, const std::vector<double>& a) {
            if (t == m) {
                for (int z1 = 0; z1 < p.k; ++z1) {
                    double tot = kNegInf;
                    for (int z = 0; z < p.k; ++z) tot = log_add(tot, a[static_cast<size_t>(z1) * p.k + z]);
                    if (with_z1)
                        law.logp[static_cast<size_t>(z1) * nseq + idx] = tot;
                    else
                        law.logp[idx] = log_add(law.logp[idx], tot);
                }
                return;
            }
            std::vector<double> next(static_cast<size_t>(p.k) * p.k);
            for (int sym = 0; sym < p.l; ++sym) {
                for (int z1 = 0; z1 < p.k; ++z1)
                    for (int z2 = 0; z2 < p.k; ++z2) {
                        double pre;
                        if (t == 0) {
                            pre = (z2 == z1) ? std::log(p.stat[z1]) : kNegInf;
                        } else {
                            pre = kNegInf;
                            for (int z = 0; z < p.k; ++z)
                                pre = log_add(pre, a[static_cast<size_t>(z1) * p.k + z] +
                                                       std::log(p.t(z, z2)));
                        }
                        next[static_cast<size_t>(z1) * p.k + z2] = pre + std::log(p.e(z2, sym));
                    }
                rec(t + 1, idx * static_cast<size_t>(p.l) + static_cast<size_t>(sym), next);
            }
        };
    rec(0, 0, alpha);
    return law;
}

double table_entropy(std::span<const double> logp) {
    double h = 0.0;
    for (double lp : logp)
        if (lp != kNegInf) h -= std::exp(lp) * lp;
    return h;
}

double kl_divergence(std::span<const double> logp, std::span<const double> logq) {
    if (logp.size() != logq.size()) throw ConfigError("kl: table size mismatch");
    double kl = 0.0;
    for (size_t i = 0; i < logp.size(); ++i) {
        if (logp[i] == kNegInf) continue;
        if (logq[i] == kNegInf)
            throw SupportViolationError("kl: p has mass where q has none");
        kl += std::exp(logp[i]) * (logp[i] - logq[i]);
    }
    return kl;
}

std::vector<double> drop_first_symbol(std::span<const double> logp, int l) {
    size_t out_size = logp.size() / static_cast<size_t>(l);
    std::vector<double> out(out_size, kNegInf);
    for (int a = 0; a < l; ++a)
        for (size_t j = 0; j < out_size; ++j)
            out[j] = log_add(out[j], logp[static_cast<size_t>(a) * out_size + j]);
    return out;
}

std::vector<double> drop_last_symbol(std::span<const double> logp, int l) {
    size_t out_size = logp.size() / static_cast<size_t>(l);
    std::vector<double> out(out_size, kNegInf);
    for (size_t i = 0; i < out_size; ++i) {
        double acc = kNegInf;
        for (int j = 0; j < l; ++j) acc = log_add(acc, logp[i * static_cast<size_t>(l) + j]);
        out[i] = acc;
    }
    return out;
}

MemoryDecomposition memory_term(const HmmParams& p, int n, double cap) {
    if (n < 1) throw ConfigError("memory term: n must be >= 1");
    ExactLaw full = exact_law(p, n + 1, false, cap);

    // I(A; B | C) with A the next symbol, C the most recent t symbols and B
    // the rest, as H(A,C) + H(B,C) - H(A,B,C) - H(C): every block is a
    // contiguous prefix or suffix of x^{n+1}, so plain marginal entropies do.
    double h_full = table_entropy(full.logp);
    double h_pre = table_entropy(drop_last_symbol(full.logp, p.l));  // H(X^n)

    std::vector<double> h_suffix(n + 2);  // h_suffix[len] = H(last len symbols)
    std::vector<double> cur(full.logp.begin(), full.logp.end());
    h_suffix[n + 1] = h_full;
    for (int len = n; len >= 1; --len) {
        cur = drop_first_symbol(cur, p.l);
        h_suffix[len] = table_entropy(cur);
    }

    MemoryDecomposition out;
    out.per_lag.resize(n);
    for (int t = 1; t <= n; ++t) {
        out.per_lag[t - 1] = h_suffix[t + 1] + h_pre - h_full - h_suffix[t];
        out.sum += out.per_lag[t - 1];
    }
    return out;
}

double latent_info(const HmmParams& p, int m, double cap) {
    ExactLaw joint = exact_law(p, m, true, cap);
    size_t nseq = joint.seq_count();
    std::vector<double> marg(nseq, kNegInf);
    for (int z = 0; z < p.k; ++z)
        for (size_t i = 0; i < nseq; ++i) marg[i] = log_add(marg[i], joint.at(z, i));
    double info = 0.0;
    for (int z = 0; z < p.k; ++z) {
        double lz = std::log(p.stat[z]);
        for (size_t i = 0; i < nseq; ++i) {
            double lp = joint.at(z, i);
            if (lp == kNegInf) continue;
            info += std::exp(lp) * (lp - lz - marg[i]);
        }
    }
    return info;
}

double expected_redundancy_exact(const HmmParams& p, const Assignment& q, int m, double cap) {
    ExactLaw law = exact_law(p, m, false, cap);
    double red = 0.0;
    for (size_t i = 0; i < law.logp.size(); ++i) {
        if (law.logp[i] == kNegInf) continue;
        std::vector<int> x = law.decode(i);
        red += std::exp(law.logp[i]) * (law.logp[i] - q.joint_log_prob(x));
    }
    return red;
}

ValueCi expected_redundancy_mc(const HmmParams& p, const Assignment& q, int m, long trials,
                               uint64_t seed) {
    if (trials < 1) throw ConfigError("monte carlo: trials must be >= 1");
    std::vector<double> samples(trials);
    for (long i = 0; i < trials; ++i) {
        auto [x, z] = sample_hmm_path(p, m, derive_seed(seed, static_cast<uint64_t>(i)));
        samples[i] = hmm_exact_sequence_prob(p, x) - q.joint_log_prob(x);
    }
    MeanCi ci = mean_ci95(samples);
    return {ci.mean, ci.lo, ci.hi, trials};
}

double pointwise_joint_redundancy(const HmmParams& p, std::span<const int> x,
                                  std::span<const int> z) {
    if (x.size() != z.size() || x.empty()) throw ConfigError("pointwise redundancy: bad path");
    double lp = std::log(p.stat[z[0]]);
    for (size_t t = 0; t + 1 < z.size(); ++t) lp += std::log(p.t(z[t], z[t + 1]));
    for (size_t t = 0; t < z.size(); ++t) lp += std::log(p.e(z[t], x[t]));
    return lp - joint_addone_logprob(x, z, p.k, p.l);
}

double exact_prediction_risk(const HmmParams& p, const Predictor& predict, int n, double cap) {
    if (n < 0) throw ConfigError("prediction risk: n must be >= 0");
    ExactLaw full = exact_law(p, n + 1, false, cap);
    std::vector<double> prefix =
        n == 0 ? std::vector<double>{0.0} : drop_last_symbol(full.logp, p.l);
    double risk = 0.0;
    std::vector<int> x;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (prefix[i] == kNegInf) continue;
        double px = std::exp(prefix[i]);
        x.assign(n, 0);
        size_t rem = i;
        for (int t = n - 1; t >= 0; --t) {
            x[t] = static_cast<int>(rem % static_cast<size_t>(p.l));
            rem /= static_cast<size_t>(p.l);
        }
        PredictiveDist guess = predict(x);
        double kl = 0.0;
        for (int j = 0; j < p.l; ++j) {
            double lcond = full.logp[i * static_cast<size_t>(p.l) + j] - prefix[i];
            if (lcond == kNegInf) continue;
            if (guess[j] <= 0.0)
                throw SupportViolationError("predictor assigns 0 to a possible symbol");
            kl += std::exp(lcond) * (lcond - std::log(guess[j]));
        }
        risk += px * kl;
    }
    return risk;
}

double shtarkov_sum_iid(int l, int m) {
    if (l < 1 || m < 1) throw ConfigError("shtarkov: l and m must be >= 1");
    // Sum over empirical types: C(m; counts) * prod (count/m)^count.
    double total = kNegInf;
    std::vector<long> counts(l, 0);
    std::function<void(int, long)> rec = [&](int coord, long left) {
        if (coord == l - 1) {
            counts[coord] = left;
            double term = log_factorial(m);
            for (int j = 0; j < l; ++j) {
                term -= log_factorial(counts[j]);
                if (counts[j] > 0)
                    term += static_cast<double>(counts[j]) *
                            std::log(static_cast<double>(counts[j]) / static_cast<double>(m));
            }
            total = log_add(total, term);
            return;
        }
        for (long c = 0; c <= left; ++c) {
            counts[coord] = c;
            rec(coord + 1, left - c);
        }
    };
    rec(0, m);
    return total;
}

double shtarkov_sum_markov1(int l, int m, double cap) {
    if (l < 1 || m < 1) throw ConfigError("shtarkov: l and m must be >= 1");
    double nseq = std::pow(static_cast<double>(l), m);
    if (nseq > cap) throw CapExceededError("shtarkov markov1: too many sequences");
    // The initial symbol's probability maximizes to 1, so only transition
    // counts matter: sup log-lik = sum_ab n_ab log(n_ab / n_a.).
    std::vector<int> x(m, 0);
    std::vector<long> pair_count(static_cast<size_t>(l) * l);
    std::vector<long> row_count(l);
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(nseq));
    while (true) {
        std::fill(pair_count.begin(), pair_count.end(), 0);
        std::fill(row_count.begin(), row_count.end(), 0);
        for (int t = 0; t + 1 < m; ++t) {
            ++pair_count[static_cast<size_t>(x[t]) * l + x[t + 1]];
            ++row_count[x[t]];
        }
        double term = 0.0;
        for (int a = 0; a < l; ++a)
            for (int b = 0; b < l; ++b) {
                long c = pair_count[static_cast<size_t>(a) * l + b];
                if (c > 0)
                    term += static_cast<double>(c) *
                            std::log(static_cast<double>(c) / static_cast<double>(row_count[a]));
            }
        terms.push_back(term);
        int pos = 0;
        while (pos < m && ++x[pos] == l) x[pos++] = 0;
        if (pos == m) break;
    }
    return log_sum_exp(terms);
}

double shtarkov_sum_renewal(int support_bound, int m, double cap) {
    if (m < 1) throw ConfigError("shtarkov: m must be >= 1");
    double nseq = std::pow(2.0, m);
    if (nseq > cap) throw CapExceededError("shtarkov renewal: too many sequences");
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(nseq));
    std::vector<int> y(m);
    for (size_t idx = 0; idx < static_cast<size_t>(nseq); ++idx) {
        for (int b = 0; b < m; ++b) y[b] = static_cast<int>((idx >> (m - 1 - b)) & 1);
        double lp = renewal_max_loglik(y, support_bound);
        if (lp != kNegInf) terms.push_back(lp);
    }
    return log_sum_exp(terms);
}

}  // namespace seqpred
