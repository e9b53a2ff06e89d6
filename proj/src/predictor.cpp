#include "seqpred/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace seqpred {

PredictiveDist average_predictor(const Assignment& q, std::span<const int> x) {
    size_t n = x.size();
    if (n == 0) return q.conditional(x);
    int l = q.alphabet();
    std::vector<double> avg(l, 0.0);
    for (size_t t = 1; t <= n; ++t) {
        PredictiveDist c = q.conditional(x.subspan(n - t, t));
        for (int j = 0; j < l; ++j) avg[j] += c[j];
    }
    for (double& v : avg) v /= static_cast<double>(n);
    return make_predictive(std::move(avg));
}

PredictiveDist optimal_hmm_predictor(int k, int l, std::span<const int> x, double budget) {
    size_t n = x.size();
    auto dp = make_marginal_dp(k, l, budget);
    if (n == 0) return make_predictive(std::vector<double>(l, 1.0 / l));
    std::vector<double> avg(l, 0.0);
    for (size_t t = 1; t <= n; ++t) {
        dp->reset();
        try {
            for (size_t i = n - t; i < n; ++i) dp->extend(x[i]);
        } catch (const BudgetExceededError& e) {
            throw BudgetExceededError(
                "averaged marginal predictor infeasible beyond suffix length " +
                    std::to_string(t - 1),
                e.estimate);
        }
        std::vector<double> ext = dp->extension_log_probs();
        double lp = dp->log_prob();
        for (int j = 0; j < l; ++j) avg[j] += std::exp(ext[j] - lp);
    }
    for (double& v : avg) v /= static_cast<double>(n);
    return make_predictive(std::move(avg), 1e-6);
}

int markov_auto_order(int l, size_t n) {
    if (l < 2) return 1;
    if (n < 2) return 1;
    double d = std::floor(std::log(static_cast<double>(n)) / (2.0 * std::log(static_cast<double>(l))));
    return std::max(1, static_cast<int>(d));
}

PredictiveDist markov_approx_predictor(int l, std::span<const int> x, int order) {
    if (l < 1) throw ConfigError("markov predictor: alphabet must be >= 1");
    size_t n = x.size();
    int d = order >= 0 ? order : markov_auto_order(l, n);
    double bits = (d + 1) * std::log2(static_cast<double>(std::max(2, l)));
    if (bits > 62) throw ConfigError("markov predictor: context space too large to pack");
    for (int s : x)
        if (s < 0 || s >= l) throw ConfigError("symbol out of range for alphabet");
    if (n == 0) return make_predictive(std::vector<double>(l, 1.0 / l));

    // Context -> (total, per-symbol counts) over the current suffix, with
    // variable-length warm-up contexts at the suffix's left edge.
    std::unordered_map<uint64_t, std::pair<long, std::vector<long>>> tab;
    tab.reserve(2 * n + 16);
    auto bump = [&](size_t begin, size_t len, int sym, long delta) {
        auto& cell = tab[pack_context(x.subspan(begin, len), l)];
        if (cell.second.empty()) cell.second.assign(l, 0);
        cell.first += delta;
        cell.second[sym] += delta;
    };

    std::vector<double> avg(l, 0.0);
    std::vector<long> zeros(l, 0);
    for (size_t t = 1; t <= n; ++t) {
        size_t a = n - t;  // suffix start
        bump(a, 0, x[a], +1);
        // Positions just right of the new start gain one more context symbol.
        size_t hi = std::min(a + static_cast<size_t>(d), n - 1);
        for (size_t p = a + 1; p <= hi; ++p) {
            size_t old_len = std::min<size_t>(d, p - (a + 1));
            size_t new_len = std::min<size_t>(d, p - a);
            bump(p - old_len, old_len, x[p], -1);
            bump(p - new_len, new_len, x[p], +1);
        }
        size_t g = std::min<size_t>(d, t);
        auto it = tab.find(pack_context(x.subspan(n - g, g), l));
        const std::vector<long>& counts = (it == tab.end()) ? zeros : it->second.second;
        long total = (it == tab.end()) ? 0 : it->second.first;
        for (int j = 0; j < l; ++j)
            avg[j] += (1.0 + static_cast<double>(counts[j])) /
                      (static_cast<double>(l) + static_cast<double>(total));
    }
    for (double& v : avg) v /= static_cast<double>(n);
    return make_predictive(std::move(avg), 1e-6);
}

namespace {

int gap_since_last_one(std::span<const int> x) {
    for (int i = static_cast<int>(x.size()) - 1; i >= 0; --i)
        if (x[i] == 1) return static_cast<int>(x.size()) - 1 - i;
    return static_cast<int>(x.size());
}

std::vector<int> completed_gaps(std::span<const int> x) {
    std::vector<int> gaps;
    int prev = -1;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 1) continue;
        if (prev >= 0) gaps.push_back(static_cast<int>(i) - prev);
        prev = static_cast<int>(i);
    }
    return gaps;
}

}  // namespace

PredictiveDist renewal_empirical_hazard_predictor(std::span<const int> x, double floor_exp) {
    for (int s : x)
        if (s != 0 && s != 1) throw ConfigError("renewal paths are binary");
    size_t n = x.size();
    if (n == 0) return make_predictive({0.5, 0.5});
    double floor = std::pow(static_cast<double>(n), -floor_exp);
    std::vector<int> gaps = completed_gaps(x);
    int tau = gap_since_last_one(x);
    double p1;
    if (gaps.empty()) {
        p1 = floor;
    } else {
        // Add-one smoothed interarrival law over {1..tau+1} plus observed gaps.
        int vmax = tau + 1;
        for (int g : gaps) vmax = std::max(vmax, g);
        std::vector<long> cnt(vmax + 1, 0);
        for (int g : gaps) ++cnt[g];
        long support = 0;
        for (int v = 1; v <= vmax; ++v)
            if (v <= tau + 1 || cnt[v] > 0) ++support;
        double denom_all = static_cast<double>(gaps.size()) + static_cast<double>(support);
        double num = 0.0, tail = 0.0;
        for (int v = 1; v <= vmax; ++v) {
            if (!(v <= tau + 1 || cnt[v] > 0)) continue;
            double mass = (1.0 + static_cast<double>(cnt[v])) / denom_all;
            if (v == tau + 1) num = mass;
            if (v > tau) tail += mass;
        }
        p1 = (tail < floor) ? floor : num / tail;
    }
    p1 = std::clamp(p1, 0.0, 1.0);
    return make_predictive({1.0 - p1, p1});
}

double renewal_stationary_loglik(std::span<const int> y, std::span<const double> mu) {
    int s = static_cast<int>(mu.size());
    size_t m = y.size();
    double mean = 0.0;
    for (int i = 0; i < s; ++i) mean += (i + 1) * mu[i];
    if (!(mean > 0.0)) return kNegInf;
    std::vector<double> tail(s + 2, 0.0);  // tail[t] = sum_{gap >= t} mu, t in 1..s+1
    for (int t = s; t >= 1; --t) tail[t] = tail[t + 1] + mu[t - 1];

    int first = -1, last = -1;
    double lp = 0.0;
    int prev = -1;
    for (size_t i = 0; i < m; ++i) {
        if (y[i] != 1) continue;
        int pos = static_cast<int>(i) + 1;  // 1-based
        if (first < 0) {
            first = pos;
            if (pos > s || tail[pos] <= 0.0) return kNegInf;
            lp += std::log(tail[pos]) - std::log(mean);
        } else {
            int gap = pos - prev;
            if (gap > s || mu[gap - 1] <= 0.0) return kNegInf;
            lp += std::log(mu[gap - 1]);
        }
        prev = pos;
        last = pos;
    }
    if (first < 0) {
        // No 1 yet: P(first renewal beyond m) = sum_{g > m} (g - m) mu(g) / mean.
        double acc = 0.0;
        for (int g = static_cast<int>(m) + 1; g <= s; ++g)
            acc += (g - static_cast<int>(m)) * mu[g - 1];
        if (acc <= 0.0) return kNegInf;
        return std::log(acc) - std::log(mean);
    }
    int trailing = static_cast<int>(m) - last;
    if (trailing > 0) {
        if (trailing + 1 > s || tail[trailing + 1] <= 0.0) return kNegInf;
        lp += std::log(tail[trailing + 1]);
    }
    return lp;
}

namespace {

// Gradient of the stationary renewal log-likelihood at an interior mu.
std::vector<double> renewal_loglik_grad(std::span<const int> y, std::span<const double> mu) {
    int s = static_cast<int>(mu.size());
    size_t m = y.size();
    std::vector<double> g(s, 0.0);
    double mean = 0.0;
    for (int i = 0; i < s; ++i) mean += (i + 1) * mu[i];
    for (int i = 0; i < s; ++i) g[i] -= (i + 1) / mean;

    std::vector<double> tail(s + 2, 0.0);
    for (int t = s; t >= 1; --t) tail[t] = tail[t + 1] + mu[t - 1];

    int first = -1, last = -1, prev = -1;
    for (size_t i = 0; i < m; ++i) {
        if (y[i] != 1) continue;
        int pos = static_cast<int>(i) + 1;
        if (first < 0) {
            first = pos;
            for (int v = pos; v <= s; ++v) g[v - 1] += 1.0 / tail[pos];
        } else {
            int gap = pos - prev;
            g[gap - 1] += 1.0 / mu[gap - 1];
        }
        prev = pos;
        last = pos;
    }
    if (first < 0) {
        double acc = 0.0;
        for (int v = static_cast<int>(m) + 1; v <= s; ++v) acc += (v - static_cast<int>(m)) * mu[v - 1];
        for (int v = static_cast<int>(m) + 1; v <= s; ++v) g[v - 1] += (v - static_cast<int>(m)) / acc;
        return g;
    }
    int trailing = static_cast<int>(m) - last;
    if (trailing > 0)
        for (int v = trailing + 1; v <= s; ++v) g[v - 1] += 1.0 / tail[trailing + 1];
    return g;
}

uint64_t content_seed(std::span<const int> y, int s) {
    uint64_t h = derive_seed(0x726e776cULL, static_cast<uint64_t>(s), y.size());
    for (int b : y) h = mix64(h ^ static_cast<uint64_t>(b + 1));
    return h;
}

double ascend_from(std::span<const int> y, std::vector<double> mu, double tol, int max_iter,
                   std::vector<double>* arg_out) {
    double f = renewal_stationary_loglik(y, mu);
    if (f == kNegInf) return kNegInf;
    int s = static_cast<int>(mu.size());
    double eta = 1.0;
    std::vector<double> cand(s);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> g = renewal_loglik_grad(y, mu);
        double gmax = *std::max_element(g.begin(), g.end());
        double improved = kNegInf;
        while (eta > 1e-7) {
            double z = 0.0;
            for (int i = 0; i < s; ++i) {
                cand[i] = mu[i] * std::exp(eta * (g[i] - gmax));
                z += cand[i];
            }
            for (double& v : cand) v /= z;
            improved = renewal_stationary_loglik(y, cand);
            if (improved > f) break;
            eta *= 0.5;
        }
        if (improved <= f + tol) {
            if (improved > f) {
                mu.swap(cand);
                f = improved;
            }
            break;
        }
        mu.swap(cand);
        f = improved;
        eta = std::min(eta * 2.0, 8.0);
    }
    if (arg_out) *arg_out = std::move(mu);
    return f;
}

// Moves small chunks of mass between coordinates to polish (and reach exact
// boundary optima the multiplicative updates only approach).
double polish(std::span<const int> y, std::vector<double>& mu, double f) {
    int s = static_cast<int>(mu.size());
    const double deltas[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    for (int sweep = 0; sweep < 4; ++sweep) {
        bool any = false;
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) {
                if (i == j) continue;
                for (double d : deltas) {
                    double step = std::min(d, mu[i]);
                    if (step <= 0.0) continue;
                    std::vector<double> cand = mu;
                    cand[i] -= step;
                    cand[j] += step;
                    double fc = renewal_stationary_loglik(y, cand);
                    if (fc > f) {
                        mu.swap(cand);
                        f = fc;
                        any = true;
                    }
                }
            }
        if (!any) break;
    }
    return f;
}

}  // namespace

std::pair<double, std::vector<double>> renewal_max_loglik_arg(std::span<const int> y,
                                                              int support_bound) {
    if (support_bound < 1) throw ConfigError("renewal maximum likelihood: support bound must be >= 1");
    for (int b : y)
        if (b != 0 && b != 1) throw ConfigError("renewal paths are binary");
    int s = support_bound;
    std::vector<double> uniform(s, 1.0 / s);
    if (renewal_stationary_loglik(y, uniform) == kNegInf) {
        // Impossible under every law with this support bound (a gap exceeds it).
        return {kNegInf, uniform};
    }
    double best = kNegInf;
    std::vector<double> best_mu = uniform;
    Rng rng(content_seed(y, s));
    for (int restart = 0; restart < 11; ++restart) {
        std::vector<double> start = (restart == 0) ? uniform : rng.simplex(s);
        std::vector<double> arg;
        double f = ascend_from(y, std::move(start), 1e-10, 500, &arg);
        if (f > best) {
            best = f;
            best_mu = std::move(arg);
        }
    }
    best = polish(y, best_mu, best);
    return {best, std::move(best_mu)};
}

double renewal_max_loglik(std::span<const int> y, int support_bound) {
    return renewal_max_loglik_arg(y, support_bound).first;
}

namespace {

// Recursively enumerates the first s-1 simplex coordinates on a grid; the
// last coordinate absorbs the remainder.  A nonnegative radius restricts each
// coordinate to a window around `center`.
void grid_rec(std::span<const int> y, std::vector<double>& mu, int coord, double left,
              double step, const std::vector<double>& center, double radius, double& best) {
    int s = static_cast<int>(mu.size());
    if (coord == s - 1) {
        mu[coord] = left;
        double f = renewal_stationary_loglik(y, mu);
        if (f > best) best = f;
        return;
    }
    double lo = 0.0, hi = left;
    if (radius >= 0.0) {
        lo = std::max(0.0, center[coord] - radius);
        hi = std::min(left, center[coord] + radius);
    }
    for (double v = lo; v <= hi + 1e-12; v += step) {
        mu[coord] = std::min(v, left);
        grid_rec(y, mu, coord + 1, left - mu[coord], step, center, radius, best);
    }
}

}  // namespace

double renewal_max_loglik_grid(std::span<const int> y, int support_bound, double coarse,
                               double fine) {
    int s = support_bound;
    std::vector<double> mu(s, 0.0);
    double best = kNegInf;
    std::vector<double> center(s, 0.0);
    grid_rec(y, mu, 0, 1.0, coarse, center, -1.0, best);

    // Recover the best coarse point, then refine around it.
    double best_coarse = best;
    std::vector<double> best_mu(s, 0.0);
    std::function<void(int, double)> walk = [&](int coord, double left) {
        if (coord == s - 1) {
            mu[coord] = left;
            if (renewal_stationary_loglik(y, mu) >= best_coarse - 1e-15) best_mu = mu;
            return;
        }
        for (double v = 0.0; v <= left + 1e-12; v += coarse) {
            mu[coord] = std::min(v, left);
            walk(coord + 1, left - mu[coord]);
        }
    };
    walk(0, 1.0);
    grid_rec(y, mu, 0, 1.0, fine, best_mu, coarse, best);
    return best;
}

RenewalNmlTable build_renewal_nml_table(int horizon, int support_bound) {
    if (horizon < 1 || horizon > 24) throw ConfigError("renewal nml: horizon out of range");
    RenewalNmlTable t;
    t.horizon = horizon;
    size_t n = size_t{1} << horizon;
    t.sup_log.resize(n);
    std::vector<int> y(horizon);
    for (size_t idx = 0; idx < n; ++idx) {
        for (int b = 0; b < horizon; ++b) y[b] = static_cast<int>((idx >> (horizon - 1 - b)) & 1);
        t.sup_log[idx] = renewal_max_loglik(y, support_bound);
    }
    t.prefix_log.resize(horizon + 1);
    t.prefix_log[horizon] = t.sup_log;
    for (int lev = horizon - 1; lev >= 0; --lev) {
        auto& cur = t.prefix_log[lev];
        const auto& below = t.prefix_log[lev + 1];
        cur.resize(size_t{1} << lev);
        for (size_t v = 0; v < cur.size(); ++v)
            cur[v] = log_add(below[2 * v], below[2 * v + 1]);
    }
    return t;
}

RenewalNmlPredictor::RenewalNmlPredictor(int support_bound, int horizon_cap)
    : s_(support_bound), cap_(horizon_cap) {
    if (support_bound < 1) throw ConfigError("renewal nml: support bound must be >= 1");
}

const RenewalNmlTable& RenewalNmlPredictor::table(int horizon) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(horizon);
    if (it == cache_.end())
        it = cache_.emplace(horizon,
                            std::make_unique<RenewalNmlTable>(build_renewal_nml_table(horizon, s_)))
                 .first;
    return *it->second;
}

PredictiveDist RenewalNmlPredictor::predict(std::span<const int> x) const {
    for (int b : x)
        if (b != 0 && b != 1) throw ConfigError("renewal paths are binary");
    int n = static_cast<int>(x.size());
    if (n + 1 > cap_)
        throw CapExceededError("renewal nml horizon " + std::to_string(n + 1) + " exceeds cap " +
                               std::to_string(cap_));
    if (n == 0) {
        const RenewalNmlTable& t1 = table(1);
        double z = log_add(t1.prefix_log[1][0], t1.prefix_log[1][1]);
        return make_predictive(
            {std::exp(t1.prefix_log[1][0] - z), std::exp(t1.prefix_log[1][1] - z)}, 1e-6);
    }
    const RenewalNmlTable& t = table(n + 1);
    double avg[2] = {0.0, 0.0};
    for (int len = 1; len <= n; ++len) {
        uint64_t bits = 0;
        for (int i = n - len; i < n; ++i) bits = (bits << 1) | static_cast<uint64_t>(x[i]);
        double lw = t.prefix_log[len][bits];
        if (lw == kNegInf)
            throw ImpossibleSequenceError("suffix impossible under every renewal law in class");
        for (int j = 0; j < 2; ++j)
            avg[j] += std::exp(t.prefix_log[len + 1][bits * 2 + j] - lw);
    }
    return make_predictive({avg[0] / n, avg[1] / n}, 1e-6);
}

PredictiveDist renewal_nml_predictor(std::span<const int> x, int support_bound, int horizon_cap) {
    RenewalNmlPredictor p(support_bound, horizon_cap);
    return p.predict(x);
}

}  // namespace seqpred
