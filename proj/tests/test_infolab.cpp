#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "seqpred/assignments.hpp"
#include "seqpred/infolab.hpp"
#include "seqpred/marginal.hpp"
#include "seqpred/models.hpp"
#include "seqpred/numerics.hpp"
#include "seqpred/predictor.hpp"
#include "seqpred/rng.hpp"

using namespace seqpred;

namespace {

bool close(double a, double b, double tol = 1e-9) {
    if (a == b) return true;
    return std::fabs(a - b) <= tol;
}

HmmParams random_model(Rng& rng, int k, int l) {
    std::vector<double> trans, emit;
    for (int i = 0; i < k; ++i) {
        auto row = rng.simplex(k);
        trans.insert(trans.end(), row.begin(), row.end());
        auto erow = rng.simplex(l);
        emit.insert(emit.end(), erow.begin(), erow.end());
    }
    return make_hmm(k, l, trans, emit);
}

std::vector<std::vector<int>> all_sequences(int l, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> x(m, 0);
    while (true) {
        out.push_back(x);
        int pos = m - 1;
        while (pos >= 0 && ++x[pos] == l) x[pos--] = 0;
        if (pos < 0) break;
    }
    return out;
}

// Adapter exposing the data-generating process itself as an assignment.
struct OracleAssignment : Assignment {
    HmmParams p;
    explicit OracleAssignment(HmmParams model) : p(std::move(model)) {}
    int alphabet() const override { return p.l; }
    PredictiveDist conditional(std::span<const int> prefix) const override {
        return hmm_oracle_predictive(p, prefix);
    }
    double joint_log_prob(std::span<const int> x) const override {
        return hmm_exact_sequence_prob(p, x);
    }
};

// Conditional mutual information I(C; A | B) computed directly from the raw
// length-(n+1) table, where A = first n-t symbols, B = middle t, C = the last
// symbol.  Entirely independent of the entropy-difference route.
double direct_cmi(const ExactLaw& law, int t) {
    int l = law.l;
    int n1 = law.m;                 // n + 1
    int a_len = n1 - 1 - t;
    size_t a_count = 1, b_count = 1;
    for (int i = 0; i < a_len; ++i) a_count *= static_cast<size_t>(l);
    for (int i = 0; i < t; ++i) b_count *= static_cast<size_t>(l);
    size_t c_count = static_cast<size_t>(l);

    std::vector<double> pab(a_count * b_count, 0.0), pbc(b_count * c_count, 0.0),
        pb(b_count, 0.0);
    std::vector<double> pabc(law.seq_count(), 0.0);
    for (size_t s = 0; s < law.seq_count(); ++s) pabc[s] = std::exp(law.logp[s]);
    for (size_t a = 0; a < a_count; ++a)
        for (size_t b = 0; b < b_count; ++b)
            for (size_t c = 0; c < c_count; ++c) {
                double v = pabc[(a * b_count + b) * c_count + c];
                pab[a * b_count + b] += v;
                pbc[b * c_count + c] += v;
                pb[b] += v;
            }
    double cmi = 0.0;
    for (size_t a = 0; a < a_count; ++a)
        for (size_t b = 0; b < b_count; ++b)
            for (size_t c = 0; c < c_count; ++c) {
                double v = pabc[(a * b_count + b) * c_count + c];
                if (v <= 0.0) continue;
                cmi += v * (std::log(v) + std::log(pb[b]) - std::log(pab[a * b_count + b]) -
                            std::log(pbc[b * c_count + c]));
            }
    return cmi;
}

}  // namespace

TEST_CASE("exhaustive law: single-state product form") {
    HmmParams p = make_hmm(1, 2, {1.0}, {0.3, 0.7});
    ExactLaw law = exact_law(p, 3, false);
    REQUIRE(law.seq_count() == 8);
    double total = 0.0;
    for (size_t s = 0; s < 8; ++s) {
        auto x = law.decode(s);
        double want = 1.0;
        for (int sym : x) want *= (sym == 0 ? 0.3 : 0.7);
        CHECK(close(std::exp(law.logp[s]), want, 1e-12));
        total += std::exp(law.logp[s]);
    }
    CHECK(close(total, 1.0, 1e-12));
}

TEST_CASE("exhaustive law: one step equals stationary times emission") {
    HmmParams p = make_hmm(2, 2, {0.5, 0.5, 1.0, 0.0}, {0.9, 0.1, 0.2, 0.8});
    // Stationary: pi = (2/3, 1/3).
    ExactLaw law = exact_law(p, 1, true);
    REQUIRE(law.k == 2);
    REQUIRE(law.seq_count() == 2);
    CHECK(close(std::exp(law.at(0, 0)), 2.0 / 3 * 0.9, 1e-12));
    CHECK(close(std::exp(law.at(0, 1)), 2.0 / 3 * 0.1, 1e-12));
    CHECK(close(std::exp(law.at(1, 0)), 1.0 / 3 * 0.2, 1e-12));
    CHECK(close(std::exp(law.at(1, 1)), 1.0 / 3 * 0.8, 1e-12));
}

TEST_CASE("exhaustive law matches per-sequence evaluation and marginalizes over z") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        Rng rng(derive_seed(0xAA, seed));
        int k = 1 + static_cast<int>(seed % 3);
        HmmParams p = random_model(rng, k, 2);
        ExactLaw joint = exact_law(p, 4, true);
        ExactLaw marg = exact_law(p, 4, false);
        for (size_t s = 0; s < marg.seq_count(); ++s) {
            auto x = marg.decode(s);
            CHECK(close(marg.logp[s], hmm_exact_sequence_prob(p, x), 1e-10));
            double sum_z = 0.0;
            for (int z = 0; z < k; ++z) sum_z += std::exp(joint.at(z, s));
            CHECK(close(std::log(sum_z), marg.logp[s], 1e-10));
        }
    }
}

TEST_CASE("exhaustive law: big-endian decoding and table cap") {
    HmmParams p = make_hmm(1, 2, {1.0}, {0.5, 0.5});
    ExactLaw law = exact_law(p, 3, false);
    std::vector<int> want = {1, 1, 0};
    CHECK(law.decode(6) == want);
    CHECK_THROWS_AS(exact_law(p, 30, false), CapExceededError);
}

TEST_CASE("table entropy: closed forms") {
    std::vector<double> unif(8, std::log(1.0 / 8));
    CHECK(close(table_entropy(unif), std::log(8.0), 1e-12));
    std::vector<double> point = {0.0, kNegInf, kNegInf};
    CHECK(close(table_entropy(point), 0.0, 1e-12));
    std::vector<double> two = {std::log(0.25), std::log(0.75)};
    CHECK(close(table_entropy(two), -0.25 * std::log(0.25) - 0.75 * std::log(0.75), 1e-12));
}

TEST_CASE("kl divergence: pins, asymmetry, support checks") {
    std::vector<double> ph = {std::log(0.5), std::log(0.5)};
    std::vector<double> q = {std::log(0.25), std::log(0.75)};
    CHECK(close(kl_divergence(ph, ph), 0.0, 1e-12));
    CHECK(close(kl_divergence(ph, q), 0.5 * std::log(4.0 / 3.0), 1e-12));
    CHECK(kl_divergence(ph, q) != kl_divergence(q, ph));
    std::vector<double> spiked = {0.0, kNegInf};
    CHECK(close(kl_divergence(spiked, ph), std::log(2.0), 1e-12));
    CHECK_THROWS_AS(kl_divergence(ph, spiked), SupportViolationError);
    // Nonnegativity on random pairs.
    Rng rng(0xBB);
    for (int rep = 0; rep < 30; ++rep) {
        auto pv = rng.simplex(4);
        auto qv = rng.simplex(4);
        std::vector<double> lp, lq;
        for (double v : pv) lp.push_back(std::log(v));
        for (double v : qv) lq.push_back(std::log(v));
        CHECK(kl_divergence(lp, lq) >= -1e-12);
    }
}

TEST_CASE("dropping the first or last symbol recovers the shorter law") {
    for (uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(derive_seed(0xCC, seed));
        HmmParams p = random_model(rng, 2, 2);
        ExactLaw law4 = exact_law(p, 4, false);
        ExactLaw law3 = exact_law(p, 3, false);
        auto df = drop_first_symbol(law4.logp, 2);
        auto dl = drop_last_symbol(law4.logp, 2);
        REQUIRE(df.size() == law3.logp.size());
        REQUIRE(dl.size() == law3.logp.size());
        for (size_t s = 0; s < law3.seq_count(); ++s) {
            // Stationarity: both reductions reproduce the length-3 law.
            CHECK(close(df[s], law3.logp[s], 1e-10));
            CHECK(close(dl[s], law3.logp[s], 1e-10));
        }
    }
}

TEST_CASE("memory decomposition: degenerate processes carry no memory") {
    HmmParams iid = make_hmm(1, 2, {1.0}, {0.4, 0.6});
    MemoryDecomposition md = memory_term(iid, 4);
    REQUIRE(md.per_lag.size() == 4);
    for (double v : md.per_lag) CHECK(close(v, 0.0, 1e-10));
    CHECK(close(md.sum, 0.0, 1e-10));

    // Hidden dynamics but identical emission rows: output is iid.
    HmmParams hidden = make_hmm(2, 2, {0.9, 0.1, 0.3, 0.7}, {0.5, 0.5, 0.5, 0.5});
    MemoryDecomposition md2 = memory_term(hidden, 4);
    for (double v : md2.per_lag) CHECK(close(v, 0.0, 1e-10));
}

TEST_CASE("memory decomposition equals directly aggregated conditional information") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(0xDD, seed));
        int k = 1 + static_cast<int>(seed % 3);
        HmmParams p = random_model(rng, k, 2);
        int n = 4;
        MemoryDecomposition md = memory_term(p, n);
        ExactLaw law = exact_law(p, n + 1, false);
        double acc = 0.0;
        for (int t = 1; t <= n; ++t) {
            double want = direct_cmi(law, t);
            CHECK(close(md.per_lag[t - 1], want, 1e-9));
            CHECK(md.per_lag[t - 1] >= -1e-10);
            acc += want;
        }
        CHECK(close(md.sum, acc, 1e-9));
    }
}

TEST_CASE("latent information: closed forms and bounds") {
    // Identical emission rows: observations reveal nothing.
    HmmParams blind = make_hmm(2, 2, {0.8, 0.2, 0.4, 0.6}, {0.5, 0.5, 0.5, 0.5});
    CHECK(close(latent_info(blind, 4), 0.0, 1e-10));

    // Deterministic alternation with revealing emissions: one symbol pins the
    // state, so the information equals the full state entropy log 2.
    HmmParams cycle = make_hmm(2, 2, {0.0, 1.0, 1.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
    for (int m = 1; m <= 4; ++m) CHECK(close(latent_info(cycle, m), std::log(2.0), 1e-10));

    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(0xEE, seed));
        int k = 1 + static_cast<int>(seed % 3);
        HmmParams p = random_model(rng, k, 2);
        double prev = 0.0;
        for (int m = 1; m <= 5; ++m) {
            double li = latent_info(p, m);
            CHECK(li >= prev - 1e-10);  // more observations never lose information
            CHECK(li <= std::log(static_cast<double>(k)) + 1e-9);
            prev = li;
        }
    }
}

TEST_CASE("memory sum is bounded by the latent information one step ahead") {
    for (uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(derive_seed(0xFF, seed));
        int k = 1 + static_cast<int>(seed % 3);
        HmmParams p = random_model(rng, k, 2);
        int n = 2 + static_cast<int>(seed % 4);
        MemoryDecomposition md = memory_term(p, n);
        CHECK(md.sum <= latent_info(p, n + 1) + 1e-9);
    }
}

TEST_CASE("expected redundancy: zero against the generating law") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(derive_seed(0x1AA, seed));
        HmmParams p = random_model(rng, 2, 2);
        OracleAssignment q(p);
        CHECK(close(expected_redundancy_exact(p, q, 4), 0.0, 1e-10));
    }
}

TEST_CASE("expected redundancy: brute-force sum for a memoryless source") {
    HmmParams p = make_hmm(1, 2, {1.0}, {0.3, 0.7});
    AddOneMarkovAssignment q(0, 2);
    int m = 5;
    double want = 0.0;
    for (auto& x : all_sequences(2, m)) {
        double lp = hmm_exact_sequence_prob(p, x);
        want += std::exp(lp) * (lp - q.joint_log_prob(x));
    }
    CHECK(close(expected_redundancy_exact(p, q, m), want, 1e-10));
    CHECK(want > 0.0);
}

TEST_CASE("expected redundancy is nonnegative for proper assignments") {
    for (uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(derive_seed(0x1BB, seed));
        HmmParams p = random_model(rng, 2, 2);
        MarginalAssignment q(2, 2);
        CHECK(expected_redundancy_exact(p, q, 4) >= -1e-10);
    }
}

TEST_CASE("monte carlo redundancy brackets the exhaustive value") {
    Rng rng(0x1CC);
    HmmParams p = random_model(rng, 2, 2);
    AddOneMarkovAssignment q(1, 2);
    double exact = expected_redundancy_exact(p, q, 6);
    ValueCi mc = expected_redundancy_mc(p, q, 6, 40000, 20240817);
    CHECK(mc.trials == 40000);
    CHECK(mc.lo <= mc.value);
    CHECK(mc.value <= mc.hi);
    double half = 0.5 * (mc.hi - mc.lo);
    CHECK(std::fabs(mc.value - exact) <= 3.0 * half);

    // Same seed reproduces the estimate bit-for-bit; a different seed moves it.
    ValueCi again = expected_redundancy_mc(p, q, 6, 40000, 20240817);
    CHECK(again.value == mc.value);
    ValueCi other = expected_redundancy_mc(p, q, 6, 40000, 99);
    CHECK(other.value != mc.value);
}

TEST_CASE("pointwise joint redundancy: direct recomputation") {
    CHECK(close(pointwise_joint_redundancy(make_hmm(1, 1, {1.0}, {1.0}),
                                           std::vector<int>{0, 0, 0}, std::vector<int>{0, 0, 0}),
                0.0, 1e-12));
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(0x1DD, seed));
        int k = 1 + static_cast<int>(seed % 3), l = 2 + static_cast<int>(seed % 2);
        HmmParams p = random_model(rng, k, l);
        auto [x, z] = sample_hmm_path(p, 6, derive_seed(0x1DE, seed));
        double truth = std::log(p.stat[z[0]]);
        for (size_t t = 0; t + 1 < z.size(); ++t) truth += std::log(p.t(z[t], z[t + 1]));
        for (size_t t = 0; t < x.size(); ++t) truth += std::log(p.e(z[t], x[t]));
        double want = truth - joint_addone_logprob(x, z, k, l);
        CHECK(close(pointwise_joint_redundancy(p, x, z), want, 1e-10));
    }
    // Impossible pair under the model.
    HmmParams det = make_hmm(1, 2, {1.0}, {1.0, 0.0});
    CHECK(pointwise_joint_redundancy(det, std::vector<int>{1}, std::vector<int>{0}) == kNegInf);
}

TEST_CASE("prediction risk: oracle is exactly calibrated, constants pay their KL") {
    for (uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(derive_seed(0x1EE, seed));
        HmmParams p = random_model(rng, 2, 2);
        Predictor oracle = [&p](std::span<const int> x) { return hmm_oracle_predictive(p, x); };
        CHECK(close(exact_prediction_risk(p, oracle, 4), 0.0, 1e-12));
    }

    HmmParams unif = make_hmm(1, 2, {1.0}, {0.5, 0.5});
    Predictor fixed = [](std::span<const int>) { return make_predictive({0.6, 0.4}); };
    double want = 0.5 * std::log(0.5 / 0.6) + 0.5 * std::log(0.5 / 0.4);
    CHECK(close(exact_prediction_risk(unif, fixed, 3), want, 1e-12));

    // Risk is an expected KL, hence nonnegative.
    for (uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(derive_seed(0x1FF, seed));
        HmmParams p = random_model(rng, 2, 2);
        Predictor markov = [](std::span<const int> x) { return markov_approx_predictor(2, x); };
        CHECK(exact_prediction_risk(p, markov, 4) >= -1e-12);
    }
}

TEST_CASE("risk of the averaged marginal predictor obeys the information budget") {
    for (uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(derive_seed(0x2AA, seed));
        HmmParams p = random_model(rng, 2, 2);
        for (int n = 3; n <= 4; ++n) {
            Predictor avg = [](std::span<const int> x) {
                return optimal_hmm_predictor(2, 2, x);
            };
            double risk = exact_prediction_risk(p, avg, n);
            MarginalAssignment q(2, 2);
            double budget = (expected_redundancy_exact(p, q, n + 1) + latent_info(p, n + 1)) /
                            static_cast<double>(n);
            CHECK(risk <= budget + 1e-9);
        }
    }
}

TEST_CASE("maximized-likelihood totals: memoryless class") {
    CHECK(close(shtarkov_sum_iid(2, 1), std::log(2.0), 1e-12));
    CHECK(close(shtarkov_sum_iid(2, 2), std::log(2.5), 1e-12));
    for (int l = 2; l <= 3; ++l) {
        for (int m = 1; m <= 7; ++m) {
            double brute = 0.0;
            for (auto& x : all_sequences(l, m)) {
                std::vector<int> c(l, 0);
                for (int s : x) ++c[s];
                double sup = 1.0;
                for (int j = 0; j < l; ++j)
                    if (c[j] > 0)
                        sup *= std::pow(static_cast<double>(c[j]) / m, static_cast<double>(c[j]));
                brute += sup;
            }
            CHECK(close(shtarkov_sum_iid(l, m), std::log(brute), 1e-9));
        }
    }
}

TEST_CASE("maximized-likelihood totals: one-step chain class") {
    CHECK(close(shtarkov_sum_markov1(2, 1), std::log(2.0), 1e-12));
    CHECK(close(shtarkov_sum_markov1(2, 2), std::log(4.0), 1e-12));
    for (int m = 2; m <= 6; ++m) {
        double brute = 0.0;
        for (auto& x : all_sequences(2, m)) {
            long c[2][2] = {{0, 0}, {0, 0}};
            for (size_t t = 0; t + 1 < x.size(); ++t) ++c[x[t]][x[t + 1]];
            double sup = 1.0;  // initial-symbol probability maximized at 1
            for (int i = 0; i < 2; ++i) {
                long row = c[i][0] + c[i][1];
                for (int j = 0; j < 2; ++j)
                    if (c[i][j] > 0)
                        sup *= std::pow(static_cast<double>(c[i][j]) / row,
                                        static_cast<double>(c[i][j]));
            }
            brute += sup;
        }
        CHECK(close(shtarkov_sum_markov1(2, m), std::log(brute), 1e-9));
    }
}

TEST_CASE("maximized-likelihood totals: renewal class pins and growth") {
    CHECK(close(shtarkov_sum_renewal(3, 1), std::log(5.0 / 3.0), 1e-6));
    CHECK(close(shtarkov_sum_renewal(3, 2), std::log(7.0 / 3.0), 1e-6));
    double prev = kNegInf;
    for (int m = 1; m <= 8; ++m) {
        double v = shtarkov_sum_renewal(3, m);
        CHECK(v >= prev - 1e-9);  // richer horizons only add maximized mass
        prev = v;
    }
}
