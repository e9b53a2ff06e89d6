#include "seqpred/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include "seqpred/json_io.hpp"
#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace seqpred {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string basename_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    std::string name = (slash == std::string::npos) ? path : path.substr(slash + 1);
    size_t dot = name.find_last_of('.');
    return (dot == std::string::npos) ? name : name.substr(0, dot);
}

HmmParams random_hmm(int k, int l, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> trans, emit;
    for (int i = 0; i < k; ++i) {
        auto row = rng.simplex(k);
        trans.insert(trans.end(), row.begin(), row.end());
    }
    for (int i = 0; i < k; ++i) {
        auto row = rng.simplex(l);
        emit.insert(emit.end(), row.begin(), row.end());
    }
    return make_hmm(k, l, std::move(trans), std::move(emit));
}

RenewalLaw random_renewal(int s, uint64_t seed) {
    Rng rng(seed);
    return make_renewal(rng.simplex(s));
}

// KL(oracle || guess) over one next-symbol pair; +inf when the guess misses
// support (kept, so broken predictors surface in the estimates).
double next_symbol_kl(const PredictiveDist& oracle, const PredictiveDist& guess) {
    double kl = 0.0;
    for (int j = 0; j < oracle.alphabet(); ++j) {
        if (oracle[j] <= 0.0) continue;
        kl += oracle[j] * (std::log(oracle[j]) - std::log(guess[j]));
    }
    return kl;
}

}  // namespace

std::string PredictorSpec::label() const {
    if (kind == "markov-approx" && order >= 0) return kind + "-d" + std::to_string(order);
    return kind;
}

std::vector<ModelInstance> expand_family(const ModelFamilyConfig& family) {
    std::vector<ModelInstance> models;
    if (family.source == "random") {
        for (int i = 0; i < family.count; ++i) {
            ModelInstance mi;
            uint64_t seed = derive_seed(family.seed, 0x6d6f64656cULL, static_cast<uint64_t>(i));
            if (family.type == "hmm") {
                mi.id = "hmm-" + std::to_string(i);
                mi.is_hmm = true;
                mi.hmm = random_hmm(family.k, family.l, seed);
            } else {
                mi.id = "renewal-" + std::to_string(i);
                mi.is_hmm = false;
                mi.law = random_renewal(family.support_bound, seed);
                mi.hmm = renewal_as_hmm(mi.law);
            }
            models.push_back(std::move(mi));
        }
        return models;
    }
    for (const std::string& path : family.paths) {
        ModelInstance mi;
        mi.id = basename_of(path);
        auto parsed = model_from_json(load_json_file(path));
        if (std::holds_alternative<HmmParams>(parsed)) {
            mi.is_hmm = true;
            mi.hmm = std::get<HmmParams>(parsed);
        } else {
            mi.is_hmm = false;
            mi.law = std::get<RenewalLaw>(parsed);
            mi.hmm = renewal_as_hmm(mi.law);
        }
        models.push_back(std::move(mi));
    }
    return models;
}

Predictor make_predictor(const PredictorSpec& spec, const ModelInstance& model, double budget) {
    if (spec.kind == "oracle") {
        if (model.is_hmm) {
            HmmParams p = model.hmm;
            return [p](std::span<const int> x) { return hmm_oracle_predictive(p, x); };
        }
        RenewalLaw law = model.law;
        return [law](std::span<const int> x) { return renewal_hazard_predictive(law, x); };
    }
    if (spec.kind == "optimal-hmm") {
        int k = spec.k > 0 ? spec.k : model.hmm.k;
        int l = spec.l > 0 ? spec.l : model.hmm.l;
        return [k, l, budget](std::span<const int> x) {
            return optimal_hmm_predictor(k, l, x, budget);
        };
    }
    if (spec.kind == "markov-approx") {
        int l = spec.l > 0 ? spec.l : model.hmm.l;
        int order = spec.order;
        return [l, order](std::span<const int> x) { return markov_approx_predictor(l, x, order); };
    }
    if (spec.kind == "renewal-empirical-hazard" || spec.kind == "renewal-hazard") {
        double fe = spec.floor_exp;
        return [fe](std::span<const int> x) { return renewal_empirical_hazard_predictor(x, fe); };
    }
    if (spec.kind == "renewal-nml") {
        int s = spec.support_bound;
        if (s <= 0 && !model.is_hmm) s = model.law.support();
        if (s <= 0) throw ConfigError("renewal-nml predictor needs a support bound");
        auto shared = std::make_shared<RenewalNmlPredictor>(s, spec.horizon_cap);
        return [shared](std::span<const int> x) { return shared->predict(x); };
    }
    throw ConfigError("unknown predictor kind: " + spec.kind);
}

std::vector<RiskRecord> run_risk_sweep(const ExperimentConfig& cfg) {
    std::vector<ModelInstance> models = expand_family(cfg.family);
    bool exact = (cfg.mode == "exact");

    struct Cell {
        size_t model;
        size_t pred;
        int n;
    };
    std::vector<Cell> cells;
    std::vector<RiskRecord> records;
    for (size_t m = 0; m < models.size(); ++m)
        for (size_t p = 0; p < cfg.predictors.size(); ++p)
            for (int n : cfg.n_grid) {
                cells.push_back({m, p, n});
                RiskRecord rec;
                rec.model_id = models[m].id;
                rec.predictor = cfg.predictors[p].label();
                rec.n = n;
                records.push_back(std::move(rec));
            }

    std::vector<Predictor> preds(cells.size()), oracles(cells.size());
    for (size_t r = 0; r < cells.size(); ++r) {
        const ModelInstance& model = models[cells[r].model];
        preds[r] = make_predictor(cfg.predictors[cells[r].pred], model, cfg.budget);
        PredictorSpec oracle_spec;
        oracle_spec.kind = "oracle";
        oracles[r] = make_predictor(oracle_spec, model, cfg.budget);
    }

    struct Work {
        size_t record;
        long begin;  // trial range; [-1, -1] = exact evaluation
        long end;
    };
    std::vector<Work> works;
    std::vector<std::vector<double>> samples(records.size());
    constexpr long kChunk = 512;
    for (size_t r = 0; r < records.size(); ++r) {
        if (exact) {
            works.push_back({r, -1, -1});
            continue;
        }
        samples[r].assign(cfg.trials, 0.0);
        for (long b = 0; b < cfg.trials; b += kChunk)
            works.push_back({r, b, std::min(cfg.trials, b + kChunk)});
    }

    std::vector<std::pair<RecordError, std::string>> werr(works.size(),
                                                          {RecordError::none, ""});
    std::vector<double> wdur(works.size(), 0.0);

    auto run_work = [&](size_t w) {
        const Work& work = works[w];
        size_t r = work.record;
        const Cell& cell = cells[r];
        const ModelInstance& model = models[cell.model];
        Clock::time_point t0 = Clock::now();
        try {
            if (work.begin < 0) {
                double risk = exact_prediction_risk(model.hmm, preds[r], cell.n, cfg.cap);
                records[r].risk_nats = risk;
                records[r].ci_low = risk;
                records[r].ci_high = risk;
                records[r].trials = 0;
            } else {
                for (long i = work.begin; i < work.end; ++i) {
                    uint64_t seed =
                        derive_seed(cfg.master_seed, static_cast<uint64_t>(r), static_cast<uint64_t>(i));
                    SymbolSequence x = model.is_hmm
                                           ? sample_hmm_path(model.hmm, cell.n, seed).first
                                           : sample_renewal_path(model.law, cell.n, seed);
                    samples[r][i] = next_symbol_kl(oracles[r](x), preds[r](x));
                }
            }
        } catch (const BudgetExceededError& e) {
            werr[w] = {RecordError::budget, e.what()};
        } catch (const CapExceededError& e) {
            werr[w] = {RecordError::budget, e.what()};
        } catch (const std::exception& e) {
            werr[w] = {RecordError::other, e.what()};
        }
        wdur[w] = ms_since(t0);
    };

    int nthreads = std::min<int>(cfg.threads, static_cast<int>(works.size()));
    if (nthreads <= 1) {
        for (size_t w = 0; w < works.size(); ++w) run_work(w);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&]() {
                while (true) {
                    size_t w = next.fetch_add(1);
                    if (w >= works.size()) break;
                    run_work(w);
                }
            });
        for (auto& th : pool) th.join();
    }

    // Fixed-order reduction keeps output independent of scheduling.
    for (size_t w = 0; w < works.size(); ++w) {
        size_t r = works[w].record;
        records[r].wall_ms += wdur[w];
        if (werr[w].first != RecordError::none && records[r].error_kind == RecordError::none) {
            records[r].error_kind = werr[w].first;
            records[r].error = werr[w].second;
        }
    }
    for (size_t r = 0; r < records.size(); ++r) {
        RiskRecord& rec = records[r];
        if (rec.error_kind != RecordError::none) {
            rec.risk_nats = rec.ci_low = rec.ci_high = std::nan("");
            rec.n_times_risk = std::nan("");
            rec.trials = 0;
            continue;
        }
        if (!exact) {
            MeanCi ci = mean_ci95(samples[r]);
            rec.risk_nats = ci.mean;
            rec.ci_low = ci.lo;
            rec.ci_high = ci.hi;
            rec.trials = cfg.trials;
        }
        rec.n_times_risk = rec.risk_nats * rec.n;
    }
    return records;
}

WorstCaseResult run_worstcase_search(const ExperimentConfig& cfg, long search_budget) {
    if (cfg.family.type != "hmm")
        throw ConfigError("worst-case search runs over hmm families");
    if (search_budget < 1) throw ConfigError("worst-case search: budget must be >= 1");
    const PredictorSpec& spec = cfg.predictors.at(0);
    int n = cfg.n_grid.at(0);
    int k = cfg.family.k, l = cfg.family.l;

    long evals = 0;
    auto objective = [&](const HmmParams& h) {
        ModelInstance mi;
        mi.id = "candidate";
        mi.is_hmm = true;
        mi.hmm = h;
        Predictor pred = make_predictor(spec, mi, cfg.budget);
        if (cfg.mode == "exact") return exact_prediction_risk(h, pred, n, cfg.cap);
        Predictor oracle = [&h](std::span<const int> x) { return hmm_oracle_predictive(h, x); };
        double acc = 0.0;
        for (long i = 0; i < cfg.trials; ++i) {
            uint64_t seed = derive_seed(cfg.master_seed, 0x736561726368ULL,
                                        static_cast<uint64_t>(evals), static_cast<uint64_t>(i));
            SymbolSequence x = sample_hmm_path(h, n, seed).first;
            acc += next_symbol_kl(oracle(x), pred(x));
        }
        return acc / static_cast<double>(cfg.trials);
    };

    Rng rng(derive_seed(cfg.master_seed, 0x68696c6cULL));
    double best = -1.0;
    HmmParams best_model;
    while (evals < search_budget) {
        HmmParams cur = random_hmm(k, l, rng.bits());
        double f = objective(cur);
        ++evals;
        int stale = 0;
        while (evals < search_budget && stale < 2 * (k * k + k * l)) {
            // One coordinate move: push mass toward one entry of one row.
            HmmParams cand = cur;
            bool on_trans = rng.uniform() < 0.5;
            int row = static_cast<int>(rng.uniform() * k);
            int width = on_trans ? k : l;
            int col = static_cast<int>(rng.uniform() * width);
            double delta = 0.3 * std::pow(0.5, static_cast<double>(stale) / 4.0);
            std::vector<double>& mat = on_trans ? cand.trans : cand.emit;
            double* r0 = &mat[static_cast<size_t>(row) * width];
            r0[col] += delta;
            double sum = 0.0;
            for (int j = 0; j < width; ++j) sum += r0[j];
            for (int j = 0; j < width; ++j) r0[j] /= sum;
            cand = make_hmm(k, l, cand.trans, cand.emit);  // refresh stationary law
            double fc = objective(cand);
            ++evals;
            if (fc > f) {
                cur = std::move(cand);
                f = fc;
                stale = 0;
            } else {
                ++stale;
            }
        }
        if (f > best) {
            best = f;
            best_model = cur;
        }
    }

    WorstCaseResult out;
    out.argmax = best_model;
    out.evaluations = evals;
    out.best.model_id = "worst-found";
    out.best.predictor = spec.label();
    out.best.n = n;
    out.best.risk_nats = best;
    out.best.ci_low = best;
    out.best.ci_high = best;
    out.best.trials = (cfg.mode == "exact") ? 0 : cfg.trials;
    out.best.n_times_risk = best * n;
    return out;
}

void emit_report(const std::vector<RiskRecord>& records, std::ostream& out,
                 const std::string& format) {
    if (records.empty()) throw ConfigError("emit: no records to report");
    if (format == "csv") {
        out << "model_id,predictor,n,risk_nats,ci_low,ci_high,trials,wall_ms,n_times_risk\n";
        for (const RiskRecord& r : records)
            out << r.model_id << ',' << r.predictor << ',' << r.n << ','
                << format_double(r.risk_nats) << ',' << format_double(r.ci_low) << ','
                << format_double(r.ci_high) << ',' << r.trials << ','
                << format_double(r.wall_ms) << ',' << format_double(r.n_times_risk) << '\n';
        return;
    }
    if (format != "json") throw ConfigError("emit: format must be csv or json");
    Json arr = Json::array();
    for (const RiskRecord& r : records) {
        Json j;
        j["model_id"] = r.model_id;
        j["predictor"] = r.predictor;
        j["n"] = r.n;
        j["risk_nats"] = r.risk_nats;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
        j["trials"] = r.trials;
        j["wall_ms"] = r.wall_ms;
        j["n_times_risk"] = r.n_times_risk;
        if (!r.error.empty()) j["error"] = r.error;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

bool all_budget_failed(const std::vector<RiskRecord>& records) {
    if (records.empty()) return false;
    for (const RiskRecord& r : records)
        if (r.error_kind != RecordError::budget) return false;
    return true;
}

}  // namespace seqpred
