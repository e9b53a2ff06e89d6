#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "seqpred/bench.hpp"
#include "seqpred/json_io.hpp"
#include "seqpred/numerics.hpp"
#include "seqpred/rng.hpp"

namespace {

using namespace seqpred;

constexpr double kNatsToBits = 1.4426950408889634;  // 1 / ln 2

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format;  // empty = config / default
    uint64_t seed = 0;
    bool seed_given = false;
    bool bits = false;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool with_bits) {
    sub->add_option("--config", opts.config_path, "JSON config file")->required();
    sub->add_option("--seed", opts.seed, "Override the config's seed");
    sub->add_option("--out", opts.out_path, "Write output here instead of stdout");
    sub->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    if (with_bits) sub->add_flag("--bits", opts.bits, "Report bits instead of nats");
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << text;
}

std::string pick_format(const CommonOpts& opts, const std::string& fallback) {
    return opts.format.empty() ? fallback : opts.format;
}

// Model may be inline or {"path": "model.json"}.
std::pair<std::string, std::variant<HmmParams, RenewalLaw>> resolve_model(const Json& j) {
    if (j.contains("path")) {
        std::string path = j.at("path").get<std::string>();
        std::string id = path;
        size_t slash = id.find_last_of('/');
        if (slash != std::string::npos) id = id.substr(slash + 1);
        size_t dot = id.find_last_of('.');
        if (dot != std::string::npos) id = id.substr(0, dot);
        return {id, model_from_json(load_json_file(path))};
    }
    return {"model", model_from_json(j)};
}

ModelInstance to_instance(const std::string& id,
                          const std::variant<HmmParams, RenewalLaw>& model) {
    ModelInstance mi;
    mi.id = id;
    if (std::holds_alternative<HmmParams>(model)) {
        mi.is_hmm = true;
        mi.hmm = std::get<HmmParams>(model);
    } else {
        mi.is_hmm = false;
        mi.law = std::get<RenewalLaw>(model);
        mi.hmm = renewal_as_hmm(mi.law);
    }
    return mi;
}

int cmd_simulate(const CommonOpts& opts) {
    Json cfg = load_json_file(opts.config_path);
    if (!cfg.contains("model")) throw ConfigError("simulate: config needs model");
    auto [id, model] = resolve_model(cfg.at("model"));
    int n = cfg.at("n").get<int>();
    if (n < 1) throw ConfigError("simulate: n must be >= 1");
    int count = cfg.value("count", 1);
    uint64_t seed = opts.seed_given ? opts.seed : cfg.value("seed", 0ULL);

    bool is_hmm = std::holds_alternative<HmmParams>(model);
    std::string format = pick_format(opts, cfg.value("format", "csv"));
    std::ostringstream out;
    Json paths = Json::array();
    for (int i = 0; i < count; ++i) {
        uint64_t s = derive_seed(seed, static_cast<uint64_t>(i));
        SymbolSequence x;
        StatePath z;
        if (is_hmm)
            std::tie(x, z) = sample_hmm_path(std::get<HmmParams>(model), n, s);
        else
            x = sample_renewal_path(std::get<RenewalLaw>(model), n, s);
        if (format == "csv") {
            for (int t = 0; t < n; ++t)
                out << id << ',' << i << ',' << t << ',' << x[t] << '\n';
        } else {
            Json rec;
            rec["model_id"] = id;
            rec["path_id"] = i;
            rec["symbols"] = x;
            if (is_hmm) rec["states"] = z;
            paths.push_back(std::move(rec));
        }
    }
    if (format == "csv")
        write_out(opts.out_path, "model_id,path_id,t,symbol\n" + out.str());
    else
        write_out(opts.out_path, Json{{"paths", paths}}.dump(2) + "\n");
    return 0;
}

int cmd_predict(const CommonOpts& opts) {
    Json cfg = load_json_file(opts.config_path);
    if (!cfg.contains("predictor")) throw ConfigError("predict: config needs predictor");
    PredictorSpec spec = predictor_spec_from_json(cfg.at("predictor"));
    std::vector<int> x;
    if (cfg.contains("sequence")) x = cfg.at("sequence").get<std::vector<int>>();
    double budget = cfg.value("budget", kDefaultBudget);

    ModelInstance mi;
    if (cfg.contains("model")) {
        auto [id, model] = resolve_model(cfg.at("model"));
        mi = to_instance(id, model);
    } else {
        if (spec.kind == "oracle")
            throw ConfigError("predict: the oracle predictor needs a model");
        if (spec.kind == "optimal-hmm" && (spec.k <= 0 || spec.l <= 0))
            throw ConfigError("predict: optimal-hmm without a model needs k and l");
        if (spec.kind == "markov-approx" && spec.l <= 0)
            throw ConfigError("predict: markov-approx without a model needs l");
        if (spec.kind == "renewal-nml" && spec.support_bound <= 0)
            throw ConfigError("predict: renewal-nml without a model needs support_bound");
        mi.id = "none";
        mi.hmm.k = spec.k;
        mi.hmm.l = spec.l;
    }
    PredictiveDist dist = make_predictor(spec, mi, budget)(x);

    std::string format = pick_format(opts, "json");
    if (format == "csv") {
        std::ostringstream out;
        out << "symbol,prob\n";
        for (int j = 0; j < dist.alphabet(); ++j)
            out << j << ',' << format_double(dist[j]) << '\n';
        write_out(opts.out_path, out.str());
    } else {
        Json j;
        j["predictor"] = spec.label();
        j["probs"] = dist.probs;
        write_out(opts.out_path, j.dump(2) + "\n");
    }
    return 0;
}

int finish_sweep(const std::vector<RiskRecord>& records, const ExperimentConfig& cfg) {
    std::ostringstream out;
    emit_report(records, out, cfg.format);
    write_out(cfg.output_path, out.str());
    return all_budget_failed(records) ? 3 : 0;
}

int cmd_risk_sweep(const CommonOpts& opts) {
    ExperimentConfig cfg = experiment_config_from_json(load_json_file(opts.config_path));
    if (opts.seed_given) cfg.master_seed = opts.seed;
    if (!opts.out_path.empty()) cfg.output_path = opts.out_path;
    if (!opts.format.empty()) cfg.format = opts.format;
    return finish_sweep(run_risk_sweep(cfg), cfg);
}

int cmd_worst_case(const CommonOpts& opts) {
    Json raw = load_json_file(opts.config_path);
    ExperimentConfig cfg = experiment_config_from_json(raw);
    if (opts.seed_given) cfg.master_seed = opts.seed;
    if (!opts.out_path.empty()) cfg.output_path = opts.out_path;
    if (!opts.format.empty()) cfg.format = opts.format;
    long budget = raw.value("search_budget", 200L);
    WorstCaseResult result = run_worstcase_search(cfg, budget);

    if (cfg.format == "csv") {
        std::ostringstream out;
        emit_report({result.best}, out, "csv");
        write_out(cfg.output_path, out.str());
        return 0;
    }
    Json j;
    j["risk_nats"] = result.best.risk_nats;
    j["predictor"] = result.best.predictor;
    j["n"] = result.best.n;
    j["trials"] = result.best.trials;
    j["evaluations"] = result.evaluations;
    j["bound_character"] = "max-found";  // a search lower bound, not a certificate
    j["model"] = hmm_to_json(result.argmax);
    write_out(cfg.output_path, j.dump(2) + "\n");
    return 0;
}

int cmd_redundancy(const CommonOpts& opts) {
    Json cfg = load_json_file(opts.config_path);
    if (!cfg.contains("model")) throw ConfigError("redundancy: config needs model");
    auto [id, model] = resolve_model(cfg.at("model"));
    ModelInstance mi = to_instance(id, model);
    int m = cfg.at("m").get<int>();
    if (m < 1) throw ConfigError("redundancy: m must be >= 1");
    double budget = cfg.value("budget", kDefaultBudget);
    double cap = cfg.value("cap", kDefaultExactCap);

    Json aj = cfg.value("assignment", Json{{"kind", "marginal"}});
    std::string kind = aj.value("kind", "marginal");
    std::unique_ptr<Assignment> q;
    if (kind == "marginal") {
        q = std::make_unique<MarginalAssignment>(mi.hmm.k, mi.hmm.l, budget);
    } else if (kind == "addone-iid") {
        q = make_markov_assignment(0, mi.hmm.l);
    } else if (kind == "addone-markov") {
        int order = aj.value("order", -1);
        if (order < 0) order = markov_auto_order(mi.hmm.l, static_cast<size_t>(m));
        q = make_markov_assignment(order, mi.hmm.l);
    } else {
        throw ConfigError("redundancy: unknown assignment kind " + kind);
    }

    std::string mode = cfg.value("mode", "exact");
    ValueCi v;
    if (mode == "exact") {
        v.value = expected_redundancy_exact(mi.hmm, *q, m, cap);
        v.lo = v.hi = v.value;
        v.trials = 0;
    } else if (mode == "montecarlo") {
        long trials = cfg.value("trials", 100000L);
        uint64_t seed = opts.seed_given ? opts.seed : cfg.value("seed", 0ULL);
        v = expected_redundancy_mc(mi.hmm, *q, m, trials, seed);
    } else {
        throw ConfigError("redundancy: mode must be exact or montecarlo");
    }
    double scale = opts.bits ? kNatsToBits : 1.0;
    std::string unit = opts.bits ? "bits" : "nats";

    if (pick_format(opts, "json") == "csv") {
        std::ostringstream out;
        out << "quantity,value,ci_low,ci_high,trials\n";
        out << "redundancy_" << unit << ',' << format_double(v.value * scale) << ','
            << format_double(v.lo * scale) << ',' << format_double(v.hi * scale) << ','
            << v.trials << '\n';
        write_out(opts.out_path, out.str());
    } else {
        Json j;
        j["model_id"] = mi.id;
        j["assignment"] = kind;
        j["m"] = m;
        j["unit"] = unit;
        j["value"] = v.value * scale;
        j["ci_low"] = v.lo * scale;
        j["ci_high"] = v.hi * scale;
        j["trials"] = v.trials;
        write_out(opts.out_path, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_memory(const CommonOpts& opts) {
    Json cfg = load_json_file(opts.config_path);
    if (!cfg.contains("model")) throw ConfigError("memory: config needs model");
    auto [id, model] = resolve_model(cfg.at("model"));
    ModelInstance mi = to_instance(id, model);
    int n = cfg.at("n").get<int>();
    double cap = cfg.value("cap", kDefaultExactCap);
    MemoryDecomposition dec = memory_term(mi.hmm, n, cap);
    double latent = latent_info(mi.hmm, n + 1, cap);
    double scale = opts.bits ? kNatsToBits : 1.0;
    std::string unit = opts.bits ? "bits" : "nats";

    if (pick_format(opts, "json") == "csv") {
        std::ostringstream out;
        out << "quantity,lag,value_" << unit << "\n";
        for (int t = 1; t <= n; ++t)
            out << "conditional_memory," << t << ',' << format_double(dec.per_lag[t - 1] * scale)
                << '\n';
        out << "memory_sum,," << format_double(dec.sum * scale) << '\n';
        out << "latent_info,," << format_double(latent * scale) << '\n';
        write_out(opts.out_path, out.str());
    } else {
        Json j;
        j["model_id"] = mi.id;
        j["n"] = n;
        j["unit"] = unit;
        Json lags = Json::array();
        for (double v : dec.per_lag) lags.push_back(v * scale);
        j["per_lag"] = lags;
        j["sum"] = dec.sum * scale;
        j["latent_info"] = latent * scale;
        write_out(opts.out_path, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_shtarkov(const CommonOpts& opts) {
    Json cfg = load_json_file(opts.config_path);
    std::string cls = cfg.at("class").get<std::string>();
    std::vector<int> grid = cfg.at("m_grid").get<std::vector<int>>();
    if (grid.empty()) throw ConfigError("shtarkov: m_grid must be nonempty");
    double cap = cfg.value("cap", kDefaultExactCap);
    double scale = opts.bits ? kNatsToBits : 1.0;
    std::string unit = opts.bits ? "bits" : "nats";

    std::vector<std::pair<int, double>> rows;
    for (int m : grid) {
        double v;
        if (cls == "iid")
            v = shtarkov_sum_iid(cfg.value("l", 2), m);
        else if (cls == "markov1")
            v = shtarkov_sum_markov1(cfg.value("l", 2), m, cap);
        else if (cls == "renewal")
            v = shtarkov_sum_renewal(cfg.value("support_bound", 2), m, cap);
        else
            throw ConfigError("shtarkov: class must be iid, markov1 or renewal");
        rows.emplace_back(m, v * scale);
    }

    if (pick_format(opts, "csv") == "csv") {
        std::ostringstream out;
        out << "class,m,log_shtarkov_" << unit << "\n";
        for (auto [m, v] : rows) out << cls << ',' << m << ',' << format_double(v) << '\n';
        write_out(opts.out_path, out.str());
    } else {
        Json arr = Json::array();
        for (auto [m, v] : rows) arr.push_back(Json{{"class", cls}, {"m", m}, {"value", v}});
        write_out(opts.out_path, Json{{"unit", unit}, {"values", arr}}.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-state sequence prediction laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* sim = app.add_subcommand("simulate", "Sample paths from a model");
    add_common(sim, opts, false);
    auto* pred = app.add_subcommand("predict", "Next-symbol distribution for a sequence");
    add_common(pred, opts, false);
    auto* sweep = app.add_subcommand("risk-sweep", "Prediction risk across models and horizons");
    add_common(sweep, opts, false);
    auto* worst = app.add_subcommand("worst-case", "Search for a high-risk model");
    add_common(worst, opts, false);
    auto* red = app.add_subcommand("redundancy", "Expected compression redundancy");
    add_common(red, opts, true);
    auto* mem = app.add_subcommand("memory", "Memory decomposition and latent information");
    add_common(mem, opts, true);
    auto* sht = app.add_subcommand("shtarkov", "Normalized maximum likelihood sums");
    add_common(sht, opts, true);

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    opts.seed_given = sub->count("--seed") > 0;

    try {
        if (sub == sim) return cmd_simulate(opts);
        if (sub == pred) return cmd_predict(opts);
        if (sub == sweep) return cmd_risk_sweep(opts);
        if (sub == worst) return cmd_worst_case(opts);
        if (sub == red) return cmd_redundancy(opts);
        if (sub == mem) return cmd_memory(opts);
        if (sub == sht) return cmd_shtarkov(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetExceededError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 3;
    } catch (const CapExceededError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
