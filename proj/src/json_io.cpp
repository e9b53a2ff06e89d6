#include "seqpred/json_io.hpp"

#include <cmath>
#include <fstream>

namespace seqpred {

namespace {

// Applies the file-format row policy before the stricter model constructors:
// reject sums off by more than 1e-6, renormalize smaller deviations.
std::vector<double> flatten_rows(const Json& rows, int expect_rows, int expect_cols,
                                 const char* what) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != expect_rows)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(expect_rows) +
                          " rows");
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(expect_rows) * expect_cols);
    for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != expect_cols)
            throw ConfigError(std::string(what) + ": expected " + std::to_string(expect_cols) +
                              " entries per row");
        double sum = 0.0;
        std::vector<double> vals;
        for (const auto& v : row) {
            if (!v.is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
            vals.push_back(v.get<double>());
            sum += vals.back();
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ConfigError(std::string(what) + ": row sums to " + std::to_string(sum) +
                              ", beyond tolerance 1e-6");
        for (double v : vals) flat.push_back(v / sum);
    }
    return flat;
}

}  // namespace

HmmParams hmm_from_json(const Json& j) {
    if (!j.contains("k") || !j.contains("l") || !j.contains("trans") || !j.contains("emit"))
        throw ConfigError("hmm model: need k, l, trans, emit");
    int k = j.at("k").get<int>();
    int l = j.at("l").get<int>();
    if (k < 1 || l < 1) throw ConfigError("hmm model: k and l must be >= 1");
    return make_hmm(k, l, flatten_rows(j.at("trans"), k, k, "trans"),
                    flatten_rows(j.at("emit"), k, l, "emit"));
}

RenewalLaw renewal_from_json(const Json& j) {
    if (!j.contains("mu") || !j.at("mu").is_array() || j.at("mu").empty())
        throw ConfigError("renewal model: need a nonempty mu array");
    std::vector<double> mu;
    double sum = 0.0;
    for (const auto& v : j.at("mu")) {
        if (!v.is_number()) throw ConfigError("renewal model: non-numeric mu entry");
        mu.push_back(v.get<double>());
        sum += mu.back();
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ConfigError("renewal model: mu sums to " + std::to_string(sum) +
                          ", beyond tolerance 1e-6");
    for (double& v : mu) v /= sum;
    return make_renewal(std::move(mu));
}

std::variant<HmmParams, RenewalLaw> model_from_json(const Json& j) {
    if (j.contains("mu")) return renewal_from_json(j);
    return hmm_from_json(j);
}

Json hmm_to_json(const HmmParams& p) {
    Json j;
    j["k"] = p.k;
    j["l"] = p.l;
    Json trans = Json::array(), emit = Json::array();
    for (int i = 0; i < p.k; ++i) {
        Json row = Json::array();
        for (int c = 0; c < p.k; ++c) row.push_back(p.t(i, c));
        trans.push_back(row);
    }
    for (int i = 0; i < p.k; ++i) {
        Json row = Json::array();
        for (int c = 0; c < p.l; ++c) row.push_back(p.e(i, c));
        emit.push_back(row);
    }
    j["trans"] = trans;
    j["emit"] = emit;
    return j;
}

Json renewal_to_json(const RenewalLaw& law) {
    Json j;
    j["mu"] = law.mu;
    return j;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

PredictorSpec predictor_spec_from_json(const Json& j) {
    PredictorSpec spec;
    if (j.is_string()) {
        spec.kind = j.get<std::string>();
        if (spec.kind == "renewal-hazard") spec.kind = "renewal-empirical-hazard";
        return spec;
    }
    if (!j.contains("kind")) throw ConfigError("predictor spec: need kind");
    spec.kind = j.at("kind").get<std::string>();
    if (spec.kind == "renewal-hazard") spec.kind = "renewal-empirical-hazard";
    spec.k = j.value("k", 0);
    spec.l = j.value("l", 0);
    spec.order = j.value("order", -1);
    spec.floor_exp = j.value("floor_exp", 1.0);
    spec.support_bound = j.value("support_bound", 0);
    spec.horizon_cap = j.value("horizon_cap", 12);
    return spec;
}

ModelFamilyConfig model_family_from_json(const Json& j) {
    ModelFamilyConfig fam;
    fam.type = j.value("type", "hmm");
    if (fam.type != "hmm" && fam.type != "renewal")
        throw ConfigError("model family: type must be hmm or renewal");
    fam.k = j.value("k", 2);
    fam.l = j.value("l", 2);
    fam.support_bound = j.value("support_bound", 2);
    if (j.contains("source")) {
        const Json& src = j.at("source");
        fam.source = src.value("type", "random");
        fam.count = src.value("count", 1);
        fam.seed = src.value("seed", 0ULL);
        if (src.contains("paths")) fam.paths = src.at("paths").get<std::vector<std::string>>();
    }
    if (fam.source != "random" && fam.source != "file")
        throw ConfigError("model family: source must be random or file");
    if (fam.source == "file" && fam.paths.empty())
        throw ConfigError("model family: file source needs paths");
    if (fam.source == "random" && fam.count < 1)
        throw ConfigError("model family: count must be >= 1");
    return fam;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig cfg;
    if (!j.contains("model_family")) throw ConfigError("config: need model_family");
    cfg.family = model_family_from_json(j.at("model_family"));
    if (!j.contains("predictors") || !j.at("predictors").is_array() || j.at("predictors").empty())
        throw ConfigError("config: need a nonempty predictors array");
    for (const auto& p : j.at("predictors")) cfg.predictors.push_back(predictor_spec_from_json(p));
    if (!j.contains("n_grid") || !j.at("n_grid").is_array() || j.at("n_grid").empty())
        throw ConfigError("config: need a nonempty n_grid");
    for (const auto& n : j.at("n_grid")) {
        int v = n.get<int>();
        if (v < 1) throw ConfigError("config: n_grid entries must be >= 1");
        cfg.n_grid.push_back(v);
    }
    cfg.trials = j.value("trials", 100000L);
    if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
    cfg.master_seed = j.value("master_seed", 0ULL);
    cfg.mode = j.value("mode", "montecarlo");
    if (cfg.mode != "montecarlo" && cfg.mode != "exact")
        throw ConfigError("config: mode must be montecarlo or exact");
    cfg.output_path = j.value("output_path", "");
    cfg.format = j.value("format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError("config: format must be csv or json");
    cfg.threads = j.value("threads", 1);
    if (cfg.threads < 1) throw ConfigError("config: threads must be >= 1");
    cfg.budget = j.value("budget", kDefaultBudget);
    cfg.cap = j.value("cap", kDefaultExactCap);
    return cfg;
}

}  // namespace seqpred
