#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seqpred/bench.hpp"
#include "seqpred/infolab.hpp"
#include "seqpred/json_io.hpp"
#include "seqpred/models.hpp"
#include "seqpred/predictor.hpp"
#include "seqpred/rng.hpp"

using namespace seqpred;

namespace {

bool close(double a, double b, double tol = 1e-9) {
    if (a == b) return true;
    return std::fabs(a - b) <= tol;
}

// Drops the wall_ms column (index 7) from every CSV line.
std::string strip_timing(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string field;
        int idx = 0;
        bool first = true;
        while (std::getline(fields, field, ',')) {
            if (idx++ == 7) continue;
            out << (first ? "" : ",") << field;
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

ExperimentConfig small_exact_config() {
    ExperimentConfig cfg;
    cfg.family.type = "hmm";
    cfg.family.k = 2;
    cfg.family.l = 2;
    cfg.family.source = "random";
    cfg.family.count = 1;
    cfg.family.seed = 42;
    PredictorSpec oracle;
    oracle.kind = "oracle";
    PredictorSpec markov;
    markov.kind = "markov-approx";
    markov.order = 1;
    cfg.predictors = {oracle, markov};
    cfg.n_grid = {3, 4};
    cfg.mode = "exact";
    return cfg;
}

struct TempFile {
    std::string path;
    TempFile(const std::string& p, const std::string& contents) : path(p) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("predictor labels") {
    PredictorSpec s;
    s.kind = "markov-approx";
    CHECK(s.label() == "markov-approx");
    s.order = 2;
    CHECK(s.label() == "markov-approx-d2");
    s.kind = "renewal-nml";
    CHECK(s.label() == "renewal-nml");
}

TEST_CASE("family expansion: determinism and seed sensitivity") {
    ModelFamilyConfig fam;
    fam.type = "hmm";
    fam.k = 2;
    fam.l = 2;
    fam.source = "random";
    fam.count = 3;
    fam.seed = 7;
    auto a = expand_family(fam);
    auto b = expand_family(fam);
    REQUIRE(a.size() == 3);
    CHECK(a[0].id == "hmm-0");
    CHECK(a[2].id == "hmm-2");
    for (size_t i = 0; i < 3; ++i) {
        CHECK(a[i].is_hmm);
        CHECK(a[i].hmm.trans == b[i].hmm.trans);
        CHECK(a[i].hmm.emit == b[i].hmm.emit);
    }
    fam.seed = 8;
    auto c = expand_family(fam);
    CHECK(a[0].hmm.trans != c[0].hmm.trans);

    fam.type = "renewal";
    fam.support_bound = 2;
    auto r = expand_family(fam);
    REQUIRE(r.size() == 3);
    CHECK(r[0].id == "renewal-0");
    CHECK(!r[0].is_hmm);
    CHECK(r[0].law.support() == 2);
    CHECK(r[0].hmm.k == 2);  // countdown-chain equivalent rides along
}

TEST_CASE("family expansion: model files") {
    HmmParams p = make_hmm(2, 2, {0.5, 0.5, 1.0, 0.0}, {0.9, 0.1, 0.2, 0.8});
    TempFile hf("/tmp/seqpred_bench_hmm_a.json", hmm_to_json(p).dump());
    TempFile rf("/tmp/seqpred_bench_ren_b.json", R"({"mu":[0.4,0.6]})");
    ModelFamilyConfig fam;
    fam.source = "file";
    fam.paths = {hf.path, rf.path};
    auto models = expand_family(fam);
    REQUIRE(models.size() == 2);
    CHECK(models[0].id == "seqpred_bench_hmm_a");
    CHECK(models[0].is_hmm);
    CHECK(close(models[0].hmm.t(0, 1), 0.5, 1e-12));
    CHECK(models[1].id == "seqpred_bench_ren_b");
    CHECK(!models[1].is_hmm);
    CHECK(close(models[1].law.mu[1], 0.6, 1e-12));
}

TEST_CASE("predictor construction against a model") {
    ModelFamilyConfig fam;
    fam.count = 1;
    fam.seed = 11;
    ModelInstance hmm_model = expand_family(fam).front();
    fam.type = "renewal";
    ModelInstance ren_model = expand_family(fam).front();

    std::vector<int> x = {0, 1, 1, 0};
    PredictorSpec oracle;
    oracle.kind = "oracle";
    PredictiveDist want_h = hmm_oracle_predictive(hmm_model.hmm, x);
    PredictiveDist got_h = make_predictor(oracle, hmm_model)(x);
    CHECK(close(got_h[0], want_h[0], 1e-12));
    PredictiveDist want_r = renewal_hazard_predictive(ren_model.law, x);
    PredictiveDist got_r = make_predictor(oracle, ren_model)(x);
    CHECK(close(got_r[1], want_r[1], 1e-12));

    // optimal-hmm fills its sizes from the model when left at zero.
    PredictorSpec opt;
    opt.kind = "optimal-hmm";
    PredictiveDist got_o = make_predictor(opt, hmm_model)(x);
    PredictiveDist want_o = optimal_hmm_predictor(2, 2, x);
    CHECK(close(got_o[0], want_o[0], 1e-12));

    PredictorSpec mk;
    mk.kind = "markov-approx";
    mk.order = 1;
    PredictiveDist got_m = make_predictor(mk, hmm_model)(x);
    PredictiveDist want_m = markov_approx_predictor(2, x, 1);
    CHECK(close(got_m[0], want_m[0], 1e-12));

    // renewal-nml needs a support bound from somewhere.
    PredictorSpec nml;
    nml.kind = "renewal-nml";
    CHECK_THROWS_AS(make_predictor(nml, hmm_model), ConfigError);
    PredictiveDist got_n = make_predictor(nml, ren_model)(std::vector<int>{1, 0});
    PredictiveDist want_n = renewal_nml_predictor(std::vector<int>{1, 0}, 2);
    CHECK(close(got_n[1], want_n[1], 1e-12));

    PredictorSpec bogus;
    bogus.kind = "nearest-neighbor";
    CHECK_THROWS_AS(make_predictor(bogus, hmm_model), ConfigError);
}

TEST_CASE("exact sweep reproduces directly computed risks") {
    ExperimentConfig cfg = small_exact_config();
    auto records = run_risk_sweep(cfg);
    REQUIRE(records.size() == 4);  // 1 model x 2 predictors x 2 horizons

    ModelInstance model = expand_family(cfg.family).front();
    for (const RiskRecord& r : records) {
        CHECK(r.model_id == "hmm-0");
        CHECK(r.trials == 0);
        CHECK(r.error.empty());
        CHECK(close(r.ci_low, r.risk_nats, 0.0));
        CHECK(close(r.ci_high, r.risk_nats, 0.0));
        CHECK(close(r.n_times_risk, r.risk_nats * r.n, 1e-15));
        if (r.predictor == "oracle") {
            CHECK(close(r.risk_nats, 0.0, 1e-12));
        } else {
            CHECK(r.predictor == "markov-approx-d1");
            Predictor pred = [](std::span<const int> h) {
                return markov_approx_predictor(2, h, 1);
            };
            CHECK(close(r.risk_nats, exact_prediction_risk(model.hmm, pred, r.n), 1e-12));
        }
    }
}

TEST_CASE("monte carlo sweep: coverage, determinism, thread independence") {
    ExperimentConfig cfg = small_exact_config();
    cfg.mode = "montecarlo";
    cfg.trials = 2000;
    cfg.master_seed = 123;
    cfg.n_grid = {4};
    PredictorSpec markov;
    markov.kind = "markov-approx";
    markov.order = 1;
    cfg.predictors = {markov};

    auto run1 = run_risk_sweep(cfg);
    auto run2 = run_risk_sweep(cfg);
    cfg.threads = 8;
    auto run8 = run_risk_sweep(cfg);
    REQUIRE(run1.size() == 1);
    CHECK(run1[0].trials == 2000);
    CHECK(run1[0].risk_nats == run2[0].risk_nats);  // bitwise reproducible
    CHECK(run1[0].risk_nats == run8[0].risk_nats);
    CHECK(run1[0].ci_low == run8[0].ci_low);
    CHECK(run1[0].ci_high == run8[0].ci_high);
    CHECK(run1[0].ci_low <= run1[0].risk_nats);
    CHECK(run1[0].risk_nats <= run1[0].ci_high);

    ModelInstance model = expand_family(cfg.family).front();
    Predictor pred = [](std::span<const int> h) { return markov_approx_predictor(2, h, 1); };
    double exact = exact_prediction_risk(model.hmm, pred, 4);
    double half = 0.5 * (run1[0].ci_high - run1[0].ci_low);
    CHECK(std::fabs(run1[0].risk_nats - exact) <= 3.0 * half);

    cfg.master_seed = 124;
    auto other = run_risk_sweep(cfg);
    CHECK(other[0].risk_nats != run1[0].risk_nats);
}

TEST_CASE("per-record failures never abort a sweep") {
    ExperimentConfig cfg;
    cfg.family.type = "renewal";
    cfg.family.support_bound = 2;
    cfg.family.count = 1;
    cfg.family.seed = 3;
    PredictorSpec oracle;
    oracle.kind = "oracle";
    PredictorSpec nml;
    nml.kind = "renewal-nml";
    nml.horizon_cap = 3;  // too small for n = 4
    PredictorSpec markov;
    markov.kind = "markov-approx";
    markov.order = 0;
    cfg.predictors = {oracle, nml, markov};
    cfg.n_grid = {4};
    cfg.trials = 500;
    cfg.mode = "montecarlo";

    auto records = run_risk_sweep(cfg);
    REQUIRE(records.size() == 3);
    CHECK(records[0].predictor == "oracle");
    CHECK(close(records[0].risk_nats, 0.0, 1e-12));
    CHECK(records[1].predictor == "renewal-nml");
    CHECK(records[1].error_kind == RecordError::budget);
    CHECK(std::isnan(records[1].risk_nats));
    CHECK(records[1].trials == 0);
    CHECK(!records[1].error.empty());
    CHECK(records[2].error.empty());
    CHECK(!all_budget_failed(records));
    CHECK(all_budget_failed({records[1]}));

    cfg.predictors = {nml};
    auto only_bad = run_risk_sweep(cfg);
    CHECK(all_budget_failed(only_bad));
}

TEST_CASE("report emission: csv and json") {
    ExperimentConfig cfg = small_exact_config();
    auto records = run_risk_sweep(cfg);

    std::ostringstream csv;
    emit_report(records, csv, "csv");
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "model_id,predictor,n,risk_nats,ci_low,ci_high,trials,wall_ms,n_times_risk");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);

    std::ostringstream js;
    emit_report(records, js, "json");
    Json arr = Json::parse(js.str());
    REQUIRE(arr.is_array());
    REQUIRE(arr.size() == 4);
    CHECK(arr[0]["model_id"] == "hmm-0");
    CHECK(arr[0].contains("risk_nats"));
    CHECK(!arr[0].contains("error"));

    // A failed record surfaces its message in JSON output.
    RiskRecord bad;
    bad.model_id = "m";
    bad.predictor = "p";
    bad.n = 2;
    bad.error_kind = RecordError::budget;
    bad.error = "too big";
    std::ostringstream js2;
    emit_report({bad}, js2, "json");
    Json arr2 = Json::parse(js2.str());
    CHECK(arr2[0]["error"] == "too big");

    std::ostringstream sink;
    CHECK_THROWS_AS(emit_report({}, sink, "csv"), ConfigError);
    CHECK_THROWS_AS(emit_report(records, sink, "xml"), ConfigError);
}

TEST_CASE("csv output is identical across runs once timing is masked") {
    ExperimentConfig cfg = small_exact_config();
    cfg.mode = "montecarlo";
    cfg.trials = 600;
    cfg.n_grid = {3};
    std::ostringstream a, b;
    emit_report(run_risk_sweep(cfg), a, "csv");
    cfg.threads = 8;
    emit_report(run_risk_sweep(cfg), b, "csv");
    CHECK(strip_timing(a.str()) == strip_timing(b.str()));
    CHECK(a.str() != "");
}

TEST_CASE("worst-case search: bookkeeping and reproducible objective") {
    ExperimentConfig cfg = small_exact_config();
    PredictorSpec markov;
    markov.kind = "markov-approx";
    markov.order = 1;
    cfg.predictors = {markov};
    cfg.n_grid = {3};

    WorstCaseResult res = run_worstcase_search(cfg, 12);
    CHECK(res.evaluations == 12);
    CHECK(res.best.model_id == "worst-found");
    CHECK(res.best.predictor == "markov-approx-d1");
    CHECK(res.best.n == 3);
    CHECK(res.best.trials == 0);
    CHECK(res.best.risk_nats >= 0.0);
    CHECK(close(res.best.n_times_risk, 3 * res.best.risk_nats, 1e-15));
    // The reported maximum is exactly the objective at the reported argmax.
    Predictor pred = [](std::span<const int> h) { return markov_approx_predictor(2, h, 1); };
    CHECK(close(exact_prediction_risk(res.argmax, pred, 3), res.best.risk_nats, 1e-12));
    for (int i = 0; i < 2; ++i) {
        double ts = res.argmax.t(i, 0) + res.argmax.t(i, 1);
        CHECK(close(ts, 1.0, 1e-9));
    }

    WorstCaseResult one = run_worstcase_search(cfg, 1);
    CHECK(one.evaluations == 1);

    cfg.family.type = "renewal";
    CHECK_THROWS_AS(run_worstcase_search(cfg, 5), ConfigError);
    cfg.family.type = "hmm";
    CHECK_THROWS_AS(run_worstcase_search(cfg, 0), ConfigError);
}

TEST_CASE("json models: roundtrip, renormalization, rejection") {
    HmmParams p = make_hmm(2, 3, {0.5, 0.5, 1.0, 0.0}, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1});
    HmmParams q = hmm_from_json(hmm_to_json(p));
    CHECK(q.k == 2);
    CHECK(q.l == 3);
    for (size_t i = 0; i < p.trans.size(); ++i) CHECK(close(p.trans[i], q.trans[i], 1e-12));
    for (size_t i = 0; i < p.emit.size(); ++i) CHECK(close(p.emit[i], q.emit[i], 1e-12));

    // Tiny drift is renormalized; gross drift is rejected.
    Json drift = Json::parse(R"({"k":1,"l":2,"trans":[[1.0]],"emit":[[0.5000002,0.5000003]]})");
    HmmParams d = hmm_from_json(drift);
    CHECK(close(d.e(0, 0) + d.e(0, 1), 1.0, 1e-12));
    Json gross = Json::parse(R"({"k":1,"l":2,"trans":[[1.0]],"emit":[[0.6,0.5]]})");
    CHECK_THROWS_AS(hmm_from_json(gross), ConfigError);
    Json missing = Json::parse(R"({"k":1,"l":2,"trans":[[1.0]]})");
    CHECK_THROWS_AS(hmm_from_json(missing), ConfigError);
    Json badrows = Json::parse(R"({"k":2,"l":2,"trans":[[1.0,0.0]],"emit":[[0.5,0.5],[0.5,0.5]]})");
    CHECK_THROWS_AS(hmm_from_json(badrows), ConfigError);

    RenewalLaw law = renewal_from_json(Json::parse(R"({"mu":[0.25,0.75]})"));
    CHECK(close(law.mean, 1.75, 1e-12));
    CHECK_THROWS_AS(renewal_from_json(Json::parse(R"({"mu":[]})")), ConfigError);
    CHECK_THROWS_AS(renewal_from_json(Json::parse(R"({"mu":[0.2,0.3]})")), ConfigError);
    RenewalLaw law2 = renewal_from_json(renewal_to_json(law));
    CHECK(close(law2.mu[0], 0.25, 1e-12));

    auto var_h = model_from_json(hmm_to_json(p));
    CHECK(std::holds_alternative<HmmParams>(var_h));
    auto var_r = model_from_json(Json::parse(R"({"mu":[1.0]})"));
    CHECK(std::holds_alternative<RenewalLaw>(var_r));
}

TEST_CASE("json predictor specs and experiment configs") {
    PredictorSpec s1 = predictor_spec_from_json(Json("markov-approx"));
    CHECK(s1.kind == "markov-approx");
    CHECK(s1.order == -1);
    PredictorSpec s2 = predictor_spec_from_json(Json("renewal-hazard"));
    CHECK(s2.kind == "renewal-empirical-hazard");
    PredictorSpec s3 = predictor_spec_from_json(
        Json::parse(R"({"kind":"renewal-hazard","floor_exp":0.5})"));
    CHECK(s3.kind == "renewal-empirical-hazard");
    CHECK(close(s3.floor_exp, 0.5, 1e-15));
    PredictorSpec s4 =
        predictor_spec_from_json(Json::parse(R"({"kind":"renewal-nml","support_bound":3})"));
    CHECK(s4.support_bound == 3);
    CHECK(s4.horizon_cap == 12);
    CHECK_THROWS_AS(predictor_spec_from_json(Json::parse(R"({"order":1})")), ConfigError);

    Json cfgj = Json::parse(R"({
        "model_family": {"type":"hmm","k":2,"l":2,
                         "source":{"type":"random","count":2,"seed":9}},
        "predictors": ["oracle", {"kind":"markov-approx","order":1}],
        "n_grid": [4, 8]
    })");
    ExperimentConfig cfg = experiment_config_from_json(cfgj);
    CHECK(cfg.family.count == 2);
    CHECK(cfg.family.seed == 9);
    CHECK(cfg.predictors.size() == 2);
    CHECK(cfg.predictors[1].order == 1);
    CHECK(cfg.n_grid == std::vector<int>{4, 8});
    CHECK(cfg.trials == 100000);
    CHECK(cfg.mode == "montecarlo");
    CHECK(cfg.format == "csv");
    CHECK(cfg.threads == 1);

    Json bad1 = cfgj;
    bad1.erase("n_grid");
    CHECK_THROWS_AS(experiment_config_from_json(bad1), ConfigError);
    Json bad2 = cfgj;
    bad2["mode"] = "approximate";
    CHECK_THROWS_AS(experiment_config_from_json(bad2), ConfigError);
    Json bad3 = cfgj;
    bad3["n_grid"] = Json::array({0});
    CHECK_THROWS_AS(experiment_config_from_json(bad3), ConfigError);
    Json bad4 = cfgj;
    bad4["threads"] = 0;
    CHECK_THROWS_AS(experiment_config_from_json(bad4), ConfigError);
}

TEST_CASE("json files: loading and error paths") {
    TempFile good("/tmp/seqpred_bench_good.json", R"({"mu":[1.0]})");
    Json j = load_json_file(good.path);
    CHECK(j.contains("mu"));
    CHECK_THROWS_AS(load_json_file("/tmp/definitely_missing_seqpred.json"), ConfigError);
    TempFile bad("/tmp/seqpred_bench_bad.json", "{not json!");
    CHECK_THROWS_AS(load_json_file(bad.path), ConfigError);
}
