#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqpred/infolab.hpp"
#include "seqpred/marginal.hpp"
#include "seqpred/models.hpp"
#include "seqpred/predictor.hpp"

namespace seqpred {

// Which next-symbol rule to run; `kind` is one of "oracle", "optimal-hmm",
// "markov-approx", "renewal-empirical-hazard", "renewal-nml".
struct PredictorSpec {
    std::string kind;
    int k = 0;                // optimal-hmm; 0 = take from the model family
    int l = 0;
    int order = -1;           // markov-approx; -1 = automatic
    double floor_exp = 1.0;   // renewal-empirical-hazard
    int support_bound = 0;    // renewal-nml; 0 = take from the model family
    int horizon_cap = 12;     // renewal-nml

    std::string label() const;
};

// One model drawn from / listed in the experiment's model family.
struct ModelInstance {
    std::string id;
    bool is_hmm = true;
    HmmParams hmm;    // for renewal models: the equivalent countdown chain
    RenewalLaw law;   // valid when !is_hmm
};

struct ModelFamilyConfig {
    std::string type = "hmm";  // "hmm" | "renewal"
    int k = 2;
    int l = 2;
    int support_bound = 2;     // renewal families
    std::string source = "random";  // "random" | "file"
    int count = 1;
    uint64_t seed = 0;
    std::vector<std::string> paths;
};

struct ExperimentConfig {
    ModelFamilyConfig family;
    std::vector<PredictorSpec> predictors;
    std::vector<int> n_grid;
    long trials = 100000;
    uint64_t master_seed = 0;
    std::string mode = "montecarlo";  // "montecarlo" | "exact"
    std::string output_path;
    std::string format = "csv";  // "csv" | "json"
    int threads = 1;
    double budget = kDefaultBudget;
    double cap = kDefaultExactCap;
};

enum class RecordError { none, budget, other };

struct RiskRecord {
    std::string model_id;
    std::string predictor;
    int n = 0;
    double risk_nats = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long trials = 0;
    double wall_ms = 0.0;
    double n_times_risk = 0.0;
    RecordError error_kind = RecordError::none;
    std::string error;  // empty when ok
};

// Materializes the family's model list (deterministic in the family seed).
std::vector<ModelInstance> expand_family(const ModelFamilyConfig& family);

// Builds the next-symbol rule described by `spec` against a concrete model
// (the model supplies the oracle's parameters and fills defaulted sizes).
Predictor make_predictor(const PredictorSpec& spec, const ModelInstance& model,
                         double budget = kDefaultBudget);

// Risk of each (model, predictor, n) cell: exact enumeration or Monte Carlo
// per-path KL against the model's own one-step oracle.  Per-record failures
// are captured in the record, never aborting the sweep.  Output is
// byte-identical for identical configs regardless of thread count (wall_ms
// aside), because every trial's seed is derived from (master_seed, record,
// trial) and reductions run in fixed order.
std::vector<RiskRecord> run_risk_sweep(const ExperimentConfig& cfg);

struct WorstCaseResult {
    RiskRecord best;
    HmmParams argmax;
    long evaluations = 0;
};

// Random-restart coordinate ascent over (trans, emit) rows for the first
// predictor and horizon in the config; reports the largest risk found (a
// lower bound on the true worst case, labeled as such downstream).
WorstCaseResult run_worstcase_search(const ExperimentConfig& cfg, long search_budget);

// CSV (fixed header, shortest round-trip doubles) or JSON, records verbatim.
void emit_report(const std::vector<RiskRecord>& records, std::ostream& out,
                 const std::string& format);

// True when every record failed on a budget- or cap-type error.
bool all_budget_failed(const std::vector<RiskRecord>& records);

}  // namespace seqpred
