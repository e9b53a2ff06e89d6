#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <variant>

#include "seqpred/bench.hpp"
#include "seqpred/models.hpp"

namespace seqpred {

using Json = nlohmann::ordered_json;

// {"k":2,"l":2,"trans":[[..],[..]],"emit":[[..],[..]]}; rows whose sums are
// off by more than 1e-6 are rejected, smaller deviations are renormalized.
HmmParams hmm_from_json(const Json& j);

// {"mu":[..]} with the same row policy.
RenewalLaw renewal_from_json(const Json& j);

// Dispatches on the presence of "mu".
std::variant<HmmParams, RenewalLaw> model_from_json(const Json& j);

Json hmm_to_json(const HmmParams& p);
Json renewal_to_json(const RenewalLaw& law);

Json load_json_file(const std::string& path);

PredictorSpec predictor_spec_from_json(const Json& j);
ModelFamilyConfig model_family_from_json(const Json& j);
ExperimentConfig experiment_config_from_json(const Json& j);

}  // namespace seqpred
