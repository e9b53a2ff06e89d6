#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqpred/assignments.hpp"
#include "seqpred/infolab.hpp"
#include "seqpred/marginal.hpp"
#include "seqpred/models.hpp"
#include "seqpred/predictor.hpp"

namespace py = pybind11;
using namespace seqpred;

namespace {

// Nested python lists -> row-major flat vector, with a shape check.
std::vector<double> flatten(const std::vector<std::vector<double>>& rows, size_t cols,
                            const char* what) {
    std::vector<double> flat;
    for (const auto& row : rows) {
        if (row.size() != cols) throw ConfigError(std::string(what) + ": ragged row");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return flat;
}

std::vector<long> flatten_long(const std::vector<std::vector<long>>& rows, size_t cols,
                               const char* what) {
    std::vector<long> flat;
    for (const auto& row : rows) {
        if (row.size() != cols) throw ConfigError(std::string(what) + ": ragged row");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return flat;
}

}  // namespace

PYBIND11_MODULE(_seqpred, m) {
    m.doc() = "Latent-state sequence prediction laboratory (C++ core)";

    py::register_exception<ImpossibleSequenceError>(m, "ImpossibleSequenceError");
    py::register_exception<BudgetExceededError>(m, "BudgetExceededError");
    py::register_exception<CapExceededError>(m, "CapExceededError");

    py::class_<HmmParams>(m, "Hmm")
        .def(py::init([](const std::vector<std::vector<double>>& trans,
                         const std::vector<std::vector<double>>& emit) {
                 int k = static_cast<int>(trans.size());
                 if (k == 0 || emit.size() != trans.size())
                     throw ConfigError("Hmm: trans and emit need one row per state");
                 int l = static_cast<int>(emit[0].size());
                 return make_hmm(k, l, flatten(trans, trans.size(), "trans"),
                                 flatten(emit, emit[0].size(), "emit"));
             }),
             py::arg("trans"), py::arg("emit"))
        .def_readonly("k", &HmmParams::k)
        .def_readonly("l", &HmmParams::l)
        .def_readonly("stationary", &HmmParams::stat)
        .def(
            "sample",
            [](const HmmParams& p, int n, uint64_t seed) {
                return sample_hmm_path(p, n, seed);
            },
            py::arg("n"), py::arg("seed") = 0,
            "Sample (symbols, states) of length n from the stationary chain")
        .def(
            "next_dist",
            [](const HmmParams& p, const SymbolSequence& x) {
                return hmm_oracle_predictive(p, x).probs;
            },
            py::arg("x"), "Exact next-symbol distribution given an observed prefix")
        .def(
            "sequence_log_prob",
            [](const HmmParams& p, const SymbolSequence& x) {
                return hmm_exact_sequence_prob(p, x);
            },
            py::arg("x"));

    py::class_<RenewalLaw>(m, "Renewal")
        .def(py::init([](const std::vector<double>& mu) { return make_renewal(mu); }),
             py::arg("mu"))
        .def_readonly("mu", &RenewalLaw::mu)
        .def_property_readonly("support", &RenewalLaw::support)
        .def(
            "sample",
            [](const RenewalLaw& law, int n, uint64_t seed) {
                return sample_renewal_path(law, n, seed);
            },
            py::arg("n"), py::arg("seed") = 0)
        .def(
            "next_dist",
            [](const RenewalLaw& law, const SymbolSequence& x) {
                return renewal_hazard_predictive(law, x).probs;
            },
            py::arg("x"))
        .def("as_hmm", [](const RenewalLaw& law) { return renewal_as_hmm(law); });

    m.def(
        "marginal_log_prob",
        [](int k, int l, const SymbolSequence& x, double budget) {
            return marginal_assignment_logprob(x, k, l, budget);
        },
        py::arg("k"), py::arg("l"), py::arg("x"), py::arg("budget") = kDefaultBudget,
        "Log probability of x under the big add-one mixture over paired paths");

    m.def(
        "marginal_next_dist",
        [](int k, int l, const SymbolSequence& x, double budget) {
            return marginal_conditional(x, k, l, budget).probs;
        },
        py::arg("k"), py::arg("l"), py::arg("x"), py::arg("budget") = kDefaultBudget);

    m.def(
        "average_next_dist",
        [](int k, int l, const SymbolSequence& x, double budget) {
            return optimal_hmm_predictor(k, l, x, budget).probs;
        },
        py::arg("k"), py::arg("l"), py::arg("x"), py::arg("budget") = kDefaultBudget,
        "Suffix-averaged predictor built on the paired-path mixture");

    m.def(
        "markov_next_dist",
        [](const SymbolSequence& x, int l, int order) {
            return markov_approx_predictor(l, x, order).probs;
        },
        py::arg("x"), py::arg("l"), py::arg("order") = -1,
        "Suffix-averaged add-one Markov predictor; order < 0 picks it from n");

    m.def(
        "renewal_empirical_next_dist",
        [](const SymbolSequence& x, double floor_exp) {
            return renewal_empirical_hazard_predictor(x, floor_exp).probs;
        },
        py::arg("x"), py::arg("floor_exp") = 1.0);

    m.def(
        "renewal_nml_next_dist",
        [](const SymbolSequence& x, int support_bound, int horizon_cap) {
            return renewal_nml_predictor(x, support_bound, horizon_cap).probs;
        },
        py::arg("x"), py::arg("support_bound"), py::arg("horizon_cap") = 12);

    m.def(
        "joint_addone_log_prob",
        [](const SymbolSequence& x, const StatePath& z, int k, int l) {
            return joint_addone_logprob(x, z, k, l);
        },
        py::arg("x"), py::arg("z"), py::arg("k"), py::arg("l"),
        "Log Q(x, z) for the sequential add-one joint assignment");

    m.def(
        "count_trajectories",
        [](const SymbolSequence& x, int k, int l,
           const std::vector<std::vector<long>>& trans,
           const std::vector<std::vector<long>>& emit, double budget) {
            CountStats c(k, l);
            c.trans_counts = flatten_long(trans, static_cast<size_t>(k), "trans");
            c.emit_counts = flatten_long(emit, static_cast<size_t>(l), "emit");
            return count_trajectories(c, x, budget).get_str();
        },
        py::arg("x"), py::arg("k"), py::arg("l"), py::arg("trans"), py::arg("emit"),
        py::arg("budget") = kDefaultBudget,
        "Number of paired paths consistent with x and the given count matrices "
        "(decimal string)");

    m.def(
        "latent_info",
        [](const HmmParams& p, int m, double cap) { return latent_info(p, m, cap); },
        py::arg("hmm"), py::arg("m"), py::arg("cap") = kDefaultExactCap);

    m.def(
        "memory_profile",
        [](const HmmParams& p, int n, double cap) {
            MemoryDecomposition d = memory_term(p, n, cap);
            return py::make_tuple(d.per_lag, d.sum);
        },
        py::arg("hmm"), py::arg("n"), py::arg("cap") = kDefaultExactCap,
        "Per-lag conditional information the future shares with dropped history");

    m.def("shtarkov_iid", &shtarkov_sum_iid, py::arg("l"), py::arg("m"));
    m.def(
        "shtarkov_markov1",
        [](int l, int m, double cap) { return shtarkov_sum_markov1(l, m, cap); },
        py::arg("l"), py::arg("m"), py::arg("cap") = kDefaultExactCap);
    m.def(
        "shtarkov_renewal",
        [](int s, int m, double cap) { return shtarkov_sum_renewal(s, m, cap); },
        py::arg("support_bound"), py::arg("m"), py::arg("cap") = kDefaultExactCap);
}
