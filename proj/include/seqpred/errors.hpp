#pragma once

#include <stdexcept>
#include <string>

namespace seqpred {

// Base class for all typed failures raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A row (or probability vector) does not lie on the simplex.
struct NonStochasticError : Error {
    using Error::Error;
};

// A conditioning event has probability zero under the model at hand.
struct ImpossibleSequenceError : Error {
    using Error::Error;
};

// Hazard ratio has a zero denominator (no mass beyond the observed gap).
struct HazardUndefinedError : Error {
    using Error::Error;
};

// A dynamic program would exceed its configured size budget.  `estimate`
// carries the feasibility estimate (or the live count) that tripped the guard.
struct BudgetExceededError : Error {
    double estimate;
    BudgetExceededError(const std::string& msg, double est)
        : Error(msg + " (estimate " + std::to_string(est) + ")"), estimate(est) {}
};

// An exact-enumeration table would exceed its configured cap.
struct CapExceededError : Error {
    using Error::Error;
};

// KL-type quantity undefined: p puts mass where q has none.
struct SupportViolationError : Error {
    using Error::Error;
};

// Malformed configuration or input file.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace seqpred
