#pragma once

#include <stdexcept>
#include <string>

namespace olp {

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidPerceived : std::runtime_error {
  explicit InvalidPerceived(const std::string& what) : std::runtime_error(what) {}
};

// Singular-value tie straddling a truncation cut; the truncated factors would
// not be a well-defined function of the input.
struct DegenerateTie : std::runtime_error {
  explicit DegenerateTie(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownMatrix : std::runtime_error {
  explicit UnknownMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct TooLarge : std::runtime_error {
  explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct ObjectiveError : std::runtime_error {
  explicit ObjectiveError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidPerturbation : std::runtime_error {
  explicit InvalidPerturbation(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateDirection : std::runtime_error {
  explicit DegenerateDirection(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidResponseFunction : std::runtime_error {
  explicit InvalidResponseFunction(const std::string& what) : std::runtime_error(what) {}
};

struct OracleFailure : std::runtime_error {
  explicit OracleFailure(const std::string& what) : std::runtime_error(what) {}
};

struct ReductionViolation : std::runtime_error {
  explicit ReductionViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace olp
