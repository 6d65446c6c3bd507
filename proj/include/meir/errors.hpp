#pragma once

#include <stdexcept>
#include <string>

namespace meir {

// Caller violated a documented precondition (size mismatch, bad argument).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A file could not be read or decoded.
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fit is degenerate (e.g. all sample points coincide).
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A measure is undefined for the given inputs (e.g. NDM with a zero reference).
struct UndefinedMeasureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A state the implementation considers unreachable.
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace meir
