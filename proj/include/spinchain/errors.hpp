#pragma once

#include <stdexcept>
#include <string>

// Error taxonomy.  Invalid user-facing parameters throw std::invalid_argument
// or std::domain_error; the types below cover the remaining failure classes.
// The CLI maps them onto process exit codes (see tools/).

namespace spinchain {

// Eigensolver non-convergence, singular linear systems, and similar
// breakdowns of the numerics.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration (bad JSON, unknown keys,
// missing required sections, unknown presets).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem and file-format failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Too few events/samples to produce the requested statistic.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Switching analysis could not identify two levels in a trace.
struct DetectionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate or rank-deficient fitting problems.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken internal invariants; indicates a bug, not a user error.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

} // namespace spinchain
