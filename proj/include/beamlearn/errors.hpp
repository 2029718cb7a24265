// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMLEARN_ERRORS_HPP
#define BEAMLEARN_ERRORS_HPP

#include <stdexcept>

namespace beamlearn {

// Invalid experiment or module configuration (resolution out of range,
// empty user set, bad hyperparameter, ...).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A caller broke an operation contract: dimension mismatch, stale forward
// cache, sampling an underfilled replay memory, non-finite gradients.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files (channel CSV, geometry/beam JSON,
// checkpoints). Messages name the offending file and, for CSV, the line.
class IngestionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Random generation could not satisfy a structural constraint, e.g. the
// antenna-position ordering under an oversized position spread.
class GenerationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace beamlearn

#endif // BEAMLEARN_ERRORS_HPP
