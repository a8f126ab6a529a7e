#pragma once

#include <stdexcept>
#include <string>

namespace cidet {

// Bad or inconsistent experiment configuration (also raised for unknown
// config keys, so typos never silently change an experiment).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure while reading datasets, manifests or checkpoints from disk.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violation of the incremental-training protocol (overlapping class ids,
// empty state dataset, add_state before finishing the previous state, ...).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss and similar runtime diagnostics).
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cidet
