#pragma once

#include <stdexcept>
#include <string>

namespace stablebn {

// Malformed input files (CSV, model JSON, graph files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally well-formed input that violates a semantic contract
// (CPT rows not summing to one, mismatched labels, bad arguments).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment or algorithm configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cyclic graph was passed where a DAG is required.
class CycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A DagChange that is not applicable to the given graph.
class InvalidChangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric undefined for the given inputs (e.g. BSF on an empty truth graph).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Search exceeded its iteration cap (diagnostic; should not happen at desk scale).
class SearchLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A per-run wall-clock limit expired.
class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stablebn
