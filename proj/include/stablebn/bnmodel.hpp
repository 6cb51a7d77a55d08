#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stablebn/dataset.hpp"
#include "stablebn/graph.hpp"

namespace stablebn {

struct CptNode {
  std::vector<std::string> states;         // declared order; sampling draws in this order
  std::vector<std::string> parent_labels;  // alphabetical
  // Row key: '|'-joined parent states in alphabetical parent-label order
  // (empty string for root nodes). Probabilities align with `states`.
  std::map<std::string, std::vector<double>> rows;
};

struct LinGaussNode {
  double intercept = 0.0;
  std::map<std::string, double> coeffs;  // parent label -> coefficient
  double sd = 1.0;
};

struct FreeParameterCount {
  std::map<std::string, std::int64_t> per_node;
  std::int64_t total = 0;
};

// A declared ground-truth network: structure plus CPTs (categorical) or
// linear-Gaussian parameters (continuous). Immutable after loading.
class NetworkModel {
 public:
  static NetworkModel load(const std::filesystem::path& path);
  static NetworkModel parse(std::string_view json_text, const std::string& origin);

  const Dag& dag() const { return dag_; }
  DataKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const CptNode& cpt(const std::string& node) const { return cpts_.at(node); }
  const LinGaussNode& lingauss(const std::string& node) const { return lingauss_.at(node); }

  // Forward (ancestral) sampling: nodes visited in topological order with
  // alphabetical tie-break, rows outermost; bitwise reproducible per seed.
  // Categorical columns inherit the model's full state lists.
  Dataset sample(std::int64_t n_rows, std::uint64_t seed) const;

  FreeParameterCount free_parameters() const;

 private:
  NetworkModel() = default;

  std::string name_;
  DataKind kind_ = DataKind::Categorical;
  Dag dag_;
  std::map<std::string, CptNode> cpts_;
  std::map<std::string, LinGaussNode> lingauss_;
};

// Free parameters of an arbitrary DAG over a dataset's variables: categorical
// nodes contribute q_i * (r_i - 1), continuous nodes |parents| + 2.
FreeParameterCount free_parameters(const Dag& dag, const Dataset& data);

}  // namespace stablebn
