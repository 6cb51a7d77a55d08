#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stablebn/dataset.hpp"
#include "stablebn/graph.hpp"

namespace stablebn {

enum class ScoreKind { BicCategorical, Bdeu, BicGaussian };

ScoreKind score_kind_from_name(std::string_view name);  // "bic" | "bdeu" | "bic-g"
std::string score_kind_name(ScoreKind kind);

struct BdeuConfig {
  double iss = 1.0;  // imaginary sample size N', must be > 0
};

struct ScoreConfig {
  ScoreKind kind = ScoreKind::BicCategorical;
  BdeuConfig bdeu;
};

// Node scores are bit-identical across row order, column order and variable
// renaming of the dataset: every floating-point accumulation runs over a
// content-sorted multiset (sorted counts for the categorical scores, sorted
// per-pair products for the Gaussian Gram matrix), never over storage order.
// Natural logarithms throughout. Parent combinations that never occur in the
// data contribute no log-likelihood but still count in the q_i penalty.
double node_score_bic_cat(const Dataset& data, int node, std::span<const int> parents);
double node_score_bdeu(const Dataset& data, int node, std::span<const int> parents,
                       const BdeuConfig& cfg);
double node_score_bic_gauss(const Dataset& data, int node, std::span<const int> parents);

// Log-likelihood term of the categorical BIC (always <= 0); exposed so the
// monotonicity property can be tested apart from the penalty.
double cat_log_likelihood(const Dataset& data, int node, std::span<const int> parents);

// Memoizes node scores per (node, canonical parent set) and, for Gaussian
// data, per-pair product sums. One instance per (dataset, score kind) pair;
// confine to a single thread.
class Scorer {
 public:
  Scorer(const Dataset& data, ScoreConfig cfg);

  const Dataset& data() const { return data_; }
  const ScoreConfig& config() const { return cfg_; }

  double node_score(int node, std::span<const int> parents);

  // Sum of per-node scores, accumulated over the sorted score values so the
  // total is invariant to node indexing. Dag nodes are matched to dataset
  // columns by label.
  double dag_score(const Dag& dag);

  std::uint64_t cache_hits() const { return hits_; }
  std::uint64_t cache_misses() const { return misses_; }

 private:
  double compute(int node, std::span<const int> parents) const;

  const Dataset& data_;
  ScoreConfig cfg_;
  std::map<std::vector<int>, double> cache_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

double normalized_score(double total, std::int64_t n_rows);

// Deterministic sum of a value multiset: equal multisets give bit-identical
// totals no matter what order the values arrived in.
double sorted_sum(std::vector<double> values);

}  // namespace stablebn
