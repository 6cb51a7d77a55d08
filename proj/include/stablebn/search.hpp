#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stablebn/graph.hpp"
#include "stablebn/scoring.hpp"

namespace stablebn {

struct SearchParams {
  int tabu_len = 10;
  int noinc = 15;
  std::int64_t max_iter = 100000;
  // Checked once per iteration; expiry raises TimeoutError.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

// Data-derived total order over the dataset's columns (GetStableOrder
// output). Invariant under dataset perturbation unless duplicate-value
// variables exist.
struct StableOrder {
  enum class Branch { Decreasing, Increasing };
  std::vector<int> sequence;  // column indices, earliest first
  Branch provenance = Branch::Decreasing;
};

// Three-element sort key: node score without parents, mean single-parent
// score, value-counts rendition (categorical only). Compared descending,
// lexicographically by element.
struct SortKey {
  double uncond = 0.0;
  double cond_mean = 0.0;
  std::string rendition;
};

struct ChangeLogEntry {
  std::int64_t iteration = 0;
  DagChange change;
  double delta = 0.0;
  // The chosen change added an edge whose opposite orientation was admissible
  // with an equal delta: the decision was arbitrary up to the tie rule.
  bool orientation_tie = false;
  double total_after = 0.0;
  double best_total = 0.0;
};

struct SearchResult {
  Dag dag;
  double total_score = 0.0;
  std::int64_t iterations = 0;
  bool has_stable_order = false;
  StableOrder stable_order;
  std::vector<ChangeLogEntry> log;  // filled only when requested
};

// Score-change cache for every candidate arc addition/deletion/reversal
// against the current DAG. Reversal deltas decompose as delete(u,v) plus
// add(v,u), so only add and delete tables are stored. Node indices must equal
// dataset column indices.
class DeltaTable {
 public:
  DeltaTable(Scorer& scorer, const Dag& dag);

  double add_delta(int from, int to) const { return add_(from, to); }
  double delete_delta(int from, int to) const { return del_(from, to); }
  double reverse_delta(int from, int to) const { return del_(from, to) + add_(to, from); }
  double delta_of(const DagChange& change) const;

  // Call after the change has been applied to the DAG.
  void update(const DagChange& applied);

  double node_score(int v) const { return node_scores_[static_cast<std::size_t>(v)]; }
  // Sum of current node scores over the sorted value multiset; bit-identical
  // to Scorer::dag_score of the current DAG.
  double current_total() const;

 private:
  void refresh_child(int v);

  Scorer& scorer_;
  const Dag& dag_;
  Eigen::MatrixXd add_;  // add_(u,v): delta of adding u -> v
  Eigen::MatrixXd del_;  // del_(u,v): delta of deleting u -> v
  std::vector<double> node_scores_;
};

// Deltas for opposite orientations of one edge are mathematically equal when
// cardinalities match but may differ in the last bits; this is the equality
// predicate used for the equivalent-change rule.
bool deltas_tie(double a, double b);

SortKey sort_key(Scorer& scorer, int variable);

// Orders variables by descending sort key (ties keep current column order),
// probes standard HC with that order and its reverse, and returns the
// topological order of the higher-scoring learned DAG (score ties choose the
// decreasing branch).
StableOrder get_stable_order(Scorer& scorer, const SearchParams& params);

// Standard greedy hill-climbing from the empty DAG; all ties resolved by
// tie_order (candidate enumeration: delete < reverse < add, then endpoint
// ranks). Unstable by design when tie_order is the dataset column order.
SearchResult hc(Scorer& scorer, const SearchParams& params, const std::vector<int>& tie_order,
                bool keep_log = false);

// Tabu search: applies the best admissible non-tabu change even when the
// score does not improve, tracks the best DAG visited, and stops when none
// of the last `noinc` changes improved the score.
SearchResult tabu(Scorer& scorer, const SearchParams& params, const std::vector<int>& tie_order,
                  bool keep_log = false);

SearchResult hc_stable(Scorer& scorer, const SearchParams& params, bool keep_log = false);
SearchResult tabu_stable(Scorer& scorer, const SearchParams& params, bool keep_log = false);

enum class Algorithm { Hc, Tabu, HcStable, TabuStable };
Algorithm algorithm_from_name(std::string_view name);
std::string algorithm_name(Algorithm algo);

// Dispatches on `algo`; standard variants use the dataset column order as
// tie_order.
SearchResult learn(Algorithm algo, Scorer& scorer, const SearchParams& params,
                   bool keep_log = false);

}  // namespace stablebn
