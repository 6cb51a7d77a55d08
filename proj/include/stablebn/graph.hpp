#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stablebn {

// Nodes are dense indices [0, n) into a per-graph label registry. All
// adjacency is stored in sorted-index order so that iteration never depends
// on insertion order or hashing.

struct Arc {
  int from = 0;
  int to = 0;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

enum class ChangeKind { Delete = 0, Reverse = 1, Add = 2 };

struct DagChange {
  ChangeKind kind = ChangeKind::Add;
  int from = 0;
  int to = 0;
  friend auto operator<=>(const DagChange&, const DagChange&) = default;
};

class Dag {
 public:
  Dag() = default;
  explicit Dag(std::vector<std::string> labels);

  int node_count() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int v) const { return labels_[static_cast<std::size_t>(v)]; }
  // -1 when absent.
  int index_of(std::string_view label) const;

  bool has_arc(int from, int to) const;
  bool adjacent(int a, int b) const { return has_arc(a, b) || has_arc(b, a); }
  void add_arc(int from, int to);
  void remove_arc(int from, int to);

  const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }

  int arc_count() const { return arc_count_; }
  // All arcs sorted by (from, to); also the tabu-list fingerprint.
  std::vector<Arc> arcs() const;

  // Validates applicability (presence/absence of the arc) and mutates.
  void apply(const DagChange& change);

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  int arc_count_ = 0;
};

// Partially directed graph; a CPDAG is a Pdag produced by dag_to_cpdag.
class Pdag {
 public:
  Pdag() = default;
  explicit Pdag(std::vector<std::string> labels);

  int node_count() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int v) const { return labels_[static_cast<std::size_t>(v)]; }
  int index_of(std::string_view label) const;

  void add_directed(int from, int to);
  void add_undirected(int a, int b);

  bool has_directed(int from, int to) const;
  bool has_undirected(int a, int b) const;
  bool adjacent(int a, int b) const;

  int edge_count() const { return static_cast<int>(directed_.size() + undirected_.size()); }
  const std::vector<Arc>& directed_edges() const { return directed_; }
  // Stored with first < second.
  const std::vector<Arc>& undirected_edges() const { return undirected_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
  std::vector<Arc> directed_;
  std::vector<Arc> undirected_;
};

bool is_acyclic(const Dag& dag);

// True iff applying `change` would make the graph cyclic. Deletions never do.
bool would_create_cycle(const Dag& dag, const DagChange& change);

// Kahn's algorithm. `tie_break` lists all node ids, earliest first; among the
// simultaneously available nodes the one earliest in tie_break is emitted.
std::vector<int> topological_order(const Dag& dag, const std::vector<int>& tie_break);

// Completed PDAG of the DAG's Markov equivalence class (compelled-edge
// labelling over the Chickering edge order). Output is independent of node
// indexing and of which topological order seeds the edge ordering.
Pdag dag_to_cpdag(const Dag& dag);

Pdag as_pdag(const Dag& dag);

// Text format: one header line "nodes: <comma-separated labels>", then one
// line per edge, "u -> v" or "u -- v". Output is canonical (labels sorted,
// edges sorted) so byte equality means graph equality over the label set.
std::string serialize_graph(const Pdag& g);
std::string serialize_graph(const Dag& g);
Pdag parse_graph(std::string_view text);

// Replaces every label through the map; all labels must be present and the
// image must stay unique.
Dag rename_nodes(const Dag& g, const std::unordered_map<std::string, std::string>& name_map);
Pdag rename_nodes(const Pdag& g, const std::unordered_map<std::string, std::string>& name_map);

std::uint64_t graph_fingerprint(const Pdag& g);

}  // namespace stablebn
