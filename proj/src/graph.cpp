#include "stablebn/graph.hpp"

#include <algorithm>
#include <sstream>

#include "stablebn/errors.hpp"
#include "stablebn/rng.hpp"
#include "stablebn/text.hpp"

namespace stablebn {

namespace {

void insert_sorted(std::vector<int>& v, int x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

void erase_sorted(std::vector<int>& v, int x) {
  const auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) v.erase(it);
}

bool contains_sorted(const std::vector<int>& v, int x) {
  return std::binary_search(v.begin(), v.end(), x);
}

std::unordered_map<std::string, int> build_index(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> index;
  index.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!index.emplace(labels[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate node label: " + labels[i]);
    }
  }
  return index;
}

void check_node(int v, int n, const char* what) {
  if (v < 0 || v >= n) {
    throw ValidationError(std::string(what) + ": node index out of range");
  }
}

}  // namespace

Dag::Dag(std::vector<std::string> labels)
    : labels_(std::move(labels)),
      index_(build_index(labels_)),
      parents_(labels_.size()),
      children_(labels_.size()) {}

int Dag::index_of(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  return it == index_.end() ? -1 : it->second;
}

bool Dag::has_arc(int from, int to) const {
  check_node(from, node_count(), "has_arc");
  check_node(to, node_count(), "has_arc");
  return contains_sorted(children_[static_cast<std::size_t>(from)], to);
}

void Dag::add_arc(int from, int to) {
  check_node(from, node_count(), "add_arc");
  check_node(to, node_count(), "add_arc");
  if (from == to) throw ValidationError("self-loop on " + label(from));
  if (has_arc(from, to)) {
    throw ValidationError("duplicate arc " + label(from) + " -> " + label(to));
  }
  insert_sorted(children_[static_cast<std::size_t>(from)], to);
  insert_sorted(parents_[static_cast<std::size_t>(to)], from);
  ++arc_count_;
}

void Dag::remove_arc(int from, int to) {
  if (!has_arc(from, to)) {
    throw ValidationError("missing arc " + label(from) + " -> " + label(to));
  }
  erase_sorted(children_[static_cast<std::size_t>(from)], to);
  erase_sorted(parents_[static_cast<std::size_t>(to)], from);
  --arc_count_;
}

std::vector<Arc> Dag::arcs() const {
  std::vector<Arc> out;
  out.reserve(static_cast<std::size_t>(arc_count_));
  for (int u = 0; u < node_count(); ++u) {
    for (const int v : children_[static_cast<std::size_t>(u)]) out.push_back({u, v});
  }
  return out;  // already sorted: u ascending, children sorted
}

void Dag::apply(const DagChange& change) {
  switch (change.kind) {
    case ChangeKind::Add:
      if (has_arc(change.from, change.to)) {
        throw InvalidChangeError("add: arc already present");
      }
      add_arc(change.from, change.to);
      return;
    case ChangeKind::Delete:
      if (!has_arc(change.from, change.to)) {
        throw InvalidChangeError("delete: arc not present");
      }
      remove_arc(change.from, change.to);
      return;
    case ChangeKind::Reverse:
      if (!has_arc(change.from, change.to)) {
        throw InvalidChangeError("reverse: arc not present");
      }
      remove_arc(change.from, change.to);
      add_arc(change.to, change.from);
      return;
  }
  throw InvalidChangeError("unknown change kind");
}

Pdag::Pdag(std::vector<std::string> labels)
    : labels_(std::move(labels)), index_(build_index(labels_)) {}

int Pdag::index_of(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  return it == index_.end() ? -1 : it->second;
}

bool Pdag::has_directed(int from, int to) const {
  const Arc a{from, to};
  return std::binary_search(directed_.begin(), directed_.end(), a);
}

bool Pdag::has_undirected(int a, int b) const {
  const Arc e{std::min(a, b), std::max(a, b)};
  return std::binary_search(undirected_.begin(), undirected_.end(), e);
}

bool Pdag::adjacent(int a, int b) const {
  return has_directed(a, b) || has_directed(b, a) || has_undirected(a, b);
}

void Pdag::add_directed(int from, int to) {
  check_node(from, node_count(), "add_directed");
  check_node(to, node_count(), "add_directed");
  if (from == to) throw ValidationError("self-loop on " + label(from));
  if (adjacent(from, to)) {
    throw ValidationError("pair already connected: " + label(from) + ", " + label(to));
  }
  const Arc a{from, to};
  directed_.insert(std::lower_bound(directed_.begin(), directed_.end(), a), a);
}

void Pdag::add_undirected(int a, int b) {
  check_node(a, node_count(), "add_undirected");
  check_node(b, node_count(), "add_undirected");
  if (a == b) throw ValidationError("self-loop on " + label(a));
  if (adjacent(a, b)) {
    throw ValidationError("pair already connected: " + label(a) + ", " + label(b));
  }
  const Arc e{std::min(a, b), std::max(a, b)};
  undirected_.insert(std::lower_bound(undirected_.begin(), undirected_.end(), e), e);
}

bool is_acyclic(const Dag& dag) {
  const int n = dag.node_count();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    indegree[static_cast<std::size_t>(v)] = static_cast<int>(dag.parents(v).size());
  }
  std::vector<int> stack;
  for (int v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) stack.push_back(v);
  }
  int emitted = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    ++emitted;
    for (const int c : dag.children(v)) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) stack.push_back(c);
    }
  }
  return emitted == n;
}

namespace {

// Is dst reachable from src, optionally ignoring one arc?
bool reachable(const Dag& dag, int src, int dst, const Arc* skip = nullptr) {
  if (src == dst) return true;
  std::vector<char> seen(static_cast<std::size_t>(dag.node_count()), 0);
  std::vector<int> stack{src};
  seen[static_cast<std::size_t>(src)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const int c : dag.children(v)) {
      if (skip != nullptr && skip->from == v && skip->to == c) continue;
      if (c == dst) return true;
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
  }
  return false;
}

}  // namespace

bool would_create_cycle(const Dag& dag, const DagChange& change) {
  switch (change.kind) {
    case ChangeKind::Add:
      if (dag.has_arc(change.from, change.to)) {
        throw InvalidChangeError("add: arc already present");
      }
      return reachable(dag, change.to, change.from);
    case ChangeKind::Delete:
      if (!dag.has_arc(change.from, change.to)) {
        throw InvalidChangeError("delete: arc not present");
      }
      return false;
    case ChangeKind::Reverse: {
      if (!dag.has_arc(change.from, change.to)) {
        throw InvalidChangeError("reverse: arc not present");
      }
      // Checked as delete (from,to) then add (to,from): a cycle appears iff
      // another path from -> to survives the deletion.
      const Arc direct{change.from, change.to};
      return reachable(dag, change.from, change.to, &direct);
    }
  }
  throw InvalidChangeError("unknown change kind");
}

std::vector<int> topological_order(const Dag& dag, const std::vector<int>& tie_break) {
  const int n = dag.node_count();
  if (static_cast<int>(tie_break.size()) != n) {
    throw ValidationError("tie_break must order all nodes");
  }
  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  for (int pos = 0; pos < n; ++pos) {
    const int v = tie_break[static_cast<std::size_t>(pos)];
    check_node(v, n, "tie_break");
    if (rank[static_cast<std::size_t>(v)] != -1) {
      throw ValidationError("tie_break repeats a node");
    }
    rank[static_cast<std::size_t>(v)] = pos;
  }

  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    indegree[static_cast<std::size_t>(v)] = static_cast<int>(dag.parents(v).size());
  }
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (done[static_cast<std::size_t>(v)] || indegree[static_cast<std::size_t>(v)] != 0) {
        continue;
      }
      if (best == -1 ||
          rank[static_cast<std::size_t>(v)] < rank[static_cast<std::size_t>(best)]) {
        best = v;
      }
    }
    if (best == -1) throw CycleError("graph is cyclic");
    done[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
    for (const int c : dag.children(best)) --indegree[static_cast<std::size_t>(c)];
  }
  return order;
}

namespace {

std::vector<int> identity_order(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

enum class EdgeStatus { Unknown, Compelled, Reversible };

}  // namespace

Pdag dag_to_cpdag(const Dag& dag) {
  const int n = dag.node_count();
  const std::vector<int> topo = topological_order(dag, identity_order(n));
  std::vector<int> rank(static_cast<std::size_t>(n), 0);
  for (int pos = 0; pos < n; ++pos) {
    rank[static_cast<std::size_t>(topo[static_cast<std::size_t>(pos)])] = pos;
  }

  // Chickering's edge ordering: children by ascending topological rank,
  // parents within a child by descending rank.
  std::vector<Arc> edges = dag.arcs();
  std::sort(edges.begin(), edges.end(), [&rank](const Arc& a, const Arc& b) {
    const int ra = rank[static_cast<std::size_t>(a.to)];
    const int rb = rank[static_cast<std::size_t>(b.to)];
    if (ra != rb) return ra < rb;
    return rank[static_cast<std::size_t>(a.from)] > rank[static_cast<std::size_t>(b.from)];
  });

  std::vector<std::vector<int>> edge_id(static_cast<std::size_t>(n),
                                        std::vector<int>(static_cast<std::size_t>(n), -1));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edge_id[static_cast<std::size_t>(edges[i].from)][static_cast<std::size_t>(edges[i].to)] =
        static_cast<int>(i);
  }

  std::vector<EdgeStatus> status(edges.size(), EdgeStatus::Unknown);
  const auto status_of = [&](int u, int v) -> EdgeStatus& {
    return status[static_cast<std::size_t>(
        edge_id[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)])];
  };

  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (status[i] != EdgeStatus::Unknown) continue;
    const int x = edges[i].from;
    const int y = edges[i].to;

    bool labelled_via_w = false;
    for (const int w : dag.parents(x)) {
      if (status_of(w, x) != EdgeStatus::Compelled) continue;
      if (!dag.has_arc(w, y)) {
        for (const int p : dag.parents(y)) {
          if (status_of(p, y) == EdgeStatus::Unknown) status_of(p, y) = EdgeStatus::Compelled;
        }
        labelled_via_w = true;
        break;
      }
      status_of(w, y) = EdgeStatus::Compelled;
    }
    if (labelled_via_w) continue;

    bool has_external_parent = false;
    for (const int z : dag.parents(y)) {
      if (z != x && !dag.has_arc(z, x)) {
        has_external_parent = true;
        break;
      }
    }
    const EdgeStatus verdict =
        has_external_parent ? EdgeStatus::Compelled : EdgeStatus::Reversible;
    for (const int p : dag.parents(y)) {
      if (status_of(p, y) == EdgeStatus::Unknown) status_of(p, y) = verdict;
    }
  }

  Pdag out(dag.labels());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (status[i] == EdgeStatus::Compelled) {
      out.add_directed(edges[i].from, edges[i].to);
    } else {
      out.add_undirected(edges[i].from, edges[i].to);
    }
  }
  return out;
}

Pdag as_pdag(const Dag& dag) {
  Pdag out(dag.labels());
  for (const Arc& a : dag.arcs()) out.add_directed(a.from, a.to);
  return out;
}

namespace {

struct NamedEdge {
  std::string a;
  std::string b;
  bool directed = false;
  friend auto operator<=>(const NamedEdge&, const NamedEdge&) = default;
};

std::string render(const std::vector<std::string>& labels, std::vector<NamedEdge> edges) {
  std::vector<std::string> sorted_labels = labels;
  std::sort(sorted_labels.begin(), sorted_labels.end());
  std::sort(edges.begin(), edges.end());
  std::ostringstream out;
  out << "nodes: ";
  for (std::size_t i = 0; i < sorted_labels.size(); ++i) {
    if (i > 0) out << ',';
    out << sorted_labels[i];
  }
  out << '\n';
  for (const NamedEdge& e : edges) {
    out << e.a << (e.directed ? " -> " : " -- ") << e.b << '\n';
  }
  return out.str();
}

}  // namespace

std::string serialize_graph(const Pdag& g) {
  std::vector<NamedEdge> edges;
  edges.reserve(static_cast<std::size_t>(g.edge_count()));
  for (const Arc& a : g.directed_edges()) {
    edges.push_back({g.label(a.from), g.label(a.to), true});
  }
  for (const Arc& e : g.undirected_edges()) {
    std::string x = g.label(e.from);
    std::string y = g.label(e.to);
    if (y < x) std::swap(x, y);
    edges.push_back({std::move(x), std::move(y), false});
  }
  return render(g.labels(), std::move(edges));
}

std::string serialize_graph(const Dag& g) { return serialize_graph(as_pdag(g)); }

Pdag parse_graph(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("graph file is empty");
  line = trim(line);
  constexpr std::string_view kHeader = "nodes:";
  if (line.rfind(kHeader, 0) != 0) {
    throw ParseError("graph file must start with a 'nodes:' header");
  }
  std::vector<std::string> labels;
  for (const std::string& piece : split(line.substr(kHeader.size()), ',')) {
    const std::string label = trim(piece);
    if (!label.empty()) labels.push_back(label);
  }
  if (labels.empty()) throw ParseError("graph header lists no nodes");
  Pdag g(std::move(labels));

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    bool directed = true;
    std::size_t pos = line.find(" -> ");
    if (pos == std::string::npos) {
      pos = line.find(" -- ");
      directed = false;
    }
    if (pos == std::string::npos) {
      throw ParseError("graph line " + std::to_string(line_no) + ": expected 'u -> v' or 'u -- v'");
    }
    const std::string a = trim(line.substr(0, pos));
    const std::string b = trim(line.substr(pos + 4));
    const int ia = g.index_of(a);
    const int ib = g.index_of(b);
    if (ia < 0 || ib < 0) {
      throw ParseError("graph line " + std::to_string(line_no) + ": unknown node");
    }
    if (directed) {
      g.add_directed(ia, ib);
    } else {
      g.add_undirected(ia, ib);
    }
  }
  return g;
}

namespace {

std::vector<std::string> mapped_labels(const std::vector<std::string>& labels,
                                       const std::unordered_map<std::string, std::string>& map) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const std::string& l : labels) {
    const auto it = map.find(l);
    if (it == map.end()) throw ValidationError("rename_nodes: no mapping for label " + l);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Dag rename_nodes(const Dag& g, const std::unordered_map<std::string, std::string>& name_map) {
  Dag out(mapped_labels(g.labels(), name_map));
  for (const Arc& a : g.arcs()) out.add_arc(a.from, a.to);
  return out;
}

Pdag rename_nodes(const Pdag& g, const std::unordered_map<std::string, std::string>& name_map) {
  Pdag out(mapped_labels(g.labels(), name_map));
  for (const Arc& a : g.directed_edges()) out.add_directed(a.from, a.to);
  for (const Arc& e : g.undirected_edges()) out.add_undirected(e.from, e.to);
  return out;
}

std::uint64_t graph_fingerprint(const Pdag& g) {
  StableHash h;
  h.feed(serialize_graph(g));
  return h.value();
}

}  // namespace stablebn
