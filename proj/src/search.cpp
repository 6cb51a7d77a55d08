#include "stablebn/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "stablebn/errors.hpp"

namespace stablebn {

DeltaTable::DeltaTable(Scorer& scorer, const Dag& dag)
    : scorer_(scorer),
      dag_(dag),
      add_(Eigen::MatrixXd::Zero(dag.node_count(), dag.node_count())),
      del_(Eigen::MatrixXd::Zero(dag.node_count(), dag.node_count())),
      node_scores_(static_cast<std::size_t>(dag.node_count()), 0.0) {
  const int n = dag_.node_count();
  if (n != scorer_.data().var_count()) {
    throw ValidationError("delta table: dag and dataset differ in size");
  }
  for (int v = 0; v < n; ++v) {
    if (dag_.label(v) != scorer_.data().variable(v).label) {
      throw ValidationError("delta table: node indices must match dataset columns");
    }
  }
  for (int v = 0; v < n; ++v) refresh_child(v);
}

void DeltaTable::refresh_child(int v) {
  const std::vector<int>& parents = dag_.parents(v);
  const double current = scorer_.node_score(v, parents);
  node_scores_[static_cast<std::size_t>(v)] = current;

  std::vector<int> scratch;
  scratch.reserve(parents.size() + 1);
  for (int w = 0; w < dag_.node_count(); ++w) {
    if (w == v) continue;
    scratch.assign(parents.begin(), parents.end());
    if (dag_.has_arc(w, v)) {
      scratch.erase(std::find(scratch.begin(), scratch.end(), w));
      del_(w, v) = scorer_.node_score(v, scratch) - current;
      add_(w, v) = 0.0;
    } else {
      scratch.push_back(w);
      add_(w, v) = scorer_.node_score(v, scratch) - current;
      del_(w, v) = 0.0;
    }
  }
}

double DeltaTable::delta_of(const DagChange& change) const {
  switch (change.kind) {
    case ChangeKind::Add: return add_delta(change.from, change.to);
    case ChangeKind::Delete: return delete_delta(change.from, change.to);
    case ChangeKind::Reverse: return reverse_delta(change.from, change.to);
  }
  throw InvalidChangeError("unknown change kind");
}

void DeltaTable::update(const DagChange& applied) {
  refresh_child(applied.to);
  if (applied.kind == ChangeKind::Reverse) refresh_child(applied.from);
}

double DeltaTable::current_total() const { return sorted_sum(node_scores_); }

bool deltas_tie(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-8 * scale;
}

namespace {

std::vector<int> column_order(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

std::vector<int> ranks_of(const std::vector<int>& order) {
  std::vector<int> rank(order.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);
  }
  return rank;
}

// Sorted arc list with one change applied; the exact tabu-list fingerprint.
std::vector<Arc> arcs_after(std::vector<Arc> arcs, const DagChange& change) {
  const auto erase_arc = [&arcs](int from, int to) {
    const Arc a{from, to};
    arcs.erase(std::lower_bound(arcs.begin(), arcs.end(), a));
  };
  const auto insert_arc = [&arcs](int from, int to) {
    const Arc a{from, to};
    arcs.insert(std::lower_bound(arcs.begin(), arcs.end(), a), a);
  };
  switch (change.kind) {
    case ChangeKind::Add: insert_arc(change.from, change.to); break;
    case ChangeKind::Delete: erase_arc(change.from, change.to); break;
    case ChangeKind::Reverse:
      erase_arc(change.from, change.to);
      insert_arc(change.to, change.from);
      break;
  }
  return arcs;
}

class TabuList {
 public:
  explicit TabuList(int capacity) : capacity_(static_cast<std::size_t>(capacity)) {}

  void insert(std::vector<Arc> fingerprint) {
    entries_.push_back(std::move(fingerprint));
    if (entries_.size() > capacity_) entries_.pop_front();
  }

  bool contains(const std::vector<Arc>& fingerprint) const {
    for (const auto& e : entries_) {
      if (e == fingerprint) return true;
    }
    return false;
  }

 private:
  std::size_t capacity_;
  std::deque<std::vector<Arc>> entries_;
};

struct EngineOptions {
  bool use_tabu = false;
  const std::vector<int>* stable_order = nullptr;  // enables the equivalent-change rule
  bool keep_log = false;
};

Dag dag_from_arcs(const std::vector<std::string>& labels, const std::vector<Arc>& arcs) {
  Dag dag(labels);
  for (const Arc& a : arcs) dag.add_arc(a.from, a.to);
  return dag;
}

SearchResult run_engine(Scorer& scorer, const SearchParams& params,
                        const std::vector<int>& tie_order, const EngineOptions& opts) {
  if (params.tabu_len < 1 || params.noinc < 1 || params.max_iter < 1) {
    throw ConfigError("search parameters must be >= 1");
  }
  const Dataset& data = scorer.data();
  const int n = data.var_count();
  if (static_cast<int>(tie_order.size()) != n) {
    throw ConfigError("tie_order must rank every variable");
  }

  Dag dag(data.labels());
  DeltaTable deltas(scorer, dag);
  const std::vector<int> rank = ranks_of(tie_order);
  std::vector<int> stable_rank;
  if (opts.stable_order != nullptr) stable_rank = ranks_of(*opts.stable_order);

  // Ordered node pairs by (rank[from], rank[to]); candidate enumeration walks
  // these once per change kind, delete < reverse < add.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1));
  for (const int u : tie_order) {
    for (const int v : tie_order) {
      if (u != v) pairs.emplace_back(u, v);
    }
  }

  TabuList tabulist(params.tabu_len);
  std::vector<Arc> current_arcs;
  double current_total = deltas.current_total();
  std::vector<Arc> best_arcs = current_arcs;
  double best_total = current_total;

  SearchResult result;
  std::int64_t applied_count = 0;
  int since_improve = 0;

  const auto admissible = [&](const DagChange& change) {
    if (would_create_cycle(dag, change)) return false;
    if (opts.use_tabu && tabulist.contains(arcs_after(current_arcs, change))) return false;
    return true;
  };

  while (true) {
    if (params.deadline && std::chrono::steady_clock::now() > *params.deadline) {
      throw TimeoutError("search exceeded its time limit");
    }
    bool have_best = false;
    DagChange best_change;
    double best_delta = 0.0;
    bool have_equiv = false;
    DagChange equiv_change;

    for (const ChangeKind kind : {ChangeKind::Delete, ChangeKind::Reverse, ChangeKind::Add}) {
      for (const auto& [u, v] : pairs) {
        if (kind == ChangeKind::Add) {
          if (dag.has_arc(u, v) || dag.has_arc(v, u)) continue;
        } else {
          if (!dag.has_arc(u, v)) continue;
        }
        const DagChange cand{kind, u, v};
        const double delta = deltas.delta_of(cand);
        if (have_best && kind == ChangeKind::Add && best_change.kind == ChangeKind::Add &&
            best_change.from == v && best_change.to == u && deltas_tie(delta, best_delta)) {
          if (!have_equiv && admissible(cand)) {
            equiv_change = cand;
            have_equiv = true;
          }
          continue;
        }
        if (!have_best || delta > best_delta) {
          if (!admissible(cand)) continue;
          best_change = cand;
          best_delta = delta;
          have_best = true;
          have_equiv = false;
        }
      }
    }

    if (!have_best) break;                          // nothing admissible
    if (!opts.use_tabu && best_delta <= 0.0) break; // HC: only improving changes

    const bool orientation_tie = have_equiv;
    if (have_equiv && opts.stable_order != nullptr) {
      // An addition u -> v is consistent with the stable order iff u precedes v.
      if (stable_rank[static_cast<std::size_t>(equiv_change.from)] <
          stable_rank[static_cast<std::size_t>(equiv_change.to)]) {
        best_delta = deltas.delta_of(equiv_change);
        best_change = equiv_change;
      }
    }

    if (applied_count >= params.max_iter) {
      throw SearchLimitError("search exceeded max_iter = " + std::to_string(params.max_iter));
    }

    dag.apply(best_change);
    deltas.update(best_change);
    current_arcs = arcs_after(std::move(current_arcs), best_change);
    current_total = deltas.current_total();
    ++applied_count;
    if (opts.use_tabu) tabulist.insert(current_arcs);

    // A change "increased the score" when it beat the best DAG so far; this
    // is the only reading that terminates, since best scores over the finite
    // DAG space can only improve finitely often (score-equivalent plateaus
    // carry last-bit delta noise that would otherwise reset the window).
    const bool improved = current_total > best_total;
    if (improved) {
      best_total = current_total;
      best_arcs = current_arcs;
    }

    if (opts.keep_log) {
      result.log.push_back(ChangeLogEntry{applied_count, best_change, best_delta,
                                          orientation_tie, current_total, best_total});
    }

    if (opts.use_tabu) {
      since_improve = improved ? 0 : since_improve + 1;
      if (since_improve >= params.noinc) break;
    }
  }

  result.dag = dag_from_arcs(data.labels(), opts.use_tabu ? best_arcs : current_arcs);
  result.total_score = opts.use_tabu ? best_total : current_total;
  result.iterations = applied_count;
  return result;
}

bool sort_key_less_desc(const SortKey& a, const SortKey& b) {
  if (a.uncond != b.uncond) return a.uncond > b.uncond;
  if (a.cond_mean != b.cond_mean) return a.cond_mean > b.cond_mean;
  return a.rendition > b.rendition;
}

}  // namespace

SortKey sort_key(Scorer& scorer, int variable) {
  const Dataset& data = scorer.data();
  const int n = data.var_count();
  SortKey key;
  key.uncond = scorer.node_score(variable, {});
  if (n > 1) {
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n - 1));
    for (int w = 0; w < n; ++w) {
      if (w == variable) continue;
      const int parent[] = {w};
      terms.push_back(scorer.node_score(variable, parent) / static_cast<double>(n - 1));
    }
    key.cond_mean = sorted_sum(std::move(terms));
  }
  if (data.kind() == DataKind::Categorical) {
    key.rendition = value_counts_rendition(data, variable);
  }
  return key;
}

StableOrder get_stable_order(Scorer& scorer, const SearchParams& params) {
  const int n = scorer.data().var_count();
  std::vector<SortKey> keys;
  keys.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) keys.push_back(sort_key(scorer, v));

  std::vector<int> dec_order = column_order(n);
  std::stable_sort(dec_order.begin(), dec_order.end(), [&keys](int a, int b) {
    return sort_key_less_desc(keys[static_cast<std::size_t>(a)],
                              keys[static_cast<std::size_t>(b)]);
  });
  std::vector<int> inc_order(dec_order.rbegin(), dec_order.rend());

  // Both probes are plain HC runs whose only tie-break is the probe order
  // itself, so they are as order-stable as their input orders.
  const SearchResult inc_run = hc(scorer, params, inc_order);
  const SearchResult dec_run = hc(scorer, params, dec_order);

  StableOrder out;
  if (inc_run.total_score > dec_run.total_score) {
    out.provenance = StableOrder::Branch::Increasing;
    out.sequence = topological_order(inc_run.dag, inc_order);
  } else {
    out.provenance = StableOrder::Branch::Decreasing;
    out.sequence = topological_order(dec_run.dag, dec_order);
  }
  return out;
}

SearchResult hc(Scorer& scorer, const SearchParams& params, const std::vector<int>& tie_order,
                bool keep_log) {
  EngineOptions opts;
  opts.use_tabu = false;
  opts.keep_log = keep_log;
  return run_engine(scorer, params, tie_order, opts);
}

SearchResult tabu(Scorer& scorer, const SearchParams& params, const std::vector<int>& tie_order,
                  bool keep_log) {
  EngineOptions opts;
  opts.use_tabu = true;
  opts.keep_log = keep_log;
  return run_engine(scorer, params, tie_order, opts);
}

namespace {

SearchResult stable_variant(Scorer& scorer, const SearchParams& params, bool use_tabu,
                            bool keep_log) {
  StableOrder order = get_stable_order(scorer, params);
  EngineOptions opts;
  opts.use_tabu = use_tabu;
  opts.stable_order = &order.sequence;
  opts.keep_log = keep_log;
  SearchResult result = run_engine(scorer, params, order.sequence, opts);
  result.has_stable_order = true;
  result.stable_order = std::move(order);
  return result;
}

}  // namespace

SearchResult hc_stable(Scorer& scorer, const SearchParams& params, bool keep_log) {
  return stable_variant(scorer, params, false, keep_log);
}

SearchResult tabu_stable(Scorer& scorer, const SearchParams& params, bool keep_log) {
  return stable_variant(scorer, params, true, keep_log);
}

Algorithm algorithm_from_name(std::string_view name) {
  if (name == "hc") return Algorithm::Hc;
  if (name == "tabu") return Algorithm::Tabu;
  if (name == "hc-stable") return Algorithm::HcStable;
  if (name == "tabu-stable") return Algorithm::TabuStable;
  throw ConfigError("unknown algorithm: " + std::string(name));
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::Hc: return "hc";
    case Algorithm::Tabu: return "tabu";
    case Algorithm::HcStable: return "hc-stable";
    case Algorithm::TabuStable: return "tabu-stable";
  }
  return "?";
}

SearchResult learn(Algorithm algo, Scorer& scorer, const SearchParams& params, bool keep_log) {
  switch (algo) {
    case Algorithm::Hc: return hc(scorer, params, column_order(scorer.data().var_count()), keep_log);
    case Algorithm::Tabu:
      return tabu(scorer, params, column_order(scorer.data().var_count()), keep_log);
    case Algorithm::HcStable: return hc_stable(scorer, params, keep_log);
    case Algorithm::TabuStable: return tabu_stable(scorer, params, keep_log);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace stablebn
