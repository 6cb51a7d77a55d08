#include "stablebn/scoring.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "stablebn/errors.hpp"

namespace stablebn {

ScoreKind score_kind_from_name(std::string_view name) {
  if (name == "bic") return ScoreKind::BicCategorical;
  if (name == "bdeu") return ScoreKind::Bdeu;
  if (name == "bic-g") return ScoreKind::BicGaussian;
  throw ConfigError("unknown score kind: " + std::string(name));
}

std::string score_kind_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::BicCategorical: return "bic";
    case ScoreKind::Bdeu: return "bdeu";
    case ScoreKind::BicGaussian: return "bic-g";
  }
  return "?";
}

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (const double v : values) acc += v;
  return acc;
}

namespace {

constexpr std::int64_t kDenseLimit = std::int64_t{1} << 22;

std::vector<int> canonical_parents(const Dataset& data, int node, std::span<const int> parents) {
  if (node < 0 || node >= data.var_count()) throw ValidationError("node index out of range");
  std::vector<int> sorted(parents.begin(), parents.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("duplicate parent");
  }
  for (const int p : sorted) {
    if (p < 0 || p >= data.var_count()) throw ValidationError("parent index out of range");
    if (p == node) {
      throw ValidationError("node " + data.variable(node).label + " cannot be its own parent");
    }
  }
  return sorted;
}

struct CatCounts {
  std::vector<std::int64_t> cells;    // nonzero N_ijk, as a multiset
  std::vector<std::int64_t> margins;  // nonzero N_ij, as a multiset
  std::int64_t q = 1;                 // possible parent-state combinations
  std::int64_t r = 1;
};

CatCounts categorical_counts(const Dataset& data, int node, std::span<const int> parents) {
  const std::int64_t rows = data.row_count();
  CatCounts out;
  out.r = data.variable(node).cardinality();
  for (const int p : parents) {
    const std::int64_t card = data.variable(p).cardinality();
    if (out.q > (std::int64_t{1} << 53) / card) {
      throw ValidationError("parent state space too large for " + data.variable(node).label);
    }
    out.q *= card;
  }

  const std::vector<std::int32_t>& node_col = data.cat_column(node);
  const auto combo_of = [&](std::int64_t row) {
    std::int64_t j = 0;
    for (const int p : parents) {
      j = j * data.variable(p).cardinality() +
          data.cat_column(p)[static_cast<std::size_t>(row)];
    }
    return j;
  };

  if (out.q <= kDenseLimit / out.r) {
    std::vector<std::int64_t> cells(static_cast<std::size_t>(out.q * out.r), 0);
    std::vector<std::int64_t> margins(static_cast<std::size_t>(out.q), 0);
    for (std::int64_t t = 0; t < rows; ++t) {
      const std::int64_t j = combo_of(t);
      ++cells[static_cast<std::size_t>(j * out.r + node_col[static_cast<std::size_t>(t)])];
      ++margins[static_cast<std::size_t>(j)];
    }
    for (const std::int64_t c : cells) {
      if (c > 0) out.cells.push_back(c);
    }
    for (const std::int64_t m : margins) {
      if (m > 0) out.margins.push_back(m);
    }
  } else {
    std::map<std::int64_t, std::int64_t> cells;
    std::map<std::int64_t, std::int64_t> margins;
    for (std::int64_t t = 0; t < rows; ++t) {
      const std::int64_t j = combo_of(t);
      ++cells[j * out.r + node_col[static_cast<std::size_t>(t)]];
      ++margins[j];
    }
    for (const auto& [key, c] : cells) out.cells.push_back(c);
    for (const auto& [key, m] : margins) out.margins.push_back(m);
  }
  std::sort(out.cells.begin(), out.cells.end());
  std::sort(out.margins.begin(), out.margins.end());
  return out;
}

double entropy_sum(const std::vector<std::int64_t>& sorted_counts) {
  double acc = 0.0;
  for (const std::int64_t c : sorted_counts) {
    acc += static_cast<double>(c) * std::log(static_cast<double>(c));
  }
  return acc;
}

void require_categorical(const Dataset& data) {
  if (data.kind() != DataKind::Categorical) {
    throw ValidationError("score requires categorical data");
  }
}

}  // namespace

double cat_log_likelihood(const Dataset& data, int node, std::span<const int> parents) {
  require_categorical(data);
  const std::vector<int> sorted = canonical_parents(data, node, parents);
  const CatCounts counts = categorical_counts(data, node, sorted);
  return entropy_sum(counts.cells) - entropy_sum(counts.margins);
}

double node_score_bic_cat(const Dataset& data, int node, std::span<const int> parents) {
  require_categorical(data);
  const std::vector<int> sorted = canonical_parents(data, node, parents);
  const CatCounts counts = categorical_counts(data, node, sorted);
  const double loglik = entropy_sum(counts.cells) - entropy_sum(counts.margins);
  const double free_params = static_cast<double>(counts.q * (counts.r - 1));
  const double penalty =
      0.5 * std::log(static_cast<double>(data.row_count())) * free_params;
  return loglik - penalty;
}

double node_score_bdeu(const Dataset& data, int node, std::span<const int> parents,
                       const BdeuConfig& cfg) {
  require_categorical(data);
  if (!(cfg.iss > 0.0)) throw ConfigError("BDeu imaginary sample size must be > 0");
  const std::vector<int> sorted = canonical_parents(data, node, parents);
  const CatCounts counts = categorical_counts(data, node, sorted);

  const double a = cfg.iss / static_cast<double>(counts.q);
  const double b = cfg.iss / static_cast<double>(counts.r * counts.q);

  double margin_term = 0.0;
  for (const std::int64_t m : counts.margins) {
    margin_term += std::lgamma(static_cast<double>(m) + a);
  }
  double cell_term = 0.0;
  for (const std::int64_t c : counts.cells) {
    cell_term += std::lgamma(static_cast<double>(c) + b);
  }
  return (static_cast<double>(counts.margins.size()) * std::lgamma(a) - margin_term) +
         (cell_term - static_cast<double>(counts.cells.size()) * std::lgamma(b));
}

namespace {

// Deterministic dot products over a value multiset: the term vector is sorted
// before accumulation, so row order never reaches the floating-point sum.
double product_sum(Eigen::Ref<const Eigen::VectorXd> x, Eigen::Ref<const Eigen::VectorXd> y) {
  std::vector<double> terms(static_cast<std::size_t>(x.size()));
  for (Eigen::Index t = 0; t < x.size(); ++t) terms[static_cast<std::size_t>(t)] = x(t) * y(t);
  return sorted_sum(std::move(terms));
}

double value_sum(Eigen::Ref<const Eigen::VectorXd> x) {
  return sorted_sum(std::vector<double>(x.data(), x.data() + x.size()));
}

// Content-derived parent order: columns compare by their sorted value
// sequences, so the regression sees the same design matrix no matter how the
// dataset's columns are arranged or named. Exact duplicates tie and keep
// their current relative order (the documented duplicate-variable exemption).
std::vector<int> content_order(const Dataset& data, const std::vector<int>& parents) {
  std::vector<std::vector<double>> keys;
  keys.reserve(parents.size());
  for (const int p : parents) {
    const auto col = data.cont_column(p);
    std::vector<double> key(col.data(), col.data() + col.size());
    std::sort(key.begin(), key.end());
    keys.push_back(std::move(key));
  }
  std::vector<std::size_t> idx(parents.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&keys](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<int> ordered;
  ordered.reserve(parents.size());
  for (const std::size_t i : idx) ordered.push_back(parents[i]);
  return ordered;
}

}  // namespace

double node_score_bic_gauss(const Dataset& data, int node, std::span<const int> parents) {
  if (data.kind() != DataKind::Continuous) {
    throw ValidationError("Gaussian score requires continuous data");
  }
  const std::vector<int> sorted = canonical_parents(data, node, parents);
  const std::int64_t rows = data.row_count();
  const int p = static_cast<int>(sorted.size());
  if (rows <= p + 1) {
    throw ValidationError("Gaussian score needs more rows than parents + 1");
  }
  const std::vector<int> ordered = content_order(data, sorted);

  const auto y = data.cont_column(node);
  const int dim = p + 1;  // intercept + parents
  Eigen::MatrixXd gram(dim, dim);
  Eigen::VectorXd moment(dim);
  gram(0, 0) = static_cast<double>(rows);
  moment(0) = value_sum(y);
  for (int i = 0; i < p; ++i) {
    const auto zi = data.cont_column(ordered[static_cast<std::size_t>(i)]);
    gram(0, i + 1) = value_sum(zi);
    gram(i + 1, 0) = gram(0, i + 1);
    moment(i + 1) = product_sum(zi, y);
    for (int j = i; j < p; ++j) {
      const auto zj = data.cont_column(ordered[static_cast<std::size_t>(j)]);
      gram(i + 1, j + 1) = product_sum(zi, zj);
      gram(j + 1, i + 1) = gram(i + 1, j + 1);
    }
  }
  const double y_squared = product_sum(y, y);

  // Minimum-norm solution of the normal equations; collinear parents resolve
  // through the pseudoinverse instead of failing.
  const Eigen::VectorXd beta =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).solve(moment);
  const double rss = y_squared - 2.0 * moment.dot(beta) + beta.dot(gram * beta);
  const double sigma2 = std::max(rss / static_cast<double>(rows), 1e-12);

  const double loglik =
      -0.5 * static_cast<double>(rows) * (std::log(2.0 * M_PI * sigma2) + 1.0);
  const double penalty =
      0.5 * std::log(static_cast<double>(rows)) * static_cast<double>(p + 2);
  return loglik - penalty;
}

Scorer::Scorer(const Dataset& data, ScoreConfig cfg) : data_(data), cfg_(cfg) {
  const bool needs_categorical = cfg_.kind != ScoreKind::BicGaussian;
  if (needs_categorical != (data_.kind() == DataKind::Categorical)) {
    throw ConfigError("score kind " + score_kind_name(cfg_.kind) +
                      " does not match the dataset kind");
  }
  if (cfg_.kind == ScoreKind::Bdeu && !(cfg_.bdeu.iss > 0.0)) {
    throw ConfigError("BDeu imaginary sample size must be > 0");
  }
}

double Scorer::compute(int node, std::span<const int> parents) const {
  switch (cfg_.kind) {
    case ScoreKind::BicCategorical: return node_score_bic_cat(data_, node, parents);
    case ScoreKind::Bdeu: return node_score_bdeu(data_, node, parents, cfg_.bdeu);
    case ScoreKind::BicGaussian: return node_score_bic_gauss(data_, node, parents);
  }
  throw ConfigError("unknown score kind");
}

double Scorer::node_score(int node, std::span<const int> parents) {
  std::vector<int> key;
  key.reserve(parents.size() + 1);
  key.push_back(node);
  key.insert(key.end(), parents.begin(), parents.end());
  std::sort(key.begin() + 1, key.end());
  const auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  const double value = compute(node, std::span<const int>(key).subspan(1));
  cache_.emplace(std::move(key), value);
  return value;
}

double Scorer::dag_score(const Dag& dag) {
  if (dag.node_count() != data_.var_count()) {
    throw ValidationError("dag and dataset have different variable counts");
  }
  std::vector<double> node_scores;
  node_scores.reserve(static_cast<std::size_t>(dag.node_count()));
  for (int v = 0; v < dag.node_count(); ++v) {
    const int col = data_.index_of(dag.label(v));
    if (col < 0) throw ValidationError("dataset misses variable " + dag.label(v));
    std::vector<int> parent_cols;
    parent_cols.reserve(dag.parents(v).size());
    for (const int p : dag.parents(v)) {
      const int pcol = data_.index_of(dag.label(p));
      if (pcol < 0) throw ValidationError("dataset misses variable " + dag.label(p));
      parent_cols.push_back(pcol);
    }
    node_scores.push_back(node_score(col, parent_cols));
  }
  return sorted_sum(std::move(node_scores));
}

double normalized_score(double total, std::int64_t n_rows) {
  if (n_rows < 1) throw ValidationError("normalized_score: N must be >= 1");
  return total / static_cast<double>(n_rows);
}

}  // namespace stablebn
