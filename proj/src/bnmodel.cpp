#include "stablebn/bnmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "stablebn/errors.hpp"
#include "stablebn/rng.hpp"

namespace stablebn {

namespace {

using nlohmann::json;

std::vector<std::string> sorted_parent_labels(const Dag& dag, int node) {
  std::vector<std::string> labels;
  for (const int p : dag.parents(node)) labels.push_back(dag.label(p));
  std::sort(labels.begin(), labels.end());
  return labels;
}

// All parent-state combinations as row keys, in mixed-radix order over the
// alphabetical parent list with each parent's states in declared order.
std::vector<std::string> all_row_keys(const std::vector<const CptNode*>& parents_in_label_order) {
  std::vector<std::string> keys{""};
  for (const CptNode* parent : parents_in_label_order) {
    std::vector<std::string> next;
    next.reserve(keys.size() * parent->states.size());
    for (const std::string& prefix : keys) {
      for (const std::string& state : parent->states) {
        next.push_back(prefix.empty() ? state : prefix + "|" + state);
      }
    }
    keys = std::move(next);
  }
  return keys;
}

}  // namespace

NetworkModel NetworkModel::parse(std::string_view json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }

  NetworkModel model;
  model.name_ = doc.value("name", origin);
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "categorical") {
    model.kind_ = DataKind::Categorical;
  } else if (kind == "continuous") {
    model.kind_ = DataKind::Continuous;
  } else {
    throw ValidationError(origin + ": unknown kind '" + kind + "'");
  }

  model.dag_ = Dag(doc.at("nodes").get<std::vector<std::string>>());
  for (const auto& arc : doc.at("arcs")) {
    const int from = model.dag_.index_of(arc.at(0).get<std::string>());
    const int to = model.dag_.index_of(arc.at(1).get<std::string>());
    if (from < 0 || to < 0) throw ValidationError(origin + ": arc references unknown node");
    model.dag_.add_arc(from, to);
  }
  if (!is_acyclic(model.dag_)) throw ValidationError(origin + ": structure is cyclic");

  if (model.kind_ == DataKind::Categorical) {
    const json& cpts = doc.at("cpts");
    for (int v = 0; v < model.dag_.node_count(); ++v) {
      const std::string& label = model.dag_.label(v);
      if (!cpts.contains(label)) throw ValidationError(origin + ": no CPT for node " + label);
      const json& spec = cpts.at(label);
      CptNode node;
      node.states = spec.at("states").get<std::vector<std::string>>();
      if (node.states.size() < 2) {
        throw ValidationError(origin + ": node " + label + " needs at least 2 states");
      }
      node.parent_labels = sorted_parent_labels(model.dag_, v);
      for (const auto& [key, value] : spec.at("rows").items()) {
        node.rows[key] = value.get<std::vector<double>>();
      }
      model.cpts_[label] = std::move(node);
    }
    // Row coverage and row sums need every parent CPT parsed first.
    for (int v = 0; v < model.dag_.node_count(); ++v) {
      const std::string& label = model.dag_.label(v);
      CptNode& node = model.cpts_[label];
      std::vector<const CptNode*> parents;
      for (const std::string& p : node.parent_labels) parents.push_back(&model.cpts_.at(p));
      const std::vector<std::string> keys = all_row_keys(parents);
      if (node.rows.size() != keys.size()) {
        throw ValidationError(origin + ": node " + label + " has " +
                              std::to_string(node.rows.size()) + " CPT rows, expected " +
                              std::to_string(keys.size()));
      }
      for (const std::string& key : keys) {
        const auto it = node.rows.find(key);
        if (it == node.rows.end()) {
          throw ValidationError(origin + ": node " + label + " misses CPT row '" + key + "'");
        }
        const std::vector<double>& probs = it->second;
        if (probs.size() != node.states.size()) {
          throw ValidationError(origin + ": node " + label + " row '" + key +
                                "' has wrong arity");
        }
        double sum = 0.0;
        for (const double p : probs) {
          if (!(p >= 0.0) || p > 1.0) {
            throw ValidationError(origin + ": node " + label + " row '" + key +
                                  "' holds an invalid probability");
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
          throw ValidationError(origin + ": node " + label + " row '" + key +
                                "' sums to " + std::to_string(sum));
        }
      }
    }
  } else {
    const json& lingauss = doc.at("lingauss");
    for (int v = 0; v < model.dag_.node_count(); ++v) {
      const std::string& label = model.dag_.label(v);
      if (!lingauss.contains(label)) {
        throw ValidationError(origin + ": no parameters for node " + label);
      }
      const json& spec = lingauss.at(label);
      LinGaussNode node;
      node.intercept = spec.at("intercept").get<double>();
      node.sd = spec.at("sd").get<double>();
      if (!(node.sd > 0.0)) throw ValidationError(origin + ": node " + label + " needs sd > 0");
      for (const auto& [key, value] : spec.at("coeffs").items()) {
        node.coeffs[key] = value.get<double>();
      }
      const std::vector<std::string> parents = sorted_parent_labels(model.dag_, v);
      std::vector<std::string> coeff_keys;
      for (const auto& [key, unused] : node.coeffs) coeff_keys.push_back(key);
      if (coeff_keys != parents) {
        throw ValidationError(origin + ": node " + label +
                              " coefficients do not match its parent set");
      }
      model.lingauss_[label] = std::move(node);
    }
  }
  return model;
}

NetworkModel NetworkModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  NetworkModel model = parse(buf.str(), path.stem().string());
  return model;
}

Dataset NetworkModel::sample(std::int64_t n_rows, std::uint64_t seed) const {
  if (n_rows < 1) throw ValidationError("sample: n_rows must be >= 1");
  const int n = dag_.node_count();

  std::vector<int> alphabetical(static_cast<std::size_t>(n));
  std::iota(alphabetical.begin(), alphabetical.end(), 0);
  std::sort(alphabetical.begin(), alphabetical.end(),
            [this](int a, int b) { return dag_.label(a) < dag_.label(b); });
  const std::vector<int> topo = topological_order(dag_, alphabetical);

  Rng rng(seed);

  if (kind_ == DataKind::Categorical) {
    // Values are held as indices into each node's declared state order, then
    // re-coded onto the sorted state lists when the Dataset is assembled.
    std::vector<std::vector<std::int32_t>> declared(static_cast<std::size_t>(n));
    for (auto& col : declared) col.resize(static_cast<std::size_t>(n_rows));
    std::vector<const CptNode*> cpt_of(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) cpt_of[static_cast<std::size_t>(v)] = &cpts_.at(dag_.label(v));

    for (std::int64_t r = 0; r < n_rows; ++r) {
      for (const int v : topo) {
        const CptNode& cpt = *cpt_of[static_cast<std::size_t>(v)];
        std::string key;
        for (const std::string& parent_label : cpt.parent_labels) {
          const int p = dag_.index_of(parent_label);
          const CptNode& pcpt = *cpt_of[static_cast<std::size_t>(p)];
          const std::int32_t pstate = declared[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)];
          if (!key.empty()) key += '|';
          key += pcpt.states[static_cast<std::size_t>(pstate)];
        }
        const std::vector<double>& probs = cpt.rows.at(key);
        const double u = rng.uniform01();
        double cum = 0.0;
        std::int32_t drawn = static_cast<std::int32_t>(probs.size()) - 1;
        for (std::size_t k = 0; k < probs.size(); ++k) {
          cum += probs[k];
          if (u < cum) {
            drawn = static_cast<std::int32_t>(k);
            break;
          }
        }
        declared[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)] = drawn;
      }
    }

    std::vector<VariableMeta> vars(static_cast<std::size_t>(n));
    std::vector<std::vector<std::int32_t>> columns(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      const CptNode& cpt = *cpt_of[static_cast<std::size_t>(v)];
      VariableMeta meta;
      meta.label = dag_.label(v);
      meta.states = cpt.states;
      std::sort(meta.states.begin(), meta.states.end());
      std::vector<std::int32_t> recode(cpt.states.size());
      for (std::size_t k = 0; k < cpt.states.size(); ++k) {
        recode[k] = static_cast<std::int32_t>(
            std::lower_bound(meta.states.begin(), meta.states.end(), cpt.states[k]) -
            meta.states.begin());
      }
      columns[static_cast<std::size_t>(v)].resize(static_cast<std::size_t>(n_rows));
      for (std::int64_t r = 0; r < n_rows; ++r) {
        columns[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)] =
            recode[static_cast<std::size_t>(declared[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)])];
      }
      vars[static_cast<std::size_t>(v)] = std::move(meta);
    }
    return Dataset::make_categorical(std::move(vars), std::move(columns));
  }

  Eigen::MatrixXd values(n_rows, n);
  std::vector<const LinGaussNode*> par_of(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) par_of[static_cast<std::size_t>(v)] = &lingauss_.at(dag_.label(v));
  for (std::int64_t r = 0; r < n_rows; ++r) {
    for (const int v : topo) {
      const LinGaussNode& node = *par_of[static_cast<std::size_t>(v)];
      double value = node.intercept;
      for (const auto& [parent_label, coeff] : node.coeffs) {
        value += coeff * values(r, dag_.index_of(parent_label));
      }
      value += node.sd * rng.normal();
      values(r, v) = value;
    }
  }
  return Dataset::make_continuous(dag_.labels(), std::move(values));
}

FreeParameterCount NetworkModel::free_parameters() const {
  FreeParameterCount out;
  for (int v = 0; v < dag_.node_count(); ++v) {
    const std::string& label = dag_.label(v);
    std::int64_t count = 0;
    if (kind_ == DataKind::Categorical) {
      const CptNode& cpt = cpts_.at(label);
      std::int64_t q = 1;
      for (const std::string& p : cpt.parent_labels) {
        q *= static_cast<std::int64_t>(cpts_.at(p).states.size());
      }
      count = q * (static_cast<std::int64_t>(cpt.states.size()) - 1);
    } else {
      count = static_cast<std::int64_t>(dag_.parents(v).size()) + 2;
    }
    out.per_node[label] = count;
    out.total += count;
  }
  return out;
}

FreeParameterCount free_parameters(const Dag& dag, const Dataset& data) {
  FreeParameterCount out;
  for (int v = 0; v < dag.node_count(); ++v) {
    const std::string& label = dag.label(v);
    const int col = data.index_of(label);
    if (col < 0) throw ValidationError("free_parameters: dataset misses variable " + label);
    std::int64_t count = 0;
    if (data.kind() == DataKind::Categorical) {
      std::int64_t q = 1;
      for (const int p : dag.parents(v)) {
        const int pcol = data.index_of(dag.label(p));
        q *= data.variable(pcol).cardinality();
      }
      count = q * (data.variable(col).cardinality() - 1);
    } else {
      count = static_cast<std::int64_t>(dag.parents(v).size()) + 2;
    }
    out.per_node[label] = count;
    out.total += count;
  }
  return out;
}

}  // namespace stablebn
