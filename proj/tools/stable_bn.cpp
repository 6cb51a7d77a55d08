#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stablebn/bnmodel.hpp"
#include "stablebn/dataset.hpp"
#include "stablebn/errors.hpp"
#include "stablebn/graph.hpp"
#include "stablebn/harness.hpp"
#include "stablebn/metrics.hpp"
#include "stablebn/scoring.hpp"
#include "stablebn/search.hpp"

namespace {

using nlohmann::json;
using namespace stablebn;

const char* change_kind_name(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::Add: return "add";
    case ChangeKind::Delete: return "delete";
    case ChangeKind::Reverse: return "reverse";
  }
  return "?";
}

int cmd_learn(const std::string& algo_name, const std::string& score_name,
              const std::string& data_path, const std::string& out_path, int tabu_len, int noinc,
              std::int64_t max_iter, double iss, std::uint64_t seed) {
  const Algorithm algo = algorithm_from_name(algo_name);
  ScoreConfig score_cfg;
  score_cfg.kind = score_kind_from_name(score_name);
  score_cfg.bdeu.iss = iss;
  const DataKind kind = score_cfg.kind == ScoreKind::BicGaussian ? DataKind::Continuous
                                                                 : DataKind::Categorical;
  const Dataset data = load_csv(data_path, kind);
  Scorer scorer(data, score_cfg);
  SearchParams params;
  params.tabu_len = tabu_len;
  params.noinc = noinc;
  params.max_iter = max_iter;

  const auto started = std::chrono::steady_clock::now();
  const SearchResult result = learn(algo, scorer, params, /*keep_log=*/false);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();

  const Pdag cpdag = dag_to_cpdag(result.dag);
  json out{{"algorithm", algo_name},
           {"score", score_name},
           {"data", data_path},
           {"seed", seed},
           {"dag", serialize_graph(result.dag)},
           {"cpdag", serialize_graph(cpdag)},
           {"score_total", result.total_score},
           {"score_normalized", normalized_score(result.total_score, data.row_count())},
           {"iterations", result.iterations},
           {"wall_ms", wall_ms}};
  if (result.has_stable_order) {
    json order = json::array();
    for (const int v : result.stable_order.sequence) order.push_back(data.variable(v).label);
    out["stable_order"] = order;
    out["stable_order_branch"] =
        result.stable_order.provenance == StableOrder::Branch::Increasing ? "increasing"
                                                                          : "decreasing";
  }
  if (!out_path.empty()) {
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + out_path);
    file << serialize_graph(result.dag);
    out["out_file"] = out_path;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& learned_path, const std::string& model_path) {
  std::ifstream in(learned_path);
  if (!in) throw ConfigError("cannot open " + learned_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const Pdag parsed = parse_graph(buf.str());

  Pdag learned_cpdag = parsed;
  if (parsed.undirected_edges().empty()) {
    // A fully directed file is a DAG: compare its equivalence class.
    Dag dag(parsed.labels());
    for (const Arc& a : parsed.directed_edges()) dag.add_arc(a.from, a.to);
    if (!is_acyclic(dag)) throw ValidationError(learned_path + ": directed graph is cyclic");
    learned_cpdag = dag_to_cpdag(dag);
  }

  const NetworkModel model = NetworkModel::load(model_path);
  const Pdag truth = dag_to_cpdag(model.dag());
  const ConfusionCounts c = confusion(learned_cpdag, truth);
  const json out{{"learned", learned_path},
                 {"model", model_path},
                 {"tp", c.tp},
                 {"fp", c.fp},
                 {"fn", c.fn},
                 {"tn", c.tn},
                 {"e_true", c.e_true},
                 {"m_true", c.m_true},
                 {"precision", precision(c)},
                 {"recall", recall(c)},
                 {"f1", f1(c)},
                 {"bsf", bsf(c)},
                 {"mean_degree", mean_node_degree(learned_cpdag)}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_inspect(const std::string& data_path, const std::string& kind_name) {
  const DataKind kind = kind_name == "continuous" ? DataKind::Continuous : DataKind::Categorical;
  const Dataset data = load_csv(data_path, kind);
  json variables = json::array();
  for (int v = 0; v < data.var_count(); ++v) {
    json var{{"label", data.variable(v).label}};
    if (kind == DataKind::Categorical) {
      var["cardinality"] = data.variable(v).cardinality();
      var["states"] = data.variable(v).states;
    }
    variables.push_back(std::move(var));
  }
  json groups = json::array();
  for (const std::vector<int>& group : find_duplicate_variables(data)) {
    json labels = json::array();
    for (const int v : group) labels.push_back(data.variable(v).label);
    groups.push_back(std::move(labels));
  }
  const json out{{"data", data_path},
                 {"kind", kind_name},
                 {"n", data.var_count()},
                 {"rows", data.row_count()},
                 {"variables", variables},
                 {"duplicate_groups", groups}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path, double iss) {
  const NetworkModel model = NetworkModel::load(model_path);
  const Dataset data = load_csv(
      data_path, model.kind() == DataKind::Categorical ? DataKind::Categorical
                                                       : DataKind::Continuous);
  json scores;
  const auto add_score = [&](ScoreKind kind) {
    ScoreConfig cfg{kind, BdeuConfig{iss}};
    Scorer scorer(data, cfg);
    const double total = scorer.dag_score(model.dag());
    scores[score_kind_name(kind)] = {{"total", total},
                                     {"normalized", normalized_score(total, data.row_count())}};
  };
  if (model.kind() == DataKind::Categorical) {
    add_score(ScoreKind::BicCategorical);
    add_score(ScoreKind::Bdeu);
  } else {
    add_score(ScoreKind::BicGaussian);
  }
  const json out{{"model", model_path}, {"data", data_path}, {"scores", scores}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_sample(const std::string& model_path, std::int64_t n_rows, std::uint64_t seed,
               const std::string& out_path) {
  const NetworkModel model = NetworkModel::load(model_path);
  const Dataset data = model.sample(n_rows, seed);
  if (out_path.empty()) {
    std::cout << to_csv(data);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + out_path);
    out << to_csv(data);
  }
  return 0;
}

int cmd_suite(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const SuiteResult result = run_suite(cfg, out_dir);

  std::cout << std::left << std::setw(14) << "model" << std::setw(8) << "N" << std::setw(14)
            << "algorithm" << std::right << std::setw(9) << "f1" << std::setw(9) << "f1_sd"
            << std::setw(9) << "bsf" << std::setw(12) << "norm_bic" << std::setw(11) << "bic_sd"
            << std::setw(6) << "t/o" << '\n';
  for (const AggregateRow& row : result.aggregates) {
    std::cout << std::left << std::setw(14) << row.model << std::setw(8) << row.n_rows
              << std::setw(14) << row.algorithm << std::right << std::fixed
              << std::setprecision(4) << std::setw(9) << row.f1.mean << std::setw(9) << row.f1.sd
              << std::setw(9) << row.bsf.mean << std::setw(12) << row.bic.mean << std::setw(11)
              << row.bic.sd << std::setw(6) << row.timeouts << '\n';
    std::cout.unsetf(std::ios::fixed);
  }
  std::cout << "outputs written to " << out_dir << '\n';
  return 0;
}

int cmd_demo(const std::string& model_path, std::int64_t n_rows, std::uint64_t seed) {
  const NetworkModel model = NetworkModel::load(model_path);
  const InstabilityDemo demo = instability_demo(model, n_rows, seed);

  const auto run_to_json = [](const InstabilityRun& run) {
    json entries = json::array();
    for (const ChangeLogEntry& e : run.log) {
      entries.push_back({{"iteration", e.iteration},
                         {"kind", change_kind_name(e.change.kind)},
                         {"from", run.column_order[static_cast<std::size_t>(e.change.from)]},
                         {"to", run.column_order[static_cast<std::size_t>(e.change.to)]},
                         {"delta", e.delta},
                         {"orientation_tie", e.orientation_tie}});
    }
    return json{{"column_order", run.column_order}, {"changes", entries}, {"dag", run.dag_text}};
  };

  const json out{{"model", model_path},
                 {"n_rows", n_rows},
                 {"seed", seed},
                 {"baseline", run_to_json(demo.baseline)},
                 {"shuffled", run_to_json(demo.shuffled)},
                 {"edge_sets_differ", demo.edge_sets_differ}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable-bn: order-stable greedy structure learning for Bayesian networks"};
  app.require_subcommand(1);

  // learn
  std::string algo = "tabu-stable";
  std::string score = "bic";
  std::string data_path;
  std::string out_path;
  int tabu_len = 10;
  int noinc = 15;
  std::int64_t max_iter = 100000;
  double iss = 1.0;
  std::uint64_t seed = 1;
  auto* learn_cmd = app.add_subcommand("learn", "learn a graph from a CSV dataset");
  learn_cmd->add_option("--algo", algo, "hc | tabu | hc-stable | tabu-stable")->required();
  learn_cmd->add_option("--score", score, "bic | bdeu | bic-g");
  learn_cmd->add_option("--data", data_path, "dataset CSV")->required();
  learn_cmd->add_option("--out", out_path, "output graph file");
  learn_cmd->add_option("--tabu-len", tabu_len, "tabu list capacity");
  learn_cmd->add_option("--noinc", noinc, "stop after this many non-improving changes");
  learn_cmd->add_option("--max-iter", max_iter, "iteration safety cap");
  learn_cmd->add_option("--iss", iss, "BDeu imaginary sample size");
  learn_cmd->add_option("--seed", seed, "reserved; learning itself is deterministic");

  // evaluate
  std::string learned_path;
  std::string model_path;
  auto* eval_cmd = app.add_subcommand("evaluate", "structural metrics of a learned graph");
  eval_cmd->add_option("--learned", learned_path, "learned graph file")->required();
  eval_cmd->add_option("--model", model_path, "true model JSON")->required();

  // inspect
  std::string inspect_data;
  std::string inspect_kind = "categorical";
  auto* inspect_cmd = app.add_subcommand("inspect", "dataset fingerprint and duplicate report");
  inspect_cmd->add_option("--data", inspect_data, "dataset CSV")->required();
  inspect_cmd->add_option("--kind", inspect_kind, "categorical | continuous");

  // score
  std::string score_model;
  std::string score_data;
  double score_iss = 1.0;
  auto* score_cmd = app.add_subcommand("score", "score a model's graph against a dataset");
  score_cmd->add_option("--model", score_model, "model JSON")->required();
  score_cmd->add_option("--data", score_data, "dataset CSV")->required();
  score_cmd->add_option("--iss", score_iss, "BDeu imaginary sample size");

  // sample
  std::string sample_model;
  std::int64_t sample_n = 1000;
  std::uint64_t sample_seed = 1;
  std::string sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "forward-sample a dataset from a model");
  sample_cmd->add_option("--model", sample_model, "model JSON")->required();
  sample_cmd->add_option("--n", sample_n, "rows to sample")->required();
  sample_cmd->add_option("--seed", sample_seed, "sampling seed");
  sample_cmd->add_option("--out", sample_out, "output CSV (stdout when omitted)");

  // suite
  std::string suite_config;
  std::string suite_out;
  auto* suite_cmd = app.add_subcommand("suite", "run the randomisation stability suite");
  suite_cmd->add_option("--config", suite_config, "experiment config JSON")->required();
  suite_cmd->add_option("--out", suite_out, "output directory")->required();

  // demo-instability
  std::string demo_model;
  std::int64_t demo_n = 10000;
  std::uint64_t demo_seed = 1;
  auto* demo_cmd =
      app.add_subcommand("demo-instability", "show order-dependent decisions in standard HC");
  demo_cmd->add_option("--model", demo_model, "model JSON")->required();
  demo_cmd->add_option("--n", demo_n, "rows to sample");
  demo_cmd->add_option("--seed", demo_seed, "sampling and shuffle seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (learn_cmd->parsed()) {
      return cmd_learn(algo, score, data_path, out_path, tabu_len, noinc, max_iter, iss, seed);
    }
    if (eval_cmd->parsed()) return cmd_evaluate(learned_path, model_path);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_data, inspect_kind);
    if (score_cmd->parsed()) return cmd_score(score_model, score_data, score_iss);
    if (sample_cmd->parsed()) return cmd_sample(sample_model, sample_n, sample_seed, sample_out);
    if (suite_cmd->parsed()) return cmd_suite(suite_config, suite_out);
    if (demo_cmd->parsed()) return cmd_demo(demo_model, demo_n, demo_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
