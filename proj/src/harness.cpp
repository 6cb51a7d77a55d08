#include "stablebn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "stablebn/errors.hpp"
#include "stablebn/rng.hpp"
#include "stablebn/text.hpp"

namespace stablebn {

namespace {

using nlohmann::json;

ScoreConfig score_config_for(const std::string& score, double iss, DataKind kind) {
  ScoreConfig cfg;
  if (score == "bic") {
    cfg.kind = kind == DataKind::Categorical ? ScoreKind::BicCategorical : ScoreKind::BicGaussian;
  } else if (score == "bdeu") {
    if (kind != DataKind::Categorical) throw ConfigError("bdeu requires categorical models");
    cfg.kind = ScoreKind::Bdeu;
  } else {
    throw ConfigError("suite score must be 'bic' or 'bdeu', got '" + score + "'");
  }
  cfg.bdeu.iss = iss;
  return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.models = doc.at("models").get<std::vector<std::string>>();
    cfg.sample_sizes = doc.at("sample_sizes").get<std::vector<std::int64_t>>();
    for (const auto& a : doc.at("algorithms")) {
      cfg.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
    }
    cfg.score = doc.value("score", std::string("bic"));
    cfg.iss = doc.value("iss", 1.0);
    cfg.n_randomizations = doc.value("n_randomizations", 25);
    cfg.base_seed = doc.value("base_seed", std::uint64_t{1});
    cfg.time_limit_s = doc.value("time_limit_s", 600.0);
    cfg.jobs = doc.value("jobs", 1);
    cfg.search.tabu_len = doc.value("tabu_len", 10);
    cfg.search.noinc = doc.value("noinc", 15);
    cfg.search.max_iter = doc.value("max_iter", std::int64_t{100000});
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (cfg.models.empty()) throw ConfigError("config lists no models");
  if (cfg.sample_sizes.empty()) throw ConfigError("config lists no sample sizes");
  for (const std::int64_t n : cfg.sample_sizes) {
    if (n < 1) throw ConfigError("sample sizes must be >= 1");
  }
  if (cfg.algorithms.empty()) throw ConfigError("config lists no algorithms");
  if (cfg.n_randomizations < 1) throw ConfigError("n_randomizations must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view purpose,
                          std::string_view model, std::int64_t n_rows, int randomization) {
  StableHash h;
  h.feed(base_seed).feed(purpose).feed(model).feed(n_rows).feed(randomization);
  return h.value();
}

namespace {

std::unordered_map<std::string, std::string> inverse_name_map(const Perturbation& p) {
  std::unordered_map<std::string, std::string> inv;
  inv.reserve(p.name_map.size());
  for (const auto& [old_label, new_label] : p.name_map) inv.emplace(new_label, old_label);
  return inv;
}

struct Cell {
  const NetworkModel* model = nullptr;
  std::int64_t n_rows = 0;
  Dataset base;
  Pdag truth_cpdag;
};

RunRecord evaluate_learned(const Pdag& cpdag, const Pdag& truth) {
  RunRecord r;
  const ConfusionCounts c = confusion(cpdag, truth);
  r.f1 = f1(c);
  r.bsf = bsf(c);
  r.precision = precision(c);
  r.recall = recall(c);
  r.mean_degree = mean_node_degree(cpdag);
  r.cpdag_fingerprint = graph_fingerprint(cpdag);
  return r;
}

// All run jobs for one (model, N) cell: one job per randomization, covering
// every algorithm sequentially so they share the perturbed dataset and the
// score cache.
void run_cell_jobs(const ExperimentConfig& cfg, const Cell& cell,
                   std::vector<RunRecord>& out_slots) {
  const std::string model_name = cell.model->name();
  const int n_algos = static_cast<int>(cfg.algorithms.size());

  std::atomic<int> next{0};
  const auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= cfg.n_randomizations) return;
      const std::uint64_t pseed =
          derive_seed(cfg.base_seed, "perturb", model_name, cell.n_rows, r);
      auto [pdata, pert] = perturb(cell.base, pseed);
      const auto inv = inverse_name_map(pert);

      const ScoreConfig score_cfg = score_config_for(cfg.score, cfg.iss, pdata.kind());
      Scorer scorer(pdata, score_cfg);

      for (int a = 0; a < n_algos; ++a) {
        RunRecord rec;
        rec.model = model_name;
        rec.n_rows = cell.n_rows;
        rec.algorithm = algorithm_name(cfg.algorithms[static_cast<std::size_t>(a)]);
        rec.randomization = r;
        rec.seed = pseed;
        SearchParams params = cfg.search;
        const auto started = std::chrono::steady_clock::now();
        if (cfg.time_limit_s > 0.0) {
          params.deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double>(cfg.time_limit_s));
        }
        try {
          const SearchResult result =
              learn(cfg.algorithms[static_cast<std::size_t>(a)], scorer, params);
          const Dag original_labels = rename_nodes(result.dag, inv);
          const Pdag cpdag = dag_to_cpdag(original_labels);
          RunRecord metrics = evaluate_learned(cpdag, cell.truth_cpdag);
          rec.cpdag_fingerprint = metrics.cpdag_fingerprint;
          rec.f1 = metrics.f1;
          rec.bsf = metrics.bsf;
          rec.precision = metrics.precision;
          rec.recall = metrics.recall;
          rec.mean_degree = metrics.mean_degree;
          rec.score_total = result.total_score;
          rec.score_normalized = normalized_score(result.total_score, cell.n_rows);
          rec.iterations = result.iterations;
          rec.status = "ok";
        } catch (const TimeoutError&) {
          rec.status = "timeout";
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
        out_slots[static_cast<std::size_t>(r * n_algos + a)] = std::move(rec);
      }
    }
  };

  const int threads = std::min(cfg.jobs, cfg.n_randomizations);
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

AggregateRow baseline_row(const Cell& cell, const std::string& algorithm, const Pdag& graph,
                          double total) {
  AggregateRow row;
  row.model = cell.model->name();
  row.n_rows = cell.n_rows;
  row.algorithm = algorithm;
  row.ok_runs = 1;
  row.timeouts = 0;
  const ConfusionCounts c = confusion(graph, cell.truth_cpdag);
  row.precision = {precision(c), 0.0};
  row.recall = {recall(c), 0.0};
  row.f1 = {f1(c), 0.0};
  row.bsf = {bsf(c), 0.0};
  row.bic = {normalized_score(total, cell.n_rows), 0.0};
  row.degree = {mean_node_degree(graph), 0.0};
  return row;
}

}  // namespace

std::vector<AggregateRow> aggregate_records(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ValidationError("aggregate_records: no records");
  // Group by (model, n_rows, algorithm) preserving first-appearance order.
  std::vector<AggregateRow> rows;
  std::map<std::tuple<std::string, std::int64_t, std::string>, std::size_t> index;
  std::vector<std::vector<const RunRecord*>> member_lists;
  for (const RunRecord& rec : records) {
    const auto key = std::make_tuple(rec.model, rec.n_rows, rec.algorithm);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      AggregateRow row;
      row.model = rec.model;
      row.n_rows = rec.n_rows;
      row.algorithm = rec.algorithm;
      rows.push_back(std::move(row));
      member_lists.emplace_back();
    }
    member_lists[it->second].push_back(&rec);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> precisions, recalls, f1s, bsfs, bics, degrees;
    for (const RunRecord* rec : member_lists[i]) {
      if (rec->status != "ok") {
        ++rows[i].timeouts;
        continue;
      }
      precisions.push_back(rec->precision);
      recalls.push_back(rec->recall);
      f1s.push_back(rec->f1);
      bsfs.push_back(rec->bsf);
      bics.push_back(rec->score_normalized);
      degrees.push_back(rec->mean_degree);
    }
    rows[i].ok_runs = f1s.size();
    if (!f1s.empty()) {
      rows[i].precision = mean_sd(precisions);
      rows[i].recall = mean_sd(recalls);
      rows[i].f1 = mean_sd(f1s);
      rows[i].bsf = mean_sd(bsfs);
      rows[i].bic = mean_sd(bics);
      rows[i].degree = mean_sd(degrees);
    }
  }
  return rows;
}

namespace {

std::string fingerprint_hex(std::uint64_t v) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace

std::string runs_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "model,n_rows,algorithm,randomization,seed,status,cpdag_fingerprint,"
         "score_total,score_normalized,f1,bsf,precision,recall,mean_degree,iterations\n";
  for (const RunRecord& r : records) {
    out << r.model << ',' << r.n_rows << ',' << r.algorithm << ',' << r.randomization << ','
        << r.seed << ',' << r.status << ',';
    if (r.status == "ok") {
      out << fingerprint_hex(r.cpdag_fingerprint) << ',' << format_double(r.score_total) << ','
          << format_double(r.score_normalized) << ',' << format_double(r.f1) << ','
          << format_double(r.bsf) << ',' << format_double(r.precision) << ','
          << format_double(r.recall) << ',' << format_double(r.mean_degree) << ','
          << r.iterations;
    } else {
      out << ",,,,,,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string timings_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "model,n_rows,algorithm,randomization,status,wall_ms\n";
  for (const RunRecord& r : records) {
    out << r.model << ',' << r.n_rows << ',' << r.algorithm << ',' << r.randomization << ','
        << r.status << ',' << format_double(r.wall_ms) << '\n';
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "model,n_rows,algorithm,ok_runs,timeouts,precision_mean,recall_mean,"
         "f1_mean,f1_sd,bsf_mean,bsf_sd,bic_mean,bic_sd,degree_mean,degree_sd\n";
  for (const AggregateRow& r : rows) {
    out << r.model << ',' << r.n_rows << ',' << r.algorithm << ',' << r.ok_runs << ','
        << r.timeouts << ',' << format_double(r.precision.mean) << ','
        << format_double(r.recall.mean) << ',' << format_double(r.f1.mean) << ','
        << format_double(r.f1.sd) << ',' << format_double(r.bsf.mean) << ','
        << format_double(r.bsf.sd) << ',' << format_double(r.bic.mean) << ','
        << format_double(r.bic.sd) << ',' << format_double(r.degree.mean) << ','
        << format_double(r.degree.sd) << '\n';
  }
  return out.str();
}

std::string series_csv(const std::vector<AggregateRow>& rows, const std::string& model) {
  std::ostringstream out;
  out << "n_rows,algorithm,f1_mean,f1_sd,bsf_mean,bsf_sd,bic_mean,bic_sd\n";
  for (const AggregateRow& r : rows) {
    if (r.model != model) continue;
    out << r.n_rows << ',' << r.algorithm << ',' << format_double(r.f1.mean) << ','
        << format_double(r.f1.sd) << ',' << format_double(r.bsf.mean) << ','
        << format_double(r.bsf.sd) << ',' << format_double(r.bic.mean) << ','
        << format_double(r.bic.sd) << '\n';
  }
  return out.str();
}

SuiteResult run_suite(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::vector<NetworkModel> models;
  models.reserve(cfg.models.size());
  for (const std::string& path : cfg.models) models.push_back(NetworkModel::load(path));

  SuiteResult result;
  std::vector<AggregateRow> baseline_rows;

  for (const NetworkModel& model : models) {
    const Pdag truth_cpdag = dag_to_cpdag(model.dag());
    for (const std::int64_t n_rows : cfg.sample_sizes) {
      const Cell cell{&model, n_rows,
                      model.sample(n_rows, derive_seed(cfg.base_seed, "data", model.name(),
                                                       n_rows, 0)),
                      truth_cpdag};

      // Baseline graphs are scored on the unperturbed sample; their scores
      // are perturbation-invariant anyway.
      const ScoreConfig score_cfg = score_config_for(cfg.score, cfg.iss, cell.base.kind());
      Scorer scorer(cell.base, score_cfg);
      const Dag empty_dag{cell.base.labels()};
      baseline_rows.push_back(
          baseline_row(cell, "empty-graph", as_pdag(empty_dag), scorer.dag_score(empty_dag)));
      baseline_rows.push_back(
          baseline_row(cell, "true-graph", truth_cpdag, scorer.dag_score(model.dag())));

      std::vector<RunRecord> slots(static_cast<std::size_t>(cfg.n_randomizations) *
                                   cfg.algorithms.size());
      run_cell_jobs(cfg, cell, slots);
      for (RunRecord& r : slots) result.records.push_back(std::move(r));
    }
  }

  result.aggregates = aggregate_records(result.records);
  result.aggregates.insert(result.aggregates.end(), baseline_rows.begin(), baseline_rows.end());

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto write = [&out_dir](const std::string& name, const std::string& content) {
      std::ofstream out(out_dir / name, std::ios::binary);
      if (!out) throw ConfigError("cannot write " + (out_dir / name).string());
      out << content;
    };
    write("runs.csv", runs_csv(result.records));
    write("aggregate.csv", aggregate_csv(result.aggregates));
    write("timings.csv", timings_csv(result.records));
    for (const NetworkModel& model : models) {
      write("series_" + model.name() + ".csv", series_csv(result.aggregates, model.name()));
    }
  }
  return result;
}

namespace {

Dataset reorder_columns(const Dataset& data, const std::vector<int>& new_to_old) {
  if (data.kind() == DataKind::Categorical) {
    std::vector<VariableMeta> vars;
    std::vector<std::vector<std::int32_t>> columns;
    for (const int old_col : new_to_old) {
      vars.push_back(data.variable(old_col));
      columns.push_back(data.cat_column(old_col));
    }
    return Dataset::make_categorical(std::move(vars), std::move(columns));
  }
  Eigen::MatrixXd values(data.row_count(), data.var_count());
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < new_to_old.size(); ++j) {
    labels.push_back(data.variable(new_to_old[j]).label);
    values.col(static_cast<Eigen::Index>(j)) = data.cont_column(new_to_old[j]);
  }
  return Dataset::make_continuous(std::move(labels), std::move(values));
}

std::vector<int> identity(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

InstabilityRun demo_run(const Dataset& data, const std::string& score, const SearchParams& params) {
  Scorer scorer(data, score_config_for(score, 1.0, data.kind()));
  InstabilityRun run;
  run.column_order = data.labels();
  SearchResult result = hc(scorer, params, identity(data.var_count()), /*keep_log=*/true);
  run.log = std::move(result.log);
  run.dag_text = serialize_graph(result.dag);
  return run;
}

}  // namespace

InstabilityDemo instability_demo(const NetworkModel& model, std::int64_t n_rows,
                                 std::uint64_t seed, const SearchParams& params) {
  const Dataset base = model.sample(n_rows, derive_seed(seed, "data", model.name(), n_rows, 0));

  InstabilityDemo demo;
  demo.baseline = demo_run(base, "bic", params);

  Rng rng(derive_seed(seed, "shuffle", model.name(), n_rows, 0));
  std::vector<int> perm = rng.permutation(base.var_count());
  demo.shuffled = demo_run(reorder_columns(base, perm), "bic", params);

  demo.edge_sets_differ = demo.baseline.dag_text != demo.shuffled.dag_text;
  return demo;
}

}  // namespace stablebn
