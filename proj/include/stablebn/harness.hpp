#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stablebn/bnmodel.hpp"
#include "stablebn/dataset.hpp"
#include "stablebn/metrics.hpp"
#include "stablebn/scoring.hpp"
#include "stablebn/search.hpp"

namespace stablebn {

struct ExperimentConfig {
  std::vector<std::string> models;  // model JSON paths
  std::vector<std::int64_t> sample_sizes;
  std::vector<Algorithm> algorithms;
  // "bic" scores categorical models with the categorical BIC and continuous
  // models with the Gaussian BIC; "bdeu" is categorical only.
  std::string score = "bic";
  double iss = 1.0;
  int n_randomizations = 25;
  std::uint64_t base_seed = 1;
  double time_limit_s = 600.0;
  int jobs = 1;
  SearchParams search;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunRecord {
  std::string model;
  std::int64_t n_rows = 0;
  std::string algorithm;
  int randomization = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | timeout
  std::uint64_t cpdag_fingerprint = 0;
  double score_total = 0.0;
  double score_normalized = 0.0;
  double f1 = 0.0;
  double bsf = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double mean_degree = 0.0;
  std::int64_t iterations = 0;
  double wall_ms = 0.0;  // written to timings.csv, never to runs.csv
};

struct AggregateRow {
  std::string model;
  std::int64_t n_rows = 0;
  std::string algorithm;
  std::size_t ok_runs = 0;
  std::size_t timeouts = 0;
  MeanSd precision, recall, f1, bsf, bic, degree;
};

struct SuiteResult {
  std::vector<RunRecord> records;        // per (model, N, randomization, algorithm)
  std::vector<AggregateRow> aggregates;  // includes empty-graph / true-graph baseline rows
};

// Samples one dataset per (model, N) with a derived data seed, perturbs it
// n_randomizations times, learns with every configured algorithm, maps the
// learned labels back through the perturbation's name map and evaluates
// against the true CPDAG. Deterministic given the config: rerunning writes
// byte-identical runs.csv / aggregate.csv / series_*.csv (wall-clock timings
// go to timings.csv, which is the one non-reproducible output). Timeouts are
// recorded and excluded from aggregates; they do not fail the suite.
SuiteResult run_suite(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Aggregate table from run records (no baseline rows); errors on empty input.
std::vector<AggregateRow> aggregate_records(const std::vector<RunRecord>& records);

std::string runs_csv(const std::vector<RunRecord>& records);
std::string timings_csv(const std::vector<RunRecord>& records);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
// F1-vs-N series with SD bands for one model, plot-ready.
std::string series_csv(const std::vector<AggregateRow>& rows, const std::string& model);

// Derivation for all experiment seeds: stable hash of the base seed and the
// run coordinates.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view purpose,
                          std::string_view model, std::int64_t n_rows, int randomization);

struct InstabilityRun {
  std::vector<std::string> column_order;
  std::vector<ChangeLogEntry> log;
  std::string dag_text;  // serialized learned DAG
};

struct InstabilityDemo {
  InstabilityRun baseline;  // dataset column order as sampled
  InstabilityRun shuffled;  // one seeded column shuffle
  bool edge_sets_differ = false;
};

// Runs standard HC under two column orders of the same sample and logs every
// accepted change, marking the ones whose orientation was an arbitrary
// equal-delta choice.
InstabilityDemo instability_demo(const NetworkModel& model, std::int64_t n_rows,
                                 std::uint64_t seed, const SearchParams& params = {});

}  // namespace stablebn
