#pragma once

#include <cstdint>
#include <span>

#include "stablebn/graph.hpp"

namespace stablebn {

struct ConfusionCounts {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tn = 0.0;
  std::int64_t e_true = 0;  // edges present in the true graph
  std::int64_t m_true = 0;  // edges absent w.r.t. the complete graph
};

// Per node pair: matching edges (same direction, or undirected in both)
// count TP; learned-only edges FP; truth-only edges FN; orientation conflicts
// (-> vs <-, -> vs --, -- vs ->) count both FP and FN; absent in both TN.
// Graphs are matched by label; both should be CPDAGs for the paper's metrics.
ConfusionCounts confusion(const Pdag& learned, const Pdag& truth);

double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
// Harmonic mean of precision and recall; 0 when TP = 0.
double f1(const ConfusionCounts& c);
// 0.5 * (TP/|E| + TN/|M| - FP/|M| - FN/|E|); 0 for the empty learned graph,
// 1 for a perfect match. Undefined when the truth graph is empty or complete.
double bsf(const ConfusionCounts& c);

double mean_node_degree(const Pdag& g);

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double bsf = 0.0;
  double normalized_bic = 0.0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // population SD
};

// SD is exactly 0 iff all values are bitwise equal.
MeanSd mean_sd(std::span<const double> values);

struct MetricAggregate {
  MetricReport mean;
  MetricReport sd;
  std::size_t runs = 0;
};

MetricAggregate aggregate(std::span<const MetricReport> runs);

}  // namespace stablebn
