#include "stablebn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stablebn/errors.hpp"

namespace stablebn {

namespace {

enum class PairEdge { None, Forward, Backward, Undirected };

PairEdge classify(const Pdag& g, int a, int b) {
  if (g.has_directed(a, b)) return PairEdge::Forward;
  if (g.has_directed(b, a)) return PairEdge::Backward;
  if (g.has_undirected(a, b)) return PairEdge::Undirected;
  return PairEdge::None;
}

}  // namespace

ConfusionCounts confusion(const Pdag& learned, const Pdag& truth) {
  const int n = truth.node_count();
  if (learned.node_count() != n) {
    throw ValidationError("confusion: graphs have different node counts");
  }
  std::vector<int> to_learned(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    const int lv = learned.index_of(truth.label(v));
    if (lv < 0) throw ValidationError("confusion: learned graph misses node " + truth.label(v));
    to_learned[static_cast<std::size_t>(v)] = lv;
  }

  ConfusionCounts c;
  c.e_true = truth.edge_count();
  c.m_true = static_cast<std::int64_t>(n) * (n - 1) / 2 - c.e_true;

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const PairEdge t = classify(truth, a, b);
      const PairEdge l = classify(learned, to_learned[static_cast<std::size_t>(a)],
                                  to_learned[static_cast<std::size_t>(b)]);
      if (t == PairEdge::None && l == PairEdge::None) {
        c.tn += 1.0;
      } else if (t == l) {
        c.tp += 1.0;
      } else if (t == PairEdge::None) {
        c.fp += 1.0;
      } else if (l == PairEdge::None) {
        c.fn += 1.0;
      } else {
        c.fp += 1.0;
        c.fn += 1.0;
      }
    }
  }
  return c;
}

double precision(const ConfusionCounts& c) {
  return c.tp + c.fp == 0.0 ? 0.0 : c.tp / (c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
  return c.tp + c.fn == 0.0 ? 0.0 : c.tp / (c.tp + c.fn);
}

double f1(const ConfusionCounts& c) {
  if (c.tp == 0.0) return 0.0;
  const double p = precision(c);
  const double r = recall(c);
  return 2.0 * p * r / (p + r);
}

double bsf(const ConfusionCounts& c) {
  if (c.e_true < 1 || c.m_true < 1) {
    throw MetricError("BSF undefined: truth graph is empty or complete");
  }
  const double e = static_cast<double>(c.e_true);
  const double m = static_cast<double>(c.m_true);
  return 0.5 * (c.tp / e + c.tn / m - c.fp / m - c.fn / e);
}

double mean_node_degree(const Pdag& g) {
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.node_count());
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean_sd: no values");
  const bool all_equal =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  if (all_equal) return {values.front(), 0.0};
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

MetricAggregate aggregate(std::span<const MetricReport> runs) {
  if (runs.empty()) throw ValidationError("aggregate: no runs");
  const auto collect = [&runs](double MetricReport::* field) {
    std::vector<double> values;
    values.reserve(runs.size());
    for (const MetricReport& r : runs) values.push_back(r.*field);
    return mean_sd(values);
  };
  MetricAggregate out;
  out.runs = runs.size();
  const MeanSd p = collect(&MetricReport::precision);
  const MeanSd r = collect(&MetricReport::recall);
  const MeanSd f = collect(&MetricReport::f1);
  const MeanSd b = collect(&MetricReport::bsf);
  const MeanSd s = collect(&MetricReport::normalized_bic);
  out.mean = {p.mean, r.mean, f.mean, b.mean, s.mean};
  out.sd = {p.sd, r.sd, f.sd, b.sd, s.sd};
  return out;
}

}  // namespace stablebn
