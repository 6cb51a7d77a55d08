#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stablebn/bnmodel.hpp"
#include "stablebn/errors.hpp"
#include "stablebn/scoring.hpp"

using namespace stablebn;

namespace {

const std::string kModelsDir = STABLEBN_MODELS_DIR;

Dataset balanced_binary_10() {
  // One binary column with counts 5/5.
  std::vector<std::int32_t> col{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  return Dataset::make_categorical({VariableMeta{"v", {"a", "b"}}}, {std::move(col)});
}

Dataset gaussian_dataset(std::int64_t rows, std::uint64_t seed) {
  const std::string lg = R"({
    "kind": "continuous", "nodes": ["x", "y", "z"],
    "arcs": [["x", "y"], ["y", "z"]],
    "lingauss": {
      "x": {"intercept": 0.0, "coeffs": {}, "sd": 1.0},
      "y": {"intercept": 0.5, "coeffs": {"x": 1.2}, "sd": 0.8},
      "z": {"intercept": -1.0, "coeffs": {"y": -0.7}, "sd": 0.5}
    }
  })";
  return NetworkModel::parse(lg, "lg3").sample(rows, seed);
}

}  // namespace

TEST_CASE("categorical BIC: balanced binary node, no parents") {
  const Dataset d = balanced_binary_10();
  const double expected = 10.0 * std::log(0.5) - std::log(10.0) / 2.0;  // ~ -8.0829
  CHECK(node_score_bic_cat(d, 0, {}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(node_score_bic_cat(d, 0, {}) == doctest::Approx(-8.0828).epsilon(1e-4));
}

TEST_CASE("categorical BIC: deterministic child scores exactly minus the penalty") {
  // b == a cell-for-cell, so every N_ijk equals its N_ij.
  const Dataset d = parse_csv("a,b\nx,x\ny,y\nx,x\ny,y\nx,x\n", DataKind::Categorical);
  const int b = d.index_of("b");
  const int a = d.index_of("a");
  const int parents[] = {a};
  const double penalty = std::log(5.0) / 2.0 * 2.0 * 1.0;  // q=2, r-1=1
  CHECK(node_score_bic_cat(d, b, parents) == -penalty);
  CHECK(cat_log_likelihood(d, b, parents) == 0.0);
}

TEST_CASE("scoring rejects a node among its own parents") {
  const Dataset d = balanced_binary_10();
  const int self[] = {0};
  CHECK_THROWS_AS(node_score_bic_cat(d, 0, self), ValidationError);
}

TEST_CASE("unobserved parent combinations still count in the penalty") {
  // Parent p declares three states but only two occur.
  std::vector<std::int32_t> child{0, 1, 0, 1};
  std::vector<std::int32_t> parent{0, 0, 1, 1};
  const Dataset d = Dataset::make_categorical(
      {VariableMeta{"c", {"u", "v"}}, VariableMeta{"p", {"s0", "s1", "s2"}}},
      {std::move(child), std::move(parent)});
  const int parents[] = {1};
  const double loglik = cat_log_likelihood(d, 0, parents);
  const double expected_penalty = std::log(4.0) / 2.0 * 3.0 * 1.0;  // q = 3, not 2
  CHECK(node_score_bic_cat(d, 0, parents) == doctest::Approx(loglik - expected_penalty));
}

TEST_CASE("categorical BIC matches the independent evaluator on random data") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = oracle::random_categorical(rng, 4, 200, 3);
    for (int node = 0; node < 4; ++node) {
      for (int p1 = 0; p1 < 4; ++p1) {
        if (p1 == node) continue;
        const std::vector<int> parents{p1};
        CHECK(node_score_bic_cat(d, node, parents) ==
              doctest::Approx(oracle::bic_family(d, node, parents)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("BDeu: balanced binary node, iss = 1, against direct gamma evaluation") {
  const Dataset d = balanced_binary_10();
  // lgamma(1) - lgamma(11) + 2 (lgamma(5.5) - lgamma(0.5))
  const double expected =
      std::lgamma(1.0) - std::lgamma(11.0) + 2.0 * (std::lgamma(5.5) - std::lgamma(0.5));
  CHECK(expected == doctest::Approx(-8.3335145236).epsilon(1e-9));
  CHECK(node_score_bdeu(d, 0, {}, {1.0}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(node_score_bdeu(d, 0, {}, {1.0}) ==
        doctest::Approx(oracle::bdeu_family(d, 0, {}, 1.0)).epsilon(1e-12));
}

TEST_CASE("BDeu: invalid imaginary sample size") {
  const Dataset d = balanced_binary_10();
  CHECK_THROWS_AS(node_score_bdeu(d, 0, {}, {0.0}), ConfigError);
  CHECK_THROWS_AS(node_score_bdeu(d, 0, {}, {-1.0}), ConfigError);
}

TEST_CASE("BDeu: unobserved parent combinations contribute exactly zero") {
  // Same data, parent with an extra declared-but-unseen state: only the
  // a = iss/q constants change, which the manual evaluation reproduces.
  std::vector<std::int32_t> child{0, 1, 0, 1, 1, 0};
  std::vector<std::int32_t> parent{0, 0, 1, 1, 0, 1};
  const Dataset d = Dataset::make_categorical(
      {VariableMeta{"c", {"u", "v"}}, VariableMeta{"p", {"s0", "s1", "s2"}}},
      {std::move(child), std::move(parent)});
  const std::vector<int> parents{1};
  CHECK(node_score_bdeu(d, 0, parents, {2.0}) ==
        doctest::Approx(oracle::bdeu_family(d, 0, parents, 2.0)).epsilon(1e-12));
}

TEST_CASE("BDeu node score is invariant under state relabelling") {
  std::vector<std::int32_t> col{0, 1, 1, 2, 0, 1};
  const Dataset d1 = Dataset::make_categorical({VariableMeta{"v", {"a", "b", "c"}}}, {col});
  // Relabel so the sorted state order reverses: the counts permute in k.
  std::vector<std::int32_t> recoded;
  for (const std::int32_t c : col) recoded.push_back(2 - c);
  const Dataset d2 =
      Dataset::make_categorical({VariableMeta{"v", {"x", "y", "z"}}}, {std::move(recoded)});
  CHECK(node_score_bdeu(d1, 0, {}, {1.0}) == node_score_bdeu(d2, 0, {}, {1.0}));
}

TEST_CASE("Gaussian BIC: closed form for a parentless node") {
  const Dataset d = gaussian_dataset(500, 8);
  const auto col = d.cont_column(0);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) mean += col(i);
  mean /= 500.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) var += (col(i) - mean) * (col(i) - mean);
  var /= 500.0;  // MLE variance
  const double expected =
      -250.0 * (std::log(2.0 * M_PI * var) + 1.0) - std::log(500.0) / 2.0 * 2.0;
  CHECK(node_score_bic_gauss(d, 0, {}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(node_score_bic_gauss(d, 0, {}) ==
        doctest::Approx(oracle::gauss_bic_family(d, 0, {})).epsilon(1e-9));
}

TEST_CASE("Gaussian BIC matches the elimination oracle with parents") {
  const Dataset d = gaussian_dataset(400, 9);
  for (int node = 0; node < 3; ++node) {
    for (int p = 0; p < 3; ++p) {
      if (p == node) continue;
      const std::vector<int> parents{p};
      CHECK(node_score_bic_gauss(d, node, parents) ==
            doctest::Approx(oracle::gauss_bic_family(d, node, parents)).epsilon(1e-9));
    }
  }
  const std::vector<int> both{(0 + 1) % 3, (0 + 2) % 3};
  CHECK(node_score_bic_gauss(d, 0, both) ==
        doctest::Approx(oracle::gauss_bic_family(d, 0, both)).epsilon(1e-9));
}

TEST_CASE("Gaussian BIC: exact linear child hits the variance floor, stays finite") {
  Eigen::MatrixXd values(50, 2);
  for (int i = 0; i < 50; ++i) {
    values(i, 0) = 0.1 * i - 2.0;
    values(i, 1) = 2.0 * values(i, 0);  // zero-noise child
  }
  const Dataset d = Dataset::make_continuous({"x", "y"}, std::move(values));
  const int parents[] = {0};
  const double score = node_score_bic_gauss(d, 1, parents);
  CHECK(std::isfinite(score));
  // sigma^2 floored at 1e-12
  const double expected = -25.0 * (std::log(2.0 * M_PI * 1e-12) + 1.0) - std::log(50.0) / 2.0 * 3.0;
  CHECK(score == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("Gaussian BIC: collinear parents resolve via the pseudoinverse") {
  Eigen::MatrixXd values(60, 3);
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    values(i, 0) = rng.normal();
    values(i, 1) = values(i, 0);  // duplicate column
    values(i, 2) = 3.0 * values(i, 0) + 0.1 * rng.normal();
  }
  const Dataset d = Dataset::make_continuous({"x", "x2", "y"}, std::move(values));
  const std::vector<int> parents{0, 1};
  const double score = node_score_bic_gauss(d, 2, parents);
  CHECK(std::isfinite(score));
  // The duplicated parent cannot fit better than the single one (same span).
  const std::vector<int> single{0};
  const double single_score = node_score_bic_gauss(d, 2, single);
  CHECK(score <= single_score);
}

TEST_CASE("Gaussian BIC: scaling columns preserves the argmax structure") {
  const Dataset d = gaussian_dataset(300, 12);
  Eigen::MatrixXd doubled(300, 3);
  for (int c = 0; c < 3; ++c) doubled.col(c) = 2.0 * d.cont_column(c);
  const Dataset d2 = Dataset::make_continuous({"x", "y", "z"}, std::move(doubled));

  // Among equal-size parent sets for each node, the best set is unchanged.
  for (int node = 0; node < 3; ++node) {
    std::vector<int> others;
    for (int p = 0; p < 3; ++p) {
      if (p != node) others.push_back(p);
    }
    const auto argmax_single = [&](const Dataset& data) {
      double best = -1e300;
      int best_p = -1;
      for (const int p : others) {
        const std::vector<int> parents{p};
        const double s = node_score_bic_gauss(data, node, parents);
        if (s > best) {
          best = s;
          best_p = p;
        }
      }
      return best_p;
    };
    CHECK(argmax_single(d) == argmax_single(d2));
  }
}

TEST_CASE("dag_score: empty graph is the sum of parentless scores") {
  Rng rng(41);
  const Dataset d = oracle::random_categorical(rng, 4, 150, 3);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  const Dag empty{d.labels()};
  std::vector<double> parts;
  for (int v = 0; v < 4; ++v) parts.push_back(node_score_bic_cat(d, v, {}));
  CHECK(scorer.dag_score(empty) == sorted_sum(parts));
}

TEST_CASE("score equivalence: both orientations of one arc score equal") {
  Rng rng(42);
  const Dataset d = oracle::random_categorical(rng, 2, 300, 2);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  Dag ab{d.labels()};
  ab.add_arc(0, 1);
  Dag ba{d.labels()};
  ba.add_arc(1, 0);
  CHECK(scorer.dag_score(ab) == doctest::Approx(scorer.dag_score(ba)).epsilon(1e-9));
}

TEST_CASE("score equivalence across whole MECs (BIC and BDeu), enumeration on 4 nodes") {
  Rng rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = oracle::random_categorical(rng, 4, 120, 3);
    for (const ScoreKind kind : {ScoreKind::BicCategorical, ScoreKind::Bdeu}) {
      Scorer scorer(d, {kind, {1.0}});
      std::map<oracle::MecKey, std::pair<double, double>> extremes;  // min, max per MEC
      for (const oracle::ArcList& arcs : oracle::enumerate_dags(4)) {
        const double s = scorer.dag_score(oracle::dag_from_arcs(4, arcs));
        const oracle::MecKey key = oracle::mec_key(4, arcs);
        auto it = extremes.find(key);
        if (it == extremes.end()) {
          extremes.emplace(key, std::make_pair(s, s));
        } else {
          it->second.first = std::min(it->second.first, s);
          it->second.second = std::max(it->second.second, s);
        }
      }
      for (const auto& [key, mm] : extremes) {
        CHECK(mm.second - mm.first <= 1e-9);
      }
    }
  }
}

TEST_CASE("likelihood term is nonpositive and monotone in parents") {
  Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = oracle::random_categorical(rng, 4, 100, 3);
    for (int node = 0; node < 4; ++node) {
      CHECK(cat_log_likelihood(d, node, {}) <= 0.0);
      for (int p = 0; p < 4; ++p) {
        if (p == node) continue;
        const std::vector<int> one{p};
        CHECK(cat_log_likelihood(d, node, one) >= cat_log_likelihood(d, node, {}) - 1e-9);
        for (int p2 = p + 1; p2 < 4; ++p2) {
          if (p2 == node) continue;
          const std::vector<int> two{p, p2};
          CHECK(cat_log_likelihood(d, node, two) >= cat_log_likelihood(d, node, one) - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("node scores are bit-identical across dataset perturbation") {
  Rng rng(45);
  const Dataset base = oracle::random_categorical(rng, 5, 80, 3);
  const auto [pert, meta] = perturb(base, 777);
  // Column j of the perturbed dataset is original column colperm[j].
  for (int j = 0; j < 5; ++j) {
    const int oj = meta.column_permutation[static_cast<std::size_t>(j)];
    CHECK(node_score_bic_cat(pert, j, {}) == node_score_bic_cat(base, oj, {}));
    for (int k = 0; k < 5; ++k) {
      if (k == j) continue;
      const int ok = meta.column_permutation[static_cast<std::size_t>(k)];
      const std::vector<int> pp{k};
      const std::vector<int> op{ok};
      CHECK(node_score_bic_cat(pert, j, pp) == node_score_bic_cat(base, oj, op));
      CHECK(node_score_bdeu(pert, j, pp, {1.0}) == node_score_bdeu(base, oj, op, {1.0}));
    }
  }
}

TEST_CASE("Gaussian node scores are bit-identical across dataset perturbation") {
  const Dataset base = gaussian_dataset(200, 33);
  const auto [pert, meta] = perturb(base, 888);
  for (int j = 0; j < 3; ++j) {
    const int oj = meta.column_permutation[static_cast<std::size_t>(j)];
    CHECK(node_score_bic_gauss(pert, j, {}) == node_score_bic_gauss(base, oj, {}));
    std::vector<int> pp, op;
    for (int k = 0; k < 3; ++k) {
      if (k == j) continue;
      pp.push_back(k);
      op.push_back(meta.column_permutation[static_cast<std::size_t>(k)]);
    }
    CHECK(node_score_bic_gauss(pert, j, pp) == node_score_bic_gauss(base, oj, op));
  }
}

TEST_CASE("decomposability: a parent change touches one term only") {
  Rng rng(46);
  const Dataset d = oracle::random_categorical(rng, 4, 100, 3);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  Dag dag{d.labels()};
  dag.add_arc(0, 1);
  dag.add_arc(2, 3);
  std::vector<double> before;
  for (int v = 0; v < 4; ++v) before.push_back(scorer.node_score(v, dag.parents(v)));
  dag.add_arc(0, 3);
  for (int v = 0; v < 4; ++v) {
    const double after = scorer.node_score(v, dag.parents(v));
    if (v == 3) {
      CHECK(after != before[static_cast<std::size_t>(v)]);
    } else {
      CHECK(after == before[static_cast<std::size_t>(v)]);
    }
  }
}

TEST_CASE("score cache returns identical values and counts hits") {
  Rng rng(47);
  const Dataset d = oracle::random_categorical(rng, 3, 60, 3);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  const std::vector<int> parents{1, 2};
  const std::vector<int> swapped{2, 1};
  const double first = scorer.node_score(0, parents);
  CHECK(scorer.cache_misses() == 1);
  CHECK(scorer.node_score(0, parents) == first);
  // Canonicalized keys: parent order does not matter.
  CHECK(scorer.node_score(0, swapped) == first);
  CHECK(scorer.cache_hits() == 2);
  CHECK(scorer.cache_misses() == 1);
}

TEST_CASE("normalized_score") {
  CHECK(normalized_score(-100.0, 10) == -10.0);
  CHECK(normalized_score(0.0, 5) == 0.0);
  CHECK_THROWS_AS(normalized_score(1.0, 0), ValidationError);
}

TEST_CASE("asia desk-scale anchors: true and empty graph normalized BIC") {
  const NetworkModel asia = NetworkModel::load(kModelsDir + "/asia.json");
  const Dataset d = asia.sample(10000, 42);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  const double true_norm = normalized_score(scorer.dag_score(asia.dag()), d.row_count());
  CHECK(std::abs(true_norm - (-2.3537)) < 0.15);
  const double empty_norm =
      normalized_score(scorer.dag_score(Dag{d.labels()}), d.row_count());
  CHECK(std::abs(empty_norm - (-3.0625)) < 0.15);
}

TEST_CASE("whole-DAG score matches the monolithic evaluator") {
  Rng rng(48);
  const Dataset d = oracle::random_categorical(rng, 4, 250, 3);
  Scorer scorer(d, {ScoreKind::BicCategorical, {}});
  for (int trial = 0; trial < 20; ++trial) {
    const Dag dag = oracle::dag_from_arcs(4, oracle::random_dag_arcs(rng, 4, 0.5));
    CHECK(scorer.dag_score(dag) ==
          doctest::Approx(oracle::bic_dag_monolithic(d, dag)).epsilon(1e-12));
  }
}
