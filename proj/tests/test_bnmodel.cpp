#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stablebn/bnmodel.hpp"
#include "stablebn/errors.hpp"

using namespace stablebn;

namespace {

const std::string kModelsDir = STABLEBN_MODELS_DIR;

constexpr const char* kTwoNode = R"({
  "kind": "categorical",
  "nodes": ["A", "B"],
  "arcs": [["A", "B"]],
  "cpts": {
    "A": {"states": ["x", "y"], "rows": {"": [0.3, 0.7]}},
    "B": {"states": ["u", "v"], "rows": {"x": [0.9, 0.1], "y": [0.2, 0.8]}}
  }
})";

}  // namespace

TEST_CASE("two-node categorical model loads") {
  const NetworkModel m = NetworkModel::parse(kTwoNode, "two");
  CHECK(m.dag().node_count() == 2);
  CHECK(m.dag().has_arc(m.dag().index_of("A"), m.dag().index_of("B")));
  CHECK(m.free_parameters().total == 1 + 2);
}

TEST_CASE("validation failures name the node") {
  const std::string bad_sum = R"({
    "kind": "categorical", "nodes": ["A"], "arcs": [],
    "cpts": {"A": {"states": ["x", "y"], "rows": {"": [0.5, 0.4]}}}
  })";
  CHECK_THROWS_WITH_AS(NetworkModel::parse(bad_sum, "m"), doctest::Contains("node A"),
                       ValidationError);

  const std::string missing_row = R"({
    "kind": "categorical", "nodes": ["A", "B"], "arcs": [["A", "B"]],
    "cpts": {
      "A": {"states": ["x", "y"], "rows": {"": [0.5, 0.5]}},
      "B": {"states": ["u", "v"], "rows": {"x": [0.5, 0.5]}}
    }
  })";
  CHECK_THROWS_WITH_AS(NetworkModel::parse(missing_row, "m"), doctest::Contains("node B"),
                       ValidationError);

  const std::string cyclic = R"({
    "kind": "categorical", "nodes": ["A", "B"], "arcs": [["A", "B"], ["B", "A"]],
    "cpts": {}
  })";
  CHECK_THROWS_AS(NetworkModel::parse(cyclic, "m"), ValidationError);

  const std::string bad_coeffs = R"({
    "kind": "continuous", "nodes": ["A", "B"], "arcs": [["A", "B"]],
    "lingauss": {
      "A": {"intercept": 0, "coeffs": {}, "sd": 1},
      "B": {"intercept": 0, "coeffs": {"C": 1.0}, "sd": 1}
    }
  })";
  CHECK_THROWS_WITH_AS(NetworkModel::parse(bad_coeffs, "m"), doctest::Contains("node B"),
                       ValidationError);

  const std::string bad_sd = R"({
    "kind": "continuous", "nodes": ["A"], "arcs": [],
    "lingauss": {"A": {"intercept": 0, "coeffs": {}, "sd": 0.0}}
  })";
  CHECK_THROWS_AS(NetworkModel::parse(bad_sd, "m"), ValidationError);
}

TEST_CASE("asia model: 8 nodes, 8 arcs, 18 free parameters") {
  const NetworkModel asia = NetworkModel::load(kModelsDir + "/asia.json");
  CHECK(asia.dag().node_count() == 8);
  CHECK(asia.dag().arc_count() == 8);
  CHECK(asia.free_parameters().total == 18);
}

TEST_CASE("shipped desk-scale roster matches the published structures") {
  const NetworkModel sachs = NetworkModel::load(kModelsDir + "/sachs.json");
  CHECK(sachs.dag().node_count() == 11);
  CHECK(sachs.dag().arc_count() == 17);
  CHECK(sachs.free_parameters().total == 178);

  const NetworkModel child = NetworkModel::load(kModelsDir + "/child.json");
  CHECK(child.dag().node_count() == 20);
  CHECK(child.dag().arc_count() == 25);
  CHECK(child.free_parameters().total == 230);

  const NetworkModel lg = NetworkModel::load(kModelsDir + "/lingauss6.json");
  CHECK(lg.dag().node_count() == 6);
  CHECK(lg.dag().arc_count() == 7);
  // Continuous: |parents| + 2 per node.
  CHECK(lg.free_parameters().total == 2 + 2 + 4 + 3 + 4 + 4);
}

TEST_CASE("sampling is bitwise reproducible and seed-sensitive") {
  const NetworkModel asia = NetworkModel::load(kModelsDir + "/asia.json");
  CHECK(asia.sample(500, 11) == asia.sample(500, 11));
  CHECK_FALSE(asia.sample(500, 11) == asia.sample(500, 12));
  CHECK_THROWS_AS(asia.sample(0, 1), ValidationError);
}

TEST_CASE("degenerate CPTs sample identical rows") {
  const std::string det = R"({
    "kind": "categorical", "nodes": ["A", "B"], "arcs": [["A", "B"]],
    "cpts": {
      "A": {"states": ["x", "y"], "rows": {"": [1.0, 0.0]}},
      "B": {"states": ["u", "v"], "rows": {"x": [0.0, 1.0], "y": [1.0, 0.0]}}
    }
  })";
  const Dataset d = NetworkModel::parse(det, "det").sample(50, 3);
  for (std::int64_t r = 0; r < d.row_count(); ++r) {
    CHECK(d.variable(0).states[static_cast<std::size_t>(
              d.cat_column(0)[static_cast<std::size_t>(r)])] == "x");
    CHECK(d.variable(1).states[static_cast<std::size_t>(
              d.cat_column(1)[static_cast<std::size_t>(r)])] == "v");
  }
  // Dataset keeps the full declared state lists even when unobserved.
  CHECK(d.variable(0).cardinality() == 2);
  CHECK(d.variable(1).cardinality() == 2);
}

TEST_CASE("root frequencies converge (law of large numbers, fixed seed)") {
  const NetworkModel m = NetworkModel::parse(kTwoNode, "two");
  const Dataset d = m.sample(100000, 99);
  const int col = d.index_of("A");
  const auto& states = d.variable(col).states;
  std::int64_t count_x = 0;
  for (const std::int32_t code : d.cat_column(col)) {
    if (states[static_cast<std::size_t>(code)] == "x") ++count_x;
  }
  const double freq = static_cast<double>(count_x) / 100000.0;
  CHECK(std::abs(freq - 0.3) < 0.01);
}

TEST_CASE("sampled conditionals pass a chi-square sanity check at 1e5") {
  const NetworkModel m = NetworkModel::parse(kTwoNode, "two");
  const Dataset d = m.sample(100000, 7);
  const int a = d.index_of("A");
  const int b = d.index_of("B");
  // Counts of (A state, B state); expected from the declared CPTs.
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (std::int64_t r = 0; r < d.row_count(); ++r) {
    const bool ax = d.variable(a).states[static_cast<std::size_t>(
                        d.cat_column(a)[static_cast<std::size_t>(r)])] == "x";
    const bool bu = d.variable(b).states[static_cast<std::size_t>(
                        d.cat_column(b)[static_cast<std::size_t>(r)])] == "u";
    counts[ax ? 0 : 1][bu ? 0 : 1] += 1.0;
  }
  const double expected[2][2] = {{0.3 * 0.9, 0.3 * 0.1}, {0.7 * 0.2, 0.7 * 0.8}};
  double stat = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = expected[i][j] * 100000.0;
      stat += (counts[i][j] - e) * (counts[i][j] - e) / e;
    }
  }
  CHECK(oracle::chi_square_p_value(stat, 3) > 0.001);
}

TEST_CASE("linear-Gaussian sampling matches the regression oracle") {
  const std::string lg = R"({
    "kind": "continuous", "nodes": ["A", "B"], "arcs": [["A", "B"]],
    "lingauss": {
      "A": {"intercept": 0.0, "coeffs": {}, "sd": 1.0},
      "B": {"intercept": 0.0, "coeffs": {"A": 2.0}, "sd": 0.1}
    }
  })";
  const Dataset d = NetworkModel::parse(lg, "lg").sample(10000, 21);
  const auto col_a = d.cont_column(d.index_of("A"));
  const auto col_b = d.cont_column(d.index_of("B"));
  const std::vector<double> x(col_a.data(), col_a.data() + col_a.size());
  const std::vector<double> y(col_b.data(), col_b.data() + col_b.size());
  CHECK(std::abs(oracle::ols_slope(x, y) - 2.0) < 0.02);
}

TEST_CASE("free_parameters over a dag and dataset") {
  // Binary node, no parents: r - 1 = 1.
  const Dataset d1 = parse_csv("a\nx\ny\n", DataKind::Categorical);
  CHECK(free_parameters(Dag({"a"}), d1).total == 1);

  // Binary node with two ternary parents: 9 * 1; the ternary roots add 2 each.
  const Dataset d2 = parse_csv("a,p,q\nx,1,1\ny,2,2\nx,3,3\n", DataKind::Categorical);
  Dag dag({"a", "p", "q"});
  dag.add_arc(1, 0);
  dag.add_arc(2, 0);
  const FreeParameterCount fp = free_parameters(dag, d2);
  CHECK(fp.per_node.at("a") == 9);
  CHECK(fp.total == 9 + 2 + 2);

  // Continuous node with 3 parents: 3 + 2.
  const Dataset d3 = parse_csv("a,b,c,d\n1,2,3,4\n5,6,7,8\n", DataKind::Continuous);
  Dag gdag({"a", "b", "c", "d"});
  gdag.add_arc(1, 0);
  gdag.add_arc(2, 0);
  gdag.add_arc(3, 0);
  CHECK(free_parameters(gdag, d3).per_node.at("a") == 5);
}

TEST_CASE("asia per-node free parameters sum to the published total") {
  const NetworkModel asia = NetworkModel::load(kModelsDir + "/asia.json");
  const Dataset d = asia.sample(100, 5);
  CHECK(free_parameters(asia.dag(), d).total == 18);
}
