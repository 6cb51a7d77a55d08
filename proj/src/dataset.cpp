#include "stablebn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stablebn/errors.hpp"
#include "stablebn/rng.hpp"
#include "stablebn/text.hpp"

namespace stablebn {

namespace {

void check_unique_labels(const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const std::string& l : labels) {
    if (l.empty()) throw ValidationError("empty variable label");
    if (!seen.insert(l).second) throw ValidationError("duplicate variable label: " + l);
  }
}

}  // namespace

Dataset Dataset::make_categorical(std::vector<VariableMeta> vars,
                                  std::vector<std::vector<std::int32_t>> columns) {
  if (vars.size() != columns.size()) {
    throw ValidationError("variable metadata and column count differ");
  }
  if (vars.empty()) throw ValidationError("dataset has no variables");
  std::vector<std::string> labels;
  labels.reserve(vars.size());
  for (const VariableMeta& v : vars) labels.push_back(v.label);
  check_unique_labels(labels);

  const std::int64_t rows = static_cast<std::int64_t>(columns.front().size());
  if (rows < 1) throw ValidationError("dataset has no rows");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const VariableMeta& meta = vars[c];
    if (meta.cardinality() < 1) {
      throw ValidationError("variable " + meta.label + " declares no states");
    }
    if (!std::is_sorted(meta.states.begin(), meta.states.end()) ||
        std::adjacent_find(meta.states.begin(), meta.states.end()) != meta.states.end()) {
      throw ValidationError("states of " + meta.label + " must be sorted and distinct");
    }
    if (static_cast<std::int64_t>(columns[c].size()) != rows) {
      throw ValidationError("column " + meta.label + " has wrong length");
    }
    for (const std::int32_t code : columns[c]) {
      if (code < 0 || code >= meta.cardinality()) {
        throw ValidationError("cell of " + meta.label + " holds an undeclared state");
      }
    }
  }

  Dataset d;
  d.kind_ = DataKind::Categorical;
  d.vars_ = std::move(vars);
  d.rows_ = rows;
  d.cat_columns_ = std::move(columns);
  return d;
}

Dataset Dataset::make_continuous(std::vector<std::string> labels, Eigen::MatrixXd values) {
  if (labels.empty()) throw ValidationError("dataset has no variables");
  check_unique_labels(labels);
  if (values.cols() != static_cast<Eigen::Index>(labels.size())) {
    throw ValidationError("value matrix and label count differ");
  }
  if (values.rows() < 1) throw ValidationError("dataset has no rows");
  if (!values.allFinite()) throw ValidationError("continuous dataset holds a non-finite value");

  Dataset d;
  d.kind_ = DataKind::Continuous;
  d.vars_.reserve(labels.size());
  for (std::string& l : labels) d.vars_.push_back(VariableMeta{std::move(l), {}});
  d.rows_ = static_cast<std::int64_t>(values.rows());
  d.cont_ = std::move(values);
  return d;
}

int Dataset::index_of(std::string_view label) const {
  for (int i = 0; i < var_count(); ++i) {
    if (vars_[static_cast<std::size_t>(i)].label == label) return i;
  }
  return -1;
}

std::vector<std::string> Dataset::labels() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const VariableMeta& v : vars_) out.push_back(v.label);
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.kind_ != b.kind_ || a.rows_ != b.rows_ || a.vars_ != b.vars_) return false;
  if (a.kind_ == DataKind::Categorical) return a.cat_columns_ == b.cat_columns_;
  return a.cont_ == b.cont_;
}

namespace {

std::vector<std::vector<std::string>> read_cells(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string trimmed = trim(line);
    if (trimmed.empty() && lines.empty()) continue;  // leading blank lines
    if (trimmed.empty()) break;                      // trailing blank lines end the table
    std::vector<std::string> cells;
    for (const std::string& piece : split(trimmed, ',')) cells.push_back(trim(piece));
    lines.push_back(std::move(cells));
  }
  return lines;
}

}  // namespace

Dataset parse_csv(std::string_view text, DataKind kind) {
  const auto lines = read_cells(text);
  if (lines.empty()) throw ParseError("csv: file is empty");
  const std::vector<std::string>& header = lines.front();
  const std::size_t n = header.size();
  if (lines.size() < 2) throw ParseError("csv: no data rows");
  const std::size_t rows = lines.size() - 1;

  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].size() != n) {
      throw ParseError("csv line " + std::to_string(r + 1) + ": expected " + std::to_string(n) +
                       " cells, found " + std::to_string(lines[r].size()));
    }
  }

  if (kind == DataKind::Continuous) {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::string& cell = lines[r + 1][c];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
          throw ParseError("csv line " + std::to_string(r + 2) + ", column " +
                           std::to_string(c + 1) + ": not a finite real: '" + cell + "'");
        }
        values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      }
    }
    return Dataset::make_continuous(header, std::move(values));
  }

  std::vector<VariableMeta> vars(n);
  std::vector<std::vector<std::int32_t>> columns(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::set<std::string> distinct;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string& cell = lines[r + 1][c];
      if (cell.empty()) {
        throw ParseError("csv line " + std::to_string(r + 2) + ", column " + std::to_string(c + 1) +
                         ": empty cell (missing data is not supported)");
      }
      distinct.insert(cell);
    }
    vars[c].label = header[c];
    vars[c].states.assign(distinct.begin(), distinct.end());  // set iterates sorted
    std::map<std::string, std::int32_t> code;
    for (std::size_t k = 0; k < vars[c].states.size(); ++k) {
      code[vars[c].states[k]] = static_cast<std::int32_t>(k);
    }
    columns[c].reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) columns[c].push_back(code[lines[r + 1][c]]);
  }
  return Dataset::make_categorical(std::move(vars), std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, DataKind kind) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str(), kind);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string to_csv(const Dataset& data) {
  std::ostringstream out;
  const int n = data.var_count();
  for (int c = 0; c < n; ++c) {
    if (c > 0) out << ',';
    out << data.variable(c).label;
  }
  out << '\n';
  for (std::int64_t r = 0; r < data.row_count(); ++r) {
    for (int c = 0; c < n; ++c) {
      if (c > 0) out << ',';
      if (data.kind() == DataKind::Categorical) {
        out << data.variable(c).states[static_cast<std::size_t>(
            data.cat_column(c)[static_cast<std::size_t>(r)])];
      } else {
        out << format_double(data.cont_column(c)(r));
      }
    }
    out << '\n';
  }
  return out.str();
}

std::pair<Dataset, Perturbation> perturb(const Dataset& data, std::uint64_t seed) {
  Rng rng(seed);
  const int n = data.var_count();
  const std::int64_t rows = data.row_count();

  Perturbation p;
  p.seed = seed;
  p.column_permutation = rng.permutation(n);
  p.row_permutation.resize(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i) p.row_permutation[static_cast<std::size_t>(i)] = i;
  rng.shuffle(p.row_permutation);

  std::set<std::string> used;
  p.name_map.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    std::string fresh = rng.alnum_label(8);
    while (!used.insert(fresh).second) fresh = rng.alnum_label(8);
    p.name_map.emplace_back(data.variable(c).label, fresh);
  }

  if (data.kind() == DataKind::Categorical) {
    std::vector<VariableMeta> vars;
    std::vector<std::vector<std::int32_t>> columns;
    vars.reserve(static_cast<std::size_t>(n));
    columns.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const int old_col = p.column_permutation[static_cast<std::size_t>(j)];
      VariableMeta meta = data.variable(old_col);
      meta.label = p.name_map[static_cast<std::size_t>(old_col)].second;
      vars.push_back(std::move(meta));
      const std::vector<std::int32_t>& src = data.cat_column(old_col);
      std::vector<std::int32_t> col;
      col.reserve(static_cast<std::size_t>(rows));
      for (std::int64_t i = 0; i < rows; ++i) {
        col.push_back(src[static_cast<std::size_t>(p.row_permutation[static_cast<std::size_t>(i)])]);
      }
      columns.push_back(std::move(col));
    }
    return {Dataset::make_categorical(std::move(vars), std::move(columns)), std::move(p)};
  }

  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  Eigen::MatrixXd values(rows, n);
  for (int j = 0; j < n; ++j) {
    const int old_col = p.column_permutation[static_cast<std::size_t>(j)];
    labels.push_back(p.name_map[static_cast<std::size_t>(old_col)].second);
    for (std::int64_t i = 0; i < rows; ++i) {
      values(i, j) = data.cont_column(old_col)(
          static_cast<Eigen::Index>(p.row_permutation[static_cast<std::size_t>(i)]));
    }
  }
  return {Dataset::make_continuous(std::move(labels), std::move(values)), std::move(p)};
}

std::string value_counts_rendition(const Dataset& data, int v) {
  if (data.kind() != DataKind::Categorical) {
    throw ValidationError("value_counts_rendition: unsupported for continuous variables");
  }
  const VariableMeta& meta = data.variable(v);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(meta.cardinality()), 0);
  for (const std::int32_t code : data.cat_column(v)) ++counts[static_cast<std::size_t>(code)];

  std::vector<std::pair<std::int64_t, int>> order;  // (-count, code)
  order.reserve(counts.size());
  for (int code = 0; code < meta.cardinality(); ++code) {
    order.emplace_back(-counts[static_cast<std::size_t>(code)], code);
  }
  std::sort(order.begin(), order.end());

  std::ostringstream out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out << ',';
    out << order[i].second << ':' << -order[i].first;
  }
  return out.str();
}

std::vector<std::vector<int>> find_duplicate_variables(const Dataset& data) {
  std::vector<std::vector<int>> groups;
  if (data.kind() == DataKind::Categorical) {
    std::map<std::vector<std::int32_t>, std::vector<int>> by_codes;
    for (int c = 0; c < data.var_count(); ++c) by_codes[data.cat_column(c)].push_back(c);
    std::vector<std::pair<int, std::vector<int>>> ordered;
    for (auto& [codes, members] : by_codes) {
      if (members.size() >= 2) ordered.emplace_back(members.front(), std::move(members));
    }
    std::sort(ordered.begin(), ordered.end());
    for (auto& [first, members] : ordered) groups.push_back(std::move(members));
    return groups;
  }

  std::map<std::vector<double>, std::vector<int>> by_values;
  for (int c = 0; c < data.var_count(); ++c) {
    const auto col = data.cont_column(c);
    std::vector<double> key(col.data(), col.data() + col.size());
    by_values[std::move(key)].push_back(c);
  }
  std::vector<std::pair<int, std::vector<int>>> ordered;
  for (auto& [values, members] : by_values) {
    if (members.size() >= 2) ordered.emplace_back(members.front(), std::move(members));
  }
  std::sort(ordered.begin(), ordered.end());
  for (auto& [first, members] : ordered) groups.push_back(std::move(members));
  return groups;
}

}  // namespace stablebn
