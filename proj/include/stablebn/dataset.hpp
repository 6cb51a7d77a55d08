#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stablebn {

enum class DataKind { Categorical, Continuous };

struct VariableMeta {
  std::string label;
  // Categorical only; sorted lexicographically regardless of the order states
  // first appear in a file. Cell codes index into this list.
  std::vector<std::string> states;

  int cardinality() const { return static_cast<int>(states.size()); }
  friend bool operator==(const VariableMeta&, const VariableMeta&) = default;
};

// Provenance of one dataset randomisation: which permutations were applied
// and how labels were rewritten. new_columns[j] / new_rows[i] give the old
// position that now sits at j / i.
struct Perturbation {
  std::uint64_t seed = 0;
  std::vector<int> column_permutation;
  std::vector<std::int64_t> row_permutation;
  std::vector<std::pair<std::string, std::string>> name_map;  // old -> new, old column order
};

class Dataset {
 public:
  static Dataset make_categorical(std::vector<VariableMeta> vars,
                                  std::vector<std::vector<std::int32_t>> columns);
  static Dataset make_continuous(std::vector<std::string> labels, Eigen::MatrixXd values);

  DataKind kind() const { return kind_; }
  int var_count() const { return static_cast<int>(vars_.size()); }
  std::int64_t row_count() const { return rows_; }
  const std::vector<VariableMeta>& variables() const { return vars_; }
  const VariableMeta& variable(int v) const { return vars_[static_cast<std::size_t>(v)]; }
  int index_of(std::string_view label) const;
  std::vector<std::string> labels() const;

  const std::vector<std::int32_t>& cat_column(int v) const {
    return cat_columns_[static_cast<std::size_t>(v)];
  }
  Eigen::Ref<const Eigen::VectorXd> cont_column(int v) const { return cont_.col(v); }

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  Dataset() = default;

  DataKind kind_ = DataKind::Categorical;
  std::vector<VariableMeta> vars_;
  std::int64_t rows_ = 0;
  std::vector<std::vector<std::int32_t>> cat_columns_;  // [column][row]
  Eigen::MatrixXd cont_;                                // rows x columns
};

// CSV with a header row; categorical states are discovered from the data and
// sorted; continuous cells must parse as finite reals. Parse errors carry the
// file line and column.
Dataset load_csv(const std::filesystem::path& path, DataKind kind);
Dataset parse_csv(std::string_view text, DataKind kind);
std::string to_csv(const Dataset& data);

// Randomises column order, row order and variable names (8-char alphanumeric
// labels); the empirical joint distribution over (label, value) pairs is
// untouched. Deterministic in `seed`.
std::pair<Dataset, Perturbation> perturb(const Dataset& data, std::uint64_t seed);

// Sort-key element 3: "code:count" pairs sorted by count descending then by
// state code; codes are the canonical (sorted-state) ranks, so the text
// carries the association pattern between counts and the state order rather
// than the raw labels. Row-order invariant. Continuous variables are not
// supported.
std::string value_counts_rendition(const Dataset& data, int v);

// Groups (size >= 2) of columns whose value sequences are identical:
// categorical columns compare as their own state-code sequences, continuous
// columns compare exactly. Groups and members are in column order.
std::vector<std::vector<int>> find_duplicate_variables(const Dataset& data);

}  // namespace stablebn
