/*
 * Copyright 2026 The Gadget Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Tabular data, feature metadata, axis-aligned subspaces and evaluation grids.

#ifndef GADGET_DATASET_HPP_
#define GADGET_DATASET_HPP_

#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gadget/common.hpp"

namespace gadget {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Labels indexed by integer code; empty for numeric features.
  std::vector<std::string> categories;

  bool categorical() const { return kind == FeatureKind::kCategorical; }
};

// Immutable feature matrix plus target. Categorical cells hold integer codes
// into FeatureMeta::categories.
class Dataset {
 public:
  Dataset(std::vector<FeatureMeta> features, Matrix x, Vector y,
          std::string target_name = "y");

  std::size_t rows() const { return static_cast<std::size_t>(x_->rows()); }
  std::size_t cols() const { return features_.size(); }
  const Matrix& x() const { return *x_; }
  const Vector& y() const { return y_; }
  double at(std::size_t row, std::size_t j) const { return (*x_)(row, j); }
  const FeatureMeta& feature(std::size_t j) const { return features_.at(j); }
  const std::vector<FeatureMeta>& features() const { return features_; }
  const std::string& target_name() const { return target_name_; }

  std::optional<std::size_t> find_feature(std::string_view name) const;
  // Same features, different target. The feature matrix is shared.
  Dataset with_target(Vector y) const;
  // Copies the selected rows.
  Matrix rows_matrix(const RowSet& rows) const;

 private:
  Dataset(std::vector<FeatureMeta> features, std::shared_ptr<const Matrix> x,
          Vector y, std::string target_name);
  void validate() const;

  std::vector<FeatureMeta> features_;
  std::shared_ptr<const Matrix> x_;
  Vector y_;
  std::string target_name_;
};

struct LoadOptions {
  std::string target;
  // Column name -> forced kind. Columns not listed are inferred: numeric when
  // every cell parses as a number, categorical otherwise.
  std::map<std::string, FeatureKind> kind_hints;
};

Dataset load_dataset(const std::string& path, const LoadOptions& options);
Dataset load_dataset(std::istream& in, const LoadOptions& options);

// RFC-4180 records, header included. Blank lines are skipped.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

// One conjunct of a subspace. Numeric features use `<= t` / `> t`,
// categorical features use set membership on codes.
struct Constraint {
  enum class Op { kLessEqual, kGreater, kInSet };

  std::size_t feature = 0;
  Op op = Op::kLessEqual;
  double threshold = 0.0;
  std::vector<int> categories;  // sorted codes, kInSet only

  bool admits(double value) const;
  std::string describe(const Dataset& d) const;
};

class Subspace {
 public:
  Subspace() = default;
  explicit Subspace(std::vector<Constraint> constraints);

  const std::vector<Constraint>& constraints() const { return constraints_; }
  bool is_root() const { return constraints_.empty(); }
  Subspace with(Constraint c) const;
  bool contains(const Dataset& d, std::size_t row) const;
  // True when `value` of `feature` satisfies every constraint on that feature.
  bool admits(std::size_t feature, double value) const;
  // Human-readable predicate, "TRUE" for the root.
  std::string describe(const Dataset& d) const;

 private:
  std::vector<Constraint> constraints_;
};

RowSet filter_rows(const Dataset& d, const Subspace& s);
RowSet filter_rows(const Dataset& d, const Subspace& s, const RowSet& candidates);

enum class GridMode { kQuantile, kEquidistant, kUniqueValues };

struct GridSpec {
  std::size_t feature = 0;
  std::vector<double> points;
  GridMode mode = GridMode::kQuantile;
};

// Categorical features always get every category code, regardless of m.
GridSpec make_grid(const Dataset& d, std::size_t j, std::size_t m,
                   GridMode mode = GridMode::kQuantile);
GridSpec make_grid(const Dataset& d, std::size_t j, std::size_t m, GridMode mode,
                   const RowSet& rows);

// Linear-interpolation sample quantile (the R default) of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);
std::vector<double> column_values(const Dataset& d, std::size_t j, const RowSet& rows);
RowSet all_rows(std::size_t n);

std::string to_string(GridMode mode);
GridMode grid_mode_from_string(const std::string& s);

}  // namespace gadget

#endif  // GADGET_DATASET_HPP_
