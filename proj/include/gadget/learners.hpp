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

// Prediction functions and the built-in learners that produce them.

#ifndef GADGET_LEARNERS_HPP_
#define GADGET_LEARNERS_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gadget/common.hpp"
#include "gadget/dataset.hpp"

namespace gadget {

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::size_t num_features() const = 0;
  virtual std::string kind() const = 0;
  // Rows of `x` are queries. Must be safe to call concurrently.
  Vector predict(const Matrix& x) const;
  double predict_row(std::span<const double> row) const;

  // Baseline Shapley values of every feature for prediction at `x` relative
  // to the reference point `b`: the Shapley decomposition of f(x) - f(b)
  // over the game v(W) = f(x_W, b_-W). Returns false when the predictor has
  // no closed form, in which case callers enumerate coalitions.
  virtual bool baseline_shapley(std::span<const double> x, std::span<const double> b,
                                std::span<double> phi) const;

  // Grid the predictor was archived on, if any. Effect estimators must use it
  // instead of computing their own grid for feature j.
  virtual std::optional<std::vector<double>> archived_grid(std::size_t j) const;

 protected:
  virtual void predict_into(const Matrix& x, Vector& out) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(std::size_t p, double value) : p_(p), value_(value) {}
  std::size_t num_features() const override { return p_; }
  std::string kind() const override { return "constant"; }
  bool baseline_shapley(std::span<const double> x, std::span<const double> b,
                        std::span<double> phi) const override;
  double value() const { return value_; }

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  std::size_t p_;
  double value_;
};

// Wraps a plain function of one feature row. Used for analytic models.
class FunctionPredictor final : public Predictor {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  FunctionPredictor(std::size_t p, Fn fn) : p_(p), fn_(std::move(fn)) {}
  std::size_t num_features() const override { return p_; }
  std::string kind() const override { return "function"; }

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  std::size_t p_;
  Fn fn_;
};

// Ordinary least squares on an expanded design: numeric columns as-is,
// categorical columns dummy coded against their first category, and
// optionally every pairwise product of two different features' columns.
class LinearPredictor final : public Predictor {
 public:
  struct Column {
    std::size_t a = 0;       // source feature
    int a_code = -1;         // category code for dummy columns, -1 numeric
    std::size_t b = 0;       // second feature for product columns
    int b_code = -1;
    bool product = false;
  };

  LinearPredictor(std::vector<FeatureMeta> features, std::vector<Column> columns,
                  double intercept, std::vector<double> coefficients, bool pairwise);

  static std::shared_ptr<LinearPredictor> fit(const Dataset& d, bool pairwise);

  std::size_t num_features() const override { return features_.size(); }
  std::string kind() const override { return pairwise_ ? "pairwise" : "linear"; }
  bool baseline_shapley(std::span<const double> x, std::span<const double> b,
                        std::span<double> phi) const override;

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<Column>& columns() const { return columns_; }
  // Coefficient of the plain numeric column of feature j.
  double coefficient(std::size_t j) const;

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  double column_value(const Column& c, std::span<const double> row, bool second) const;

  std::vector<FeatureMeta> features_;
  std::vector<Column> columns_;
  double intercept_;
  std::vector<double> coefficients_;
  bool pairwise_;
};

// k nearest distinct training locations (standardized numeric distance plus
// 0/1 mismatch for categoricals). Every location tied with the k-th nearest is
// included and the prediction is the mean target over all training rows at
// the included locations.
class KnnPredictor final : public Predictor {
 public:
  static std::shared_ptr<KnnPredictor> fit(const Dataset& d, int k);

  std::size_t num_features() const override { return categorical_.size(); }
  std::string kind() const override { return "knn"; }

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  KnnPredictor() = default;
  double distance(std::span<const double> query, std::size_t location) const;

  int k_ = 1;
  std::vector<bool> categorical_;
  std::vector<double> center_, scale_;
  Matrix locations_;          // standardized distinct training points
  std::vector<double> sum_y_;  // target sum per location
  std::vector<double> count_;  // rows per location
};

// Flat regression tree. Internal nodes send x[feature] <= threshold left.
struct RegressionTree {
  std::vector<int> feature;  // -1 marks a leaf
  std::vector<double> threshold;
  std::vector<int> left, right;
  std::vector<double> value;

  double predict(std::span<const double> row) const;
  void baseline_shapley(std::span<const double> x, std::span<const double> b,
                        std::span<double> phi) const;
  int depth() const;
};

struct TreeParams {
  int n_trees = 50;
  int max_depth = 8;
  int min_leaf = 5;
  std::uint64_t seed = 0;
};

// Bootstrap-aggregated CART regression trees. Splits minimize the summed
// squared error; ties go to the lowest feature index, then the lowest
// threshold.
class BaggedTreesPredictor final : public Predictor {
 public:
  static std::shared_ptr<BaggedTreesPredictor> fit(const Dataset& d, const TreeParams& params);
  BaggedTreesPredictor(std::size_t p, std::vector<RegressionTree> trees)
      : p_(p), trees_(std::move(trees)) {}

  std::size_t num_features() const override { return p_; }
  std::string kind() const override { return "bagged-trees"; }
  bool baseline_shapley(std::span<const double> x, std::span<const double> b,
                        std::span<double> phi) const override;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  std::size_t p_;
  std::vector<RegressionTree> trees_;
};

RegressionTree fit_regression_tree(const Matrix& x, const Vector& y, const RowSet& sample,
                                   int max_depth, int min_leaf);

// Answers only queries whose exact feature row was archived. Archives are CSV
// files with header `row_id,prediction` (predictions at the data rows) or
// `row_id,feature,grid_value,prediction` (ICE grids: data row `row_id` with
// `feature` replaced by `grid_value`). row_id is the 1-based data row.
class ExternalTablePredictor final : public Predictor {
 public:
  static std::shared_ptr<ExternalTablePredictor> load(const std::string& path, const Dataset& d);
  static std::shared_ptr<ExternalTablePredictor> load(std::istream& in, const Dataset& d);

  std::size_t num_features() const override { return p_; }
  std::string kind() const override { return "external-table"; }
  std::optional<std::vector<double>> archived_grid(std::size_t j) const override;
  std::size_t size() const { return table_.size(); }

 protected:
  void predict_into(const Matrix& x, Vector& out) const override;

 private:
  ExternalTablePredictor() = default;
  static std::string key(std::span<const double> row);

  std::size_t p_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, double> table_;
  std::vector<std::vector<double>> grids_;
};

enum class LearnerKind { kLinear, kPairwise, kKnn, kBaggedTrees, kExternalTable };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kBaggedTrees;
  int k = 10;
  TreeParams trees;
  std::uint64_t seed = 0;
  std::string archive_path;  // external-table only

  bool trainable() const { return kind != LearnerKind::kExternalTable; }
  void validate() const;
};

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

PredictorPtr fit(const LearnerSpec& spec, const Dataset& d);
// Fit for the original data, loading the archive for external tables.
PredictorPtr make_predictor(const LearnerSpec& spec, const Dataset& d);

double r_squared(const Vector& truth, const Vector& predicted);

}  // namespace gadget

#endif  // GADGET_LEARNERS_HPP_
