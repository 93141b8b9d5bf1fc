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

// Local and global feature effects: ICE / partial dependence, accumulated
// local effects and interventional Shapley values.

#ifndef GADGET_EFFECTS_HPP_
#define GADGET_EFFECTS_HPP_

#include <string>
#include <vector>

#include "gadget/common.hpp"
#include "gadget/dataset.hpp"
#include "gadget/learners.hpp"
#include "gadget/smoother.hpp"

namespace gadget {

struct IceMatrix {
  std::size_t feature = 0;
  GridSpec grid;
  RowSet rows;
  Matrix values;   // rows.size() x grid.points.size()
  bool centered = false;
  Vector centers;  // per-row grid means removed when centered
};

// values(i, k) = f(x_j = grid[k], x_-j of rows[i]).
IceMatrix ice(const Predictor& pr, const Dataset& d, const RowSet& rows, std::size_t j,
              const GridSpec& grid);
IceMatrix center_ice(const IceMatrix& m);

enum class CurveMethod { kPD, kPDCentered, kALECentered, kSD };
std::string to_string(CurveMethod m);

struct EffectCurve {
  std::size_t feature = 0;
  CurveMethod method = CurveMethod::kPD;
  std::string subspace = "TRUE";
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> heterogeneity;  // empty when not computed
};

EffectCurve pd_curve(const IceMatrix& m);

struct AleDerivatives {
  std::size_t feature = 0;
  bool categorical = false;
  // z_0 < z_1 < ... < z_K. For categorical features: the ordered codes present.
  std::vector<double> boundaries;
  // Interval k (0-based) spans ]z_k, z_{k+1}]; z_0 belongs to interval 0.
  std::vector<RowSet> members;
  std::vector<std::vector<double>> differences;

  std::size_t intervals() const { return members.size(); }
  std::size_t count(std::size_t k) const { return members[k].size(); }
};

std::size_t default_ale_intervals(std::size_t rows);
// Quantile boundaries of x_j within `rows`, deduplicated, with empty
// intervals merged into their left neighbour.
std::vector<double> ale_boundaries(const Dataset& d, const RowSet& rows, std::size_t j,
                                   std::size_t n_intervals);
// Interval index of `value` for the given boundaries.
std::size_t ale_interval_of(const std::vector<double>& boundaries, double value);
AleDerivatives ale_derivatives(const Predictor& pr, const Dataset& d, const RowSet& rows,
                               std::size_t j, std::size_t n_intervals);
AleDerivatives ale_derivatives(const Predictor& pr, const Dataset& d, const RowSet& rows,
                               std::size_t j, const std::vector<double>& boundaries);
// Accumulated curve at the boundaries, centered so that the count-weighted
// mean over intervals (of the interval midpoint average) is zero. The
// heterogeneity track holds, per boundary, the standard deviation of the
// differences in the interval containing it.
EffectCurve ale_curve(const AleDerivatives& der);

enum class ShapleyEstimator { kExact, kPermutation };

struct ShapleyConfig {
  ShapleyEstimator estimator = ShapleyEstimator::kExact;
  std::size_t samples = 256;  // permutation draws per observation
  std::uint64_t seed = 0;
  // Closed-form baseline values from the predictor when it offers them.
  bool use_fast_path = true;
};

struct ShapleyMatrix {
  std::vector<std::size_t> features;
  RowSet rows;
  RowSet background;
  Matrix values;  // rows.size() x features.size()
  ShapleyEstimator estimator = ShapleyEstimator::kExact;
  std::size_t samples = 0;
};

// Interventional Shapley values; the background defaults to `rows`.
ShapleyMatrix shapley(const Predictor& pr, const Dataset& d, const RowSet& rows,
                      const std::vector<std::size_t>& features, const ShapleyConfig& config,
                      const RowSet* background = nullptr);

// Baseline Shapley value of feature j for every (x-row, background-row) pair.
// The interventional Shapley value of row i is the mean of row i over a
// background. Exact coalition enumeration is used when the predictor has no
// closed form.
Matrix pairwise_shapley(const Predictor& pr, const Dataset& d, const RowSet& x_rows,
                        const RowSet& background, std::size_t j, bool use_fast_path = true);
// All features at once; result[j] is the matrix for feature features[j].
std::vector<Matrix> pairwise_shapley(const Predictor& pr, const Dataset& d, const RowSet& x_rows,
                                     const RowSet& background,
                                     const std::vector<std::size_t>& features,
                                     bool use_fast_path = true);

// Smoothed SHAP dependence: categorical features get per-category means.
Smoother fit_sd(const Dataset& d, std::size_t j, std::span<const double> xs,
                std::span<const double> phi, const SmootherConfig& config = {});
EffectCurve sd_curve(const Dataset& d, std::size_t j, std::span<const double> xs,
                     std::span<const double> phi, const std::vector<double>& display_grid,
                     const SmootherConfig& config = {}, double* rss = nullptr);

}  // namespace gadget

#endif  // GADGET_EFFECTS_HPP_
