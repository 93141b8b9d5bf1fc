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

// Recursive partitioning of the feature space so that, inside each region,
// the local effects of the features of interest are as homogeneous as
// possible. The heterogeneity of feature j in region A is the risk
//
//   R(A, j) = sum over feasible grid points x of
//             sum over rows i in A of (h(x, x_-j^(i)) - E[h(x, X_-j) | A])^2
//
// where h is a method-specific local effect: mean-centered ICE values (PD),
// finite-difference derivatives (ALE) or Shapley values (SD). A split (z, t)
// is scored by the sum of both children's risks over the features of
// interest.

#ifndef GADGET_GADGET_HPP_
#define GADGET_GADGET_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gadget/common.hpp"
#include "gadget/dataset.hpp"
#include "gadget/effects.hpp"
#include "gadget/learners.hpp"
#include "gadget/smoother.hpp"

namespace gadget {

enum class Method { kPD, kALE, kSD };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct StopConfig {
  std::size_t max_depth = 6;
  std::size_t min_node_size = 40;
  // A split is kept only if its relative risk reduction is at least gamma
  // times the relative reduction of the split that created the node (1 at
  // the root).
  double gamma = 0.1;
  // Stop once 1 - (leaf risk / root risk) reaches this value.
  double r2_total_target = 1.0;
};

struct GadgetConfig {
  std::vector<std::size_t> S;  // features of interest, 0-based
  std::vector<std::size_t> Z;  // split candidates, 0-based
  Method method = Method::kPD;
  bool sd_recalculate = true;
  StopConfig stop;
  std::size_t grid_size = 20;
  GridMode grid_mode = GridMode::kQuantile;
  std::size_t ale_intervals = 0;  // 0 picks default_ale_intervals(n)
  std::size_t max_candidates = 30;
  // Replace derivatives next to a split point of their own feature when they
  // vary more than twice as much as the rest of the region.
  bool ale_repair = true;
  double ale_repair_window = 0.05;  // fraction of the region's feature range
  // Background rows for Shapley expectations; 0 picks a size by predictor.
  std::size_t shapley_background = 0;
  SmootherConfig smoother;
  std::uint64_t seed = 0;

  // Fills empty S/Z with all features and checks ranges.
  void resolve(const Dataset& d);
};

// One side of a numeric (x <= t / x > t) or categorical split.
struct SplitRule {
  std::size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<int> left_categories;
  std::vector<int> right_categories;

  Constraint left() const;
  Constraint right() const;
};

struct SplitRecord {
  SplitRule rule;
  double objective = 0.0;          // sum over S of both children's risks
  double parent_risk = 0.0;        // sum over S of the parent's risk
  double relative_reduction = 0.0; // (parent_risk - objective) / root risk
};

struct GadgetNode {
  int id = 0;
  int parent = -1;
  std::size_t depth = 0;
  Subspace subspace;
  RowSet rows;
  std::vector<double> risk;  // per feature of interest, in S order
  std::optional<SplitRecord> split;
  int left = -1;
  int right = -1;
  std::string stop_reason;

  bool leaf() const { return !split.has_value(); }
  double total_risk() const;
};

struct CandidateRecord {
  int node = 0;
  SplitRule rule;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  double objective = 0.0;
};

struct RegionalEffect {
  int node = 0;
  std::size_t feature = 0;
  EffectCurve curve;                     // centered PD, centered ALE or SD
  std::optional<EffectCurve> uncentered; // PD only
  std::vector<double> points_x, points_y; // SD scatter of recalculated values
};

struct GadgetTree {
  GadgetConfig config;
  std::vector<std::string> feature_names;
  std::vector<GadgetNode> nodes;
  std::vector<CandidateRecord> audit;
  std::vector<std::string> warnings;
  std::vector<RegionalEffect> regional;

  const GadgetNode& root() const { return nodes.front(); }
  std::vector<int> leaves() const;
  std::size_t depth() const;
};

struct Candidate {
  SplitRule rule;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

// Numeric thresholds: midpoints between consecutive distinct quantiles (at
// k / max_candidates) of the values, keeping both sides >= min_node_size.
std::vector<double> numeric_split_candidates(std::vector<double> values, std::size_t max_candidates,
                                             std::size_t min_node_size);

// Root risks of the features in config.S, and the same divided by
// risk_scale. Used by the permutation test and its prefilter.
struct RootRisks {
  std::vector<double> risk;
  std::vector<double> normalized;
};

// Heterogeneity of the local effects of one method, bound to a predictor and
// dataset. Every region is identified by its subspace; the engine applies
// the subspace's constraints in order, so that derivative recomputation and
// repair near split points follow the same path the tree builder takes.
class Explainer {
 public:
  Explainer(GadgetConfig config, const Dataset& d, PredictorPtr predictor);
  ~Explainer();
  Explainer(const Explainer&) = delete;
  Explainer& operator=(const Explainer&) = delete;

  const GadgetConfig& config() const;
  const Dataset& dataset() const;
  const Predictor& predictor() const;

  // Per-point losses of feature j (must be in S) in the region: one entry per
  // root grid point (PD, zero when infeasible), per interval (ALE) or per
  // display-grid bin (SD).
  std::vector<double> loss(const Subspace& s, std::size_t j) const;
  double risk(const Subspace& s, std::size_t j) const;
  // Sum over S of both children's risks.
  double objective(const Subspace& parent, const SplitRule& rule) const;
  std::vector<Candidate> candidates(const Subspace& parent, std::size_t z) const;
  // Evaluated argmin over Z with the lowest-feature / lowest-threshold tie
  // rule. Stop rules are not applied.
  std::optional<std::pair<Candidate, double>> best_split(const Subspace& parent) const;

  // Normalizer for comparing risks across features: number of summed loss
  // terms times the variance of the predictions.
  double risk_scale(std::size_t j) const;
  double prediction_variance() const;
  const std::vector<double>& grid(std::size_t j) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  friend GadgetTree fit_tree(const GadgetConfig&, const Dataset&, PredictorPtr);
  friend RootRisks root_risks(const GadgetConfig&, const Dataset&, PredictorPtr);
};

GadgetTree fit_tree(const GadgetConfig& config, const Dataset& d, PredictorPtr predictor);

RootRisks root_risks(const GadgetConfig& config, const Dataset& d, PredictorPtr predictor);

}  // namespace gadget

#endif  // GADGET_GADGET_HPP_
