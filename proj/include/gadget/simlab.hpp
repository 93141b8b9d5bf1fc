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

// Seeded benchmark generators with known interaction structure, and an
// experiment harness that runs learners, the partitioner and the permutation
// test over repetitions of them.

#ifndef GADGET_SIMLAB_HPP_
#define GADGET_SIMLAB_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gadget/common.hpp"
#include "gadget/dataset.hpp"
#include "gadget/gadget.hpp"
#include "gadget/learners.hpp"
#include "gadget/pint.hpp"

namespace gadget {

enum class DesignKind {
  // Y = 3 X1 1[X3 > 0] - 3 X1 1[X3 <= 0] + X3 + e, X1 = c X3 + (1 - c) Z.
  kXor,
  // Slope of X1 depends on a cascade of indicator splits on X2..X5.
  kHierarchical,
  // y = x1 + x2 + x3 - 2 x1 x2 with x3 a noisy copy of x2, plus unused x4.
  kSpurious,
};

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& s);

struct SimDesign {
  DesignKind kind = DesignKind::kXor;
  double rho = 0.0;         // xor only: target corr(X1, X3)
  std::size_t n = 500;
  double noise_scale = 1.0; // multiplies the target noise; 0 gives exact y = f(x)
  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::string equation;
  std::vector<std::size_t> interacting;  // 0-based features that interact
  std::size_t split_feature = 0;         // first true split
  double split_value = 0.0;
  double noise_sd = 0.0;
  Vector signal;                         // f(x) without noise
  // Leaf predicates of the true partition and the slope of x1 inside each.
  std::vector<std::string> leaves;
  std::vector<double> leaf_slopes;
};

struct Simulation {
  Dataset data;
  GroundTruth truth;
};

// Mixing weight c that gives corr(X1, X3) = rho when Z and X3 share a
// distribution: rho = c / sqrt(c^2 + (1 - c)^2).
double xor_mixing_weight(double rho);
const std::vector<double>& supported_rhos();

// Noise-free response of each design evaluated at one feature row.
double design_signal(DesignKind kind, std::span<const double> x);

Simulation generate(const SimDesign& design);

// Uniform and normal draws that do not depend on the standard library's
// distribution implementations, so generated data are identical everywhere.
double uniform01(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

struct ExperimentConfig {
  SimDesign design;
  std::size_t repetitions = 10;
  std::vector<LearnerSpec> learners;
  std::vector<GadgetConfig> gadget;   // S/Z empty means all features
  std::optional<PintConfig> pint;     // run the permutation test per repetition
  std::size_t test_rows = 2000;
  bool h_statistic = false;
};

struct RepetitionRecord {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::string learner;
  std::string method;
  bool sd_recalculate = false;
  bool failed = false;
  std::string error;
  double test_mse = 0.0;
  double test_r2 = 0.0;
  std::optional<std::size_t> first_split_feature;
  std::optional<double> first_split_value;
  std::size_t leaves = 0;
  std::size_t depth = 0;
  std::vector<std::optional<std::size_t>> second_level_features;
  double r2_total = 0.0;
  std::vector<double> r2_feature;         // per S feature
  std::vector<double> split_feature_total; // I_z per feature (0 if unused)
  std::vector<double> pint_p_values;
  std::vector<bool> pint_significant;
  std::vector<double> h_statistic;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepetitionRecord> records;
  std::vector<std::string> feature_names;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// One aggregated row per (learner, method, recalculation) over repetitions.
struct SummaryRow {
  std::string learner;
  std::string method;
  bool sd_recalculate = false;
  std::size_t repetitions = 0;
  std::size_t failures = 0;
  double test_mse_mean = 0.0;
  double test_mse_sd = 0.0;
  std::vector<double> first_split_share;  // per feature
  double split_value_min = 0.0;
  double split_value_max = 0.0;
  std::vector<double> split_feature_total_mean;  // I_z per feature
  double leaves_min = 0.0;
  double leaves_max = 0.0;
  double leaves_median = 0.0;
  double second_level_share = 0.0;  // repetitions with any split below the root's children
  double r2_total_mean = 0.0;
  std::vector<double> pint_significant_share;
  std::vector<double> pint_p_mean;
  std::vector<double> h_statistic_mean;
};

std::vector<SummaryRow> summarize(const ExperimentResult& result);

}  // namespace gadget

#endif  // GADGET_SIMLAB_HPP_
