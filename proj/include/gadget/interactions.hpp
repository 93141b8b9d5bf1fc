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

// Interaction measures read off a fitted tree: how much of each feature's
// interaction-related heterogeneity every split removed, and the Friedman
// H-statistic as a global baseline.

#ifndef GADGET_INTERACTIONS_HPP_
#define GADGET_INTERACTIONS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gadget/dataset.hpp"
#include "gadget/gadget.hpp"
#include "gadget/learners.hpp"

namespace gadget {

struct SplitMeasure {
  int node = 0;
  std::size_t split_feature = 0;
  std::vector<double> reduction;  // I(A_P, x_j) per feature of interest
};

struct InteractionReport {
  std::vector<std::size_t> S;
  std::vector<std::size_t> Z;
  std::vector<SplitMeasure> splits;
  // pair[z][s] = I_{z,j} for Z[z] and S[s]; split_feature_total[z] = I_z.
  std::vector<std::vector<double>> pair;
  std::vector<double> split_feature_total;
  std::vector<double> r2_feature;
  double r2_total = 0.0;
  std::vector<double> h_statistic;  // per feature, empty unless requested
  std::vector<std::string> warnings;
};

// (R(A_P, x_j) - R(A_l, x_j) - R(A_r, x_j)) / R(root, x_j); 0 when the root
// risk of x_j is 0.
double split_reduction(const GadgetTree& tree, int node, std::size_t j);
double feature_pair_reduction(const GadgetTree& tree, std::size_t z, std::size_t j);
double split_feature_total(const GadgetTree& tree, std::size_t z);

struct TreeRSquared {
  std::vector<double> feature;  // per S entry
  double total = 0.0;
};
// 1 - leaf risk / root risk, per feature of interest and summed over S.
TreeRSquared tree_r_squared(const GadgetTree& tree);

InteractionReport interaction_report(const GadgetTree& tree);

// Friedman's H^2 of feature j against all others, with the dataset rows as
// evaluation points. Larger datasets are subsampled to max_rows.
double h_statistic(const Predictor& pr, const Dataset& d, std::size_t j,
                   std::size_t max_rows = 2000, std::uint64_t seed = 0);
std::vector<double> h_statistics(const Predictor& pr, const Dataset& d,
                                 std::size_t max_rows = 2000, std::uint64_t seed = 0);

}  // namespace gadget

#endif  // GADGET_INTERACTIONS_HPP_
