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

// Permutation test for interactions: the root risk of every feature is
// compared with its distribution under refits on permuted targets.

#ifndef GADGET_PINT_HPP_
#define GADGET_PINT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gadget/dataset.hpp"
#include "gadget/gadget.hpp"
#include "gadget/learners.hpp"

namespace gadget {

enum class NullFit { kEmpirical, kParametricAuto };
enum class NullFamily { kEmpirical, kNormal, kLogNormal, kGamma };

std::string to_string(NullFit f);
NullFit null_fit_from_string(const std::string& s);
std::string to_string(NullFamily f);

struct NullDistribution {
  NullFamily family = NullFamily::kEmpirical;
  // normal: mean, sd; log-normal: meanlog, sdlog; gamma: shape, scale.
  double param1 = 0.0;
  double param2 = 0.0;
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  std::vector<double> sample;  // sorted

  double quantile(double prob) const;
  // Upper-tail probability of an observed risk.
  double p_value(double observed) const;
};

// Kolmogorov distribution tail with the small-sample adjustment of the
// statistic: P(D_n > d).
double kolmogorov_p_value(double d, std::size_t n);

// Moment-matched normal, log-normal and gamma candidates; the one with the
// smallest KS statistic is kept when the KS test does not reject at 0.05,
// otherwise the empirical distribution.
NullDistribution fit_null(std::vector<double> sample, NullFit mode);

// Fewer permutations give a coarse empirical quantile; the run warns.
inline constexpr std::size_t kMinPermutations = 20;

struct PintConfig {
  std::size_t s = 50;
  double alpha = 0.05;
  NullFit dist_fit = NullFit::kParametricAuto;
  std::uint64_t seed = 0;
  // Normalized root risk below which a feature is not tested.
  std::optional<double> prefilter;
  bool bonferroni = false;
  // Method, grids and features (S) for the risk; Z and the stop rules are
  // unused.
  GadgetConfig effect;

  void validate() const;
};

struct PintFeatureResult {
  std::size_t feature = 0;
  double observed_risk = 0.0;
  double normalized_risk = 0.0;
  bool excluded = false;
  NullDistribution null;
  double threshold = 0.0;  // (1 - alpha) quantile of the null
  double p_value = 1.0;
  double p_bonferroni = 1.0;
  bool significant = false;
};

struct PintResult {
  PintConfig config;
  std::vector<std::string> feature_names;
  std::vector<PintFeatureResult> features;
  std::vector<std::size_t> significant;  // 0-based, usable as S for the partitioner
  std::vector<std::string> warnings;
};

// Normalized root risks of the features in config.S and the kept subset.
std::vector<std::size_t> prefilter(const GadgetConfig& config, const Dataset& d, PredictorPtr pr,
                                   double threshold, std::vector<double>* normalized = nullptr);

// Seeded Fisher-Yates permutation of 0..n-1; index k gives the k-th draw.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t index);

PintResult run_pint(const PintConfig& config, const LearnerSpec& learner, const Dataset& d);

}  // namespace gadget

#endif  // GADGET_PINT_HPP_
