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

#include "gadget/pint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>

#include "gadget/parallel.hpp"

namespace gadget {

std::string to_string(NullFit f) { return f == NullFit::kEmpirical ? "empirical" : "parametric-auto"; }

NullFit null_fit_from_string(const std::string& s) {
  if (s == "empirical") return NullFit::kEmpirical;
  if (s == "parametric-auto" || s == "auto" || s == "parametric") return NullFit::kParametricAuto;
  throw_usage("unknown null fit '" + s + "' (expected empirical or parametric-auto)");
}

std::string to_string(NullFamily f) {
  switch (f) {
    case NullFamily::kEmpirical:
      return "empirical";
    case NullFamily::kNormal:
      return "normal";
    case NullFamily::kLogNormal:
      return "lognormal";
    case NullFamily::kGamma:
      return "gamma";
  }
  return "empirical";
}

namespace {

template <class F>
auto with_distribution(const NullDistribution& n, F&& f) {
  using namespace boost::math;
  switch (n.family) {
    case NullFamily::kNormal:
      return f(normal_distribution<double>(n.param1, n.param2));
    case NullFamily::kLogNormal:
      return f(lognormal_distribution<double>(n.param1, n.param2));
    case NullFamily::kGamma:
      return f(gamma_distribution<double>(n.param1, n.param2));
    case NullFamily::kEmpirical:
      break;
  }
  throw_usage("empirical null has no closed form");
}

template <class Dist>
double ks_statistic(const std::vector<double>& sorted, const Dist& dist) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = boost::math::cdf(dist, sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

double kolmogorov_p_value(double d, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double NullDistribution::quantile(double prob) const {
  if (family == NullFamily::kEmpirical) {
    if (sample.empty()) throw_usage("empty null sample");
    return quantile_sorted(sample, prob);
  }
  return with_distribution(*this, [&](const auto& dist) { return boost::math::quantile(dist, prob); });
}

double NullDistribution::p_value(double observed) const {
  if (family == NullFamily::kEmpirical) {
    if (sample.empty()) throw_usage("empty null sample");
    const auto ge = static_cast<double>(sample.end() - std::lower_bound(sample.begin(), sample.end(), observed));
    return ge / static_cast<double>(sample.size());
  }
  return with_distribution(*this, [&](const auto& dist) {
    if (observed <= boost::math::support(dist).first) return 1.0;
    return std::clamp(boost::math::cdf(boost::math::complement(dist, observed)), 0.0, 1.0);
  });
}

NullDistribution fit_null(std::vector<double> sample, NullFit mode) {
  if (sample.empty()) throw_usage("empty null sample");
  if (mode == NullFit::kParametricAuto && sample.size() < 20)
    throw_usage("a parametric null needs at least 20 values");
  for (double v : sample)
    if (!std::isfinite(v)) throw_numeric("null sample contains a non-finite risk");
  std::sort(sample.begin(), sample.end());
  NullDistribution out;
  out.sample = sample;
  if (mode == NullFit::kEmpirical) return out;
  const double n = static_cast<double>(sample.size());
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  if (!(var > 1e-300) || !(var > 1e-24 * mean * mean)) return out;

  struct Fit {
    NullFamily family;
    double a, b, ks;
  };
  std::vector<Fit> fits;
  const double sd = std::sqrt(var);
  fits.push_back({NullFamily::kNormal, mean, sd, ks_statistic(sample, boost::math::normal_distribution<double>(mean, sd))});
  if (sample.front() > 0.0) {
    const double s2 = std::log1p(var / (mean * mean));
    const double mu = std::log(mean) - 0.5 * s2;
    fits.push_back({NullFamily::kLogNormal, mu, std::sqrt(s2),
                    ks_statistic(sample, boost::math::lognormal_distribution<double>(mu, std::sqrt(s2)))});
    const double shape = mean * mean / var, scale = var / mean;
    fits.push_back({NullFamily::kGamma, shape, scale,
                    ks_statistic(sample, boost::math::gamma_distribution<double>(shape, scale))});
  }
  const Fit best = *std::min_element(fits.begin(), fits.end(), [](const Fit& a, const Fit& b) { return a.ks < b.ks; });
  out.ks_statistic = best.ks;
  out.ks_p_value = kolmogorov_p_value(best.ks, sample.size());
  if (out.ks_p_value >= 0.05) {
    out.family = best.family;
    out.param1 = best.a;
    out.param2 = best.b;
  }
  return out;
}

void PintConfig::validate() const {
  if (s < 2) throw_usage("permutation count s must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw_usage("alpha must lie in (0, 1)");
  if (prefilter && !(*prefilter >= 0.0)) throw_usage("prefilter threshold must be nonnegative");
}

std::vector<std::size_t> prefilter(const GadgetConfig& config, const Dataset& d, PredictorPtr pr,
                                   double threshold, std::vector<double>* normalized) {
  GadgetConfig c = config;
  c.resolve(d);
  const RootRisks rr = root_risks(c, d, std::move(pr));
  if (normalized) *normalized = rr.normalized;
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < c.S.size(); ++s)
    if (!(rr.normalized[s] < threshold)) kept.push_back(c.S[s]);
  return kept;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  auto rng = make_rng(seed, Stream::kPint, index);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  return perm;
}

PintResult run_pint(const PintConfig& config, const LearnerSpec& learner, const Dataset& d) {
  config.validate();
  learner.validate();
  if (!learner.trainable()) throw_usage("PINT requires a trainable learner; external predictors cannot be refit");
  PintResult res;
  res.config = config;
  res.config.effect.sd_recalculate = false;  // root risks only
  res.config.effect.resolve(d);
  for (const auto& f : d.features()) res.feature_names.push_back(f.name);
  const GadgetConfig& effect = res.config.effect;

  const PredictorPtr original = fit(learner, d);
  const RootRisks observed = root_risks(effect, d, original);
  GadgetConfig tested_cfg = effect;
  tested_cfg.S.clear();
  for (std::size_t s = 0; s < effect.S.size(); ++s) {
    PintFeatureResult fr;
    fr.feature = effect.S[s];
    fr.observed_risk = observed.risk[s];
    fr.normalized_risk = observed.normalized[s];
    fr.excluded = config.prefilter && observed.normalized[s] < *config.prefilter;
    if (!fr.excluded) tested_cfg.S.push_back(fr.feature);
    res.features.push_back(std::move(fr));
  }
  if (tested_cfg.S.empty()) {
    res.warnings.push_back("every feature was excluded by the prefilter");
    return res;
  }

  const std::size_t s = config.s;
  const std::size_t n = d.rows();
  NullFit dist_fit = config.dist_fit;
  if (s < kMinPermutations) {
    res.warnings.push_back("s below recommended minimum of " + std::to_string(kMinPermutations) +
                           "; using the empirical null");
    dist_fit = NullFit::kEmpirical;
  }
  std::vector<std::vector<double>> null(s);
  parallel_for(s, [&](std::size_t k) {
    std::string last_error;
    for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
      const std::vector<std::size_t> perm = permutation(n, config.seed, k + attempt * s);
      Vector y(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = d.y()(static_cast<Eigen::Index>(perm[i]));
      LearnerSpec ls = learner;
      ls.seed = learner.seed + k + 1 + attempt * s;
      try {
        const PredictorPtr refit = fit(ls, d.with_target(std::move(y)));
        null[k] = root_risks(tested_cfg, d, refit).risk;
        return;
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    throw_numeric("refit failed on permutation " + std::to_string(k + 1) + " after 3 attempts: " + last_error);
  });

  const double m = static_cast<double>(tested_cfg.S.size());
  std::size_t t = 0;
  for (auto& fr : res.features) {
    if (fr.excluded) continue;
    std::vector<double> sample(s);
    for (std::size_t k = 0; k < s; ++k) sample[k] = null[k][t];
    ++t;
    fr.null = fit_null(std::move(sample), dist_fit);
    fr.threshold = fr.null.quantile(1.0 - config.alpha);
    fr.p_value = fr.null.p_value(fr.observed_risk);
    fr.p_bonferroni = std::min(1.0, fr.p_value * m);
    fr.significant = fr.observed_risk > fr.threshold;
    if (fr.significant) res.significant.push_back(fr.feature);
  }
  return res;
}

}  // namespace gadget
