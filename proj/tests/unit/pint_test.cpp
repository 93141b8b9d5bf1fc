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

#include <gtest/gtest.h>

#include "gadget/simlab.hpp"

namespace gadget {
namespace {

std::vector<double> normal_sample(std::size_t n, double mean, double sd, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kSimlab, 3);
  std::vector<double> v(n);
  for (double& x : v) x = mean + sd * standard_normal(rng);
  return v;
}

// Gamma(0.5, 1) as half a squared standard normal.
std::vector<double> skewed_sample(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kSimlab, 4);
  std::vector<double> v(n);
  for (double& x : v) {
    const double z = standard_normal(rng);
    x = 0.5 * z * z;
  }
  return v;
}

TEST(FitNull, NormalSampleSelectsNormal) {
  const NullDistribution d = fit_null(normal_sample(200, 0.0, 1.0, 1), NullFit::kParametricAuto);
  EXPECT_EQ(d.family, NullFamily::kNormal);
  EXPECT_GE(d.ks_p_value, 0.05);
  EXPECT_NEAR(d.p_value(1.959964), 0.025, 0.01);
}

TEST(FitNull, UpperPercentilePValue) {
  // log-normal may win here, being nearly normal at this mean
  const NullDistribution d = fit_null(normal_sample(200, 5.0, 1.0, 1), NullFit::kParametricAuto);
  EXPECT_NE(d.family, NullFamily::kEmpirical);
  EXPECT_NEAR(d.p_value(5.0 + 1.959964), 0.025, 0.01);
  EXPECT_NEAR(d.quantile(0.975), 5.0 + 1.959964, 0.3);
}

TEST(FitNull, SkewedSampleNeverAcceptedAsNormal) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const NullDistribution d = fit_null(skewed_sample(200, seed), NullFit::kParametricAuto);
    EXPECT_FALSE(d.family == NullFamily::kNormal && d.ks_p_value >= 0.05) << seed;
  }
}

TEST(FitNull, ConstantSampleFallsBackToEmpirical) {
  const NullDistribution d = fit_null(std::vector<double>(30, 2.0), NullFit::kParametricAuto);
  EXPECT_EQ(d.family, NullFamily::kEmpirical);
  EXPECT_EQ(d.p_value(2.5), 0.0);
  EXPECT_EQ(d.p_value(2.0), 1.0);
}

TEST(FitNull, NonPositiveValuesSkipPositiveFamilies) {
  std::vector<double> v = skewed_sample(200, 3);
  v[0] = -0.1;
  const NullDistribution d = fit_null(v, NullFit::kParametricAuto);
  EXPECT_NE(d.family, NullFamily::kLogNormal);
  EXPECT_NE(d.family, NullFamily::kGamma);
}

TEST(FitNull, EmpiricalQuantileAndPValue) {
  std::vector<double> v;
  for (int i = 20; i >= 1; --i) v.push_back(i);
  const NullDistribution d = fit_null(v, NullFit::kEmpirical);
  EXPECT_EQ(d.family, NullFamily::kEmpirical);
  // type 7: 1 + 0.95 * 19
  EXPECT_NEAR(d.quantile(0.95), 19.05, 1e-12);
  EXPECT_DOUBLE_EQ(d.p_value(18.5), 2.0 / 20.0);
  EXPECT_DOUBLE_EQ(d.p_value(21.0), 0.0);
  for (double p : {0.0, 0.5, 1.0, 25.0}) {
    EXPECT_GE(d.p_value(p), 0.0);
    EXPECT_LE(d.p_value(p), 1.0);
  }
}

TEST(FitNull, TooFewValuesIsUsageError) {
  try {
    fit_null(std::vector<double>(19, 1.0), NullFit::kParametricAuto);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(Kolmogorov, KnownCriticalValues) {
  // asymptotic 5% and 1% points of sqrt(n) D
  EXPECT_NEAR(kolmogorov_p_value(1.3581 / std::sqrt(10000.0), 10000), 0.05, 0.002);
  EXPECT_NEAR(kolmogorov_p_value(1.6276 / std::sqrt(10000.0), 10000), 0.01, 0.001);
  EXPECT_EQ(kolmogorov_p_value(0.0, 50), 1.0);
  EXPECT_LT(kolmogorov_p_value(0.5, 50), 1e-6);
}

TEST(Permutation, IsRearrangementAndSeeded) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    std::vector<std::size_t> p = permutation(101, 7, k);
    EXPECT_EQ(p, permutation(101, 7, k));
    EXPECT_NE(p, permutation(101, 7, k + 1));
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
  }
}

class SpuriousPint : public ::testing::Test {
 protected:
  static PintResult run(double alpha, std::uint64_t seed = 1) {
    const Simulation sim = generate({DesignKind::kSpurious, 0.0, 300, 1.0, seed});
    LearnerSpec spec;
    spec.kind = LearnerKind::kPairwise;
    PintConfig c;
    c.s = 30;
    c.alpha = alpha;
    c.seed = seed;
    return run_pint(c, spec, sim.data);
  }
};

TEST_F(SpuriousPint, FindsTrueInteractions) {
  const PintResult r = run(0.05);
  ASSERT_EQ(r.features.size(), 4u);
  EXPECT_TRUE(r.features[0].significant);
  EXPECT_TRUE(r.features[1].significant);
  EXPECT_FALSE(r.features[3].significant);
  for (const PintFeatureResult& f : r.features) {
    EXPECT_EQ(f.significant, f.observed_risk > f.threshold);
    EXPECT_GE(f.p_value, 0.0);
    EXPECT_LE(f.p_value, 1.0);
    EXPECT_GE(f.p_bonferroni, f.p_value);
    EXPECT_EQ(f.null.sample.size(), 30u);
  }
}

TEST_F(SpuriousPint, DeterministicAndMonotoneInAlpha) {
  const PintResult a = run(0.05), b = run(0.05);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(a.features[j].p_value, b.features[j].p_value);
  const PintResult strict = run(0.01), loose = run(0.2);
  for (std::size_t j = 0; j < 4; ++j) {
    if (strict.features[j].significant) EXPECT_TRUE(a.features[j].significant);
    if (a.features[j].significant) EXPECT_TRUE(loose.features[j].significant);
  }
}

TEST(Pint, PrefilterDropsAdditiveFeature) {
  const Simulation sim = generate({DesignKind::kSpurious, 0.0, 300, 1.0, 2});
  LearnerSpec spec;
  spec.kind = LearnerKind::kPairwise;
  const PredictorPtr pr = fit(spec, sim.data);
  std::vector<double> norm;
  const auto kept = prefilter({}, sim.data, pr, 0.01, &norm);
  ASSERT_EQ(norm.size(), 4u);
  EXPECT_EQ(std::count(kept.begin(), kept.end(), 3u), 0);
  EXPECT_EQ(prefilter({}, sim.data, pr, 0.0).size(), 4u);
  PintConfig c;
  c.s = 20;
  c.prefilter = 0.01;
  const PintResult r = run_pint(c, spec, sim.data);
  EXPECT_TRUE(r.features[3].excluded);
  EXPECT_FALSE(r.features[3].significant);
}

TEST(Pint, FewPermutationsWarnAndUseEmpiricalNull) {
  const Simulation sim = generate({DesignKind::kSpurious, 0.0, 100, 1.0, 3});
  LearnerSpec spec;
  spec.kind = LearnerKind::kPairwise;
  PintConfig c;
  c.s = 5;
  const PintResult r = run_pint(c, spec, sim.data);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("s below recommended minimum"), std::string::npos);
  for (const auto& f : r.features) EXPECT_EQ(f.null.family, NullFamily::kEmpirical);
}

TEST(Pint, RejectsBadInputs) {
  const Simulation sim = generate({DesignKind::kSpurious, 0.0, 100, 1.0, 2});
  PintConfig c;
  c.s = 1;
  EXPECT_THROW(run_pint(c, {}, sim.data), Error);
  c.alpha = 1.0;
  c.s = 20;
  EXPECT_THROW(run_pint(c, {}, sim.data), Error);
  c.alpha = 0.05;
  LearnerSpec ext;
  ext.kind = LearnerKind::kExternalTable;
  ext.archive_path = "missing.csv";
  c.s = 20;
  try {
    run_pint(c, ext, sim.data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

}  // namespace
}  // namespace gadget
