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

#include "gadget/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gadget/simlab.hpp"

namespace gadget {
namespace {

std::vector<double> draws(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kSimlab, 5);
  std::vector<double> v(n);
  for (double& x : v) x = 4.0 * uniform01(rng) - 2.0;
  return v;
}

TEST(Smoother, ReproducesStraightLine) {
  const std::vector<double> x = draws(200, 1);
  std::vector<double> y;
  for (double v : x) y.push_back(1.5 - 0.7 * v);
  const Smoother s = Smoother::fit(x, y);
  EXPECT_EQ(s.kind(), Smoother::Kind::kSpline);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (double v : {*lo, -1.3, 0.0, 0.4, *hi}) EXPECT_NEAR(s(v), 1.5 - 0.7 * v, 1e-6);
  EXPECT_LT(s.rss(), 1e-10);
}

TEST(Smoother, PartitionOfUnity) {
  const std::vector<double> x = draws(100, 2);
  std::vector<double> y(x.size(), 0.0);
  const Smoother s = Smoother::fit(x, y);
  double basis[4];
  for (double v : {-1.9, -0.5, 0.0, 1.2}) {
    cubic_bspline_basis(s.knots(), v, basis);
    EXPECT_NEAR(basis[0] + basis[1] + basis[2] + basis[3], 1.0, 1e-12);
  }
}

TEST(Smoother, FollowsSmoothCurve) {
  const std::vector<double> x = draws(400, 3);
  auto rng = make_rng(3, Stream::kSimlab, 6);
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(1.5 * v) + 0.05 * standard_normal(rng));
  const Smoother s = Smoother::fit(x, y);
  for (double v : {-1.5, -0.5, 0.5, 1.5}) EXPECT_NEAR(s(v), std::sin(1.5 * v), 0.05);
  EXPECT_GT(s.effective_df(), 2.0);
}

TEST(Smoother, FewDistinctValuesInterpolateMeans) {
  const std::vector<double> x = {0, 0, 1, 1, 2};
  const std::vector<double> y = {1, 3, 5, 5, 0};
  const Smoother s = Smoother::fit(x, y);
  EXPECT_EQ(s.kind(), Smoother::Kind::kPiecewiseLinear);
  EXPECT_DOUBLE_EQ(s(0.0), 2.0);
  EXPECT_DOUBLE_EQ(s(0.5), 3.5);
  EXPECT_DOUBLE_EQ(s(2.0), 0.0);
  const Smoother c = Smoother::fit(std::vector<double>{3, 3}, std::vector<double>{1, 2});
  EXPECT_EQ(c.kind(), Smoother::Kind::kConstant);
  EXPECT_DOUBLE_EQ(c(10.0), 1.5);
}

TEST(Smoother, CategoryMeans) {
  const std::vector<double> x = {0, 0, 0, 1, 1};
  const std::vector<double> y = {1, 1, 1, 2, 2};
  const Smoother s = Smoother::fit_categories(x, y);
  EXPECT_DOUBLE_EQ(s(0), 1.0);
  EXPECT_DOUBLE_EQ(s(1), 2.0);
  EXPECT_DOUBLE_EQ(s.rss(), 0.0);
}

}  // namespace
}  // namespace gadget
