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

#include "gadget/gadget.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "gadget/simlab.hpp"
#include "support/oracles.hpp"

namespace gadget {
namespace {

PredictorPtr fn(std::size_t p, FunctionPredictor::Fn f) { return std::make_shared<FunctionPredictor>(p, std::move(f)); }

double xor_truth(std::span<const double> v) { return design_signal(DesignKind::kXor, v); }

GadgetConfig config(Method m, std::vector<std::size_t> S = {}, std::vector<std::size_t> Z = {}) {
  GadgetConfig c;
  c.method = m;
  c.S = std::move(S);
  c.Z = std::move(Z);
  return c;
}

Subspace split_on(std::size_t z, double t, bool left) {
  return Subspace().with({z, left ? Constraint::Op::kLessEqual : Constraint::Op::kGreater, t, {}});
}

class XorModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sim_ = new Simulation(generate({DesignKind::kXor, 0.0, 500, 1.0, 1}));
    LearnerSpec spec;
    spec.seed = 1;
    model_ = new PredictorPtr(fit(spec, sim_->data));
  }
  static void TearDownTestSuite() {
    delete sim_;
    delete model_;
  }
  static const Dataset& data() { return sim_->data; }
  static PredictorPtr model() { return *model_; }

 private:
  static Simulation* sim_;
  static PredictorPtr* model_;
};
Simulation* XorModel::sim_ = nullptr;
PredictorPtr* XorModel::model_ = nullptr;

TEST(Loss, AdditiveModelIsZeroEverywhere) {
  const Simulation sim = generate({DesignKind::kSpurious, 0.0, 200, 1.0, 2});
  const auto pr = fn(4, [](auto v) { return std::sin(v[0]) + v[1] * v[1] - v[2] + 0.5 * v[3]; });
  for (Method m : {Method::kPD, Method::kALE, Method::kSD}) {
    const Explainer ex(config(m), sim.data, pr);
    for (std::size_t j = 0; j < 4; ++j) {
      for (double l : ex.loss(Subspace(), j)) EXPECT_LT(l, 1e-8 * ex.risk_scale(j)) << to_string(m);
      EXPECT_LT(ex.risk(Subspace(), j), 1e-8 * ex.risk_scale(j)) << to_string(m);
    }
  }
}

TEST(Loss, TwoCenteredIceValues) {
  Matrix x(2, 2);
  x << 0, -2, 1, 2;
  const Dataset d({{"x1", FeatureKind::kNumeric, {}}, {"x2", FeatureKind::kNumeric, {}}}, x, Vector::Zero(2));
  GadgetConfig c = config(Method::kPD, {0}, {1});
  c.grid_size = 2;
  const Explainer ex(c, d, fn(2, [](auto v) { return v[0] * v[1]; }));
  ASSERT_EQ(ex.grid(0), (std::vector<double>{0, 1}));
  // centered values (x - 0.5) * x2: (+1, -1) at x = 0 and (-1, +1) at x = 1
  const std::vector<double> l = ex.loss(Subspace(), 0);
  EXPECT_NEAR(l[0], 2.0, 1e-12);
  EXPECT_NEAR(l[1], 2.0, 1e-12);
  EXPECT_NEAR(ex.risk(Subspace(), 0), 4.0, 1e-12);
}

TEST(Loss, SingleRowSubspaceIsZero) {
  const Simulation sim = generate({DesignKind::kXor, 0.0, 100, 1.0, 3});
  const auto pr = fn(3, xor_truth);
  double lo = sim.data.at(0, 1);
  for (std::size_t i = 0; i < 100; ++i) lo = std::min(lo, sim.data.at(i, 1));
  const Subspace one = split_on(1, lo, true);
  ASSERT_EQ(filter_rows(sim.data, one).size(), 1u);
  for (Method m : {Method::kPD, Method::kALE, Method::kSD}) {
    const Explainer ex(config(m), sim.data, pr);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(ex.risk(one, j), 0.0, 1e-12) << to_string(m);
  }
}

TEST_F(XorModel, RootLossPositiveAtInteriorGridPoints) {
  const Explainer ex(config(Method::kPD, {0, 1, 2}), data(), model());
  const std::vector<double> l = ex.loss(Subspace(), 0);
  for (std::size_t k = 1; k + 1 < l.size(); ++k) EXPECT_GT(l[k], 0.0) << k;
}

TEST_F(XorModel, TrueSplitRemovesMostHeterogeneity) {
  for (Method m : {Method::kPD, Method::kALE, Method::kSD}) {
    const Explainer ex(config(m, {0}, {2}), data(), model());
    const double root = ex.risk(Subspace(), 0);
    const double children = ex.risk(split_on(2, 0.0, true), 0) + ex.risk(split_on(2, 0.0, false), 0);
    EXPECT_GT(root, 0.0);
    // finite differences of a tree ensemble keep some within-leaf noise
    EXPECT_LE(children, (m == Method::kALE ? 0.15 : 0.1) * root) << to_string(m);
  }
}

TEST_F(XorModel, UninvolvedFeatureBarelyReducesRisk) {
  const Explainer ex(config(Method::kPD, {0, 1, 2}), data(), model());
  double parent = 0.0;
  for (std::size_t j = 0; j < 3; ++j) parent += ex.risk(Subspace(), j);
  const auto cands = ex.candidates(Subspace(), 1);
  ASSERT_FALSE(cands.empty());
  for (const Candidate& c : cands) EXPECT_GE(ex.objective(Subspace(), c.rule), 0.95 * parent) << c.rule.threshold;
}

TEST_F(XorModel, BestSplitIsX3NearZero) {
  for (Method m : {Method::kPD, Method::kALE}) {
    const Explainer ex(config(m, {0, 1, 2}), data(), model());
    const auto best = ex.best_split(Subspace());
    ASSERT_TRUE(best);
    EXPECT_EQ(best->first.rule.feature, 2u) << to_string(m);
    EXPECT_LE(std::abs(best->first.rule.threshold), 0.15) << to_string(m);
  }
}

TEST_F(XorModel, PdTreeSplitsOnce) {
  GadgetConfig c = config(Method::kPD, {0, 1, 2});
  c.stop.gamma = 0.2;
  const GadgetTree t = fit_tree(c, data(), model());
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.root().split->rule.feature, 2u);
  EXPECT_EQ(t.leaves().size(), 2u);
}

TEST_F(XorModel, TreeInvariants) {
  for (Method m : {Method::kPD, Method::kALE}) {
    GadgetConfig c = config(m, {0, 1, 2});
    c.stop.gamma = 0.0;
    c.stop.max_depth = 3;
    const GadgetTree t = fit_tree(c, data(), model());
    ASSERT_GT(t.nodes.size(), 1u);
    // leaf cover
    std::vector<int> owner(data().rows(), 0);
    for (int id : t.leaves())
      for (std::size_t r : t.nodes[static_cast<std::size_t>(id)].rows) ++owner[r];
    for (int o : owner) EXPECT_EQ(o, 1);
    for (const GadgetNode& n : t.nodes) {
      // rows agree with the subspace predicate
      EXPECT_EQ(n.rows, filter_rows(data(), n.subspace));
      if (n.leaf()) {
        EXPECT_FALSE(n.stop_reason.empty());
        continue;
      }
      const GadgetNode& l = t.nodes[static_cast<std::size_t>(n.left)];
      const GadgetNode& r = t.nodes[static_cast<std::size_t>(n.right)];
      RowSet merged;
      std::merge(l.rows.begin(), l.rows.end(), r.rows.begin(), r.rows.end(), std::back_inserter(merged));
      EXPECT_EQ(merged, n.rows);
      EXPECT_LE(l.total_risk() + r.total_risk(), n.total_risk() * (1 + 1e-12));
      EXPECT_NEAR(l.total_risk() + r.total_risk(), n.split->objective, 1e-9 * n.total_risk());
      EXPECT_GE(l.rows.size(), c.stop.min_node_size);
      EXPECT_GE(r.rows.size(), c.stop.min_node_size);
    }
    EXPECT_LE(t.depth(), 3u);
  }
}

TEST_F(XorModel, Deterministic) {
  GadgetConfig c = config(Method::kALE, {0, 1, 2});
  c.stop.gamma = 0.0;
  c.stop.max_depth = 2;
  const GadgetTree a = fit_tree(c, data(), model());
  const GadgetTree b = fit_tree(c, data(), model());
  ASSERT_EQ(a.audit.size(), b.audit.size());
  for (std::size_t k = 0; k < a.audit.size(); ++k) {
    EXPECT_EQ(a.audit[k].rule.feature, b.audit[k].rule.feature);
    EXPECT_EQ(a.audit[k].rule.threshold, b.audit[k].rule.threshold);
    EXPECT_EQ(a.audit[k].objective, b.audit[k].objective);
  }
  ASSERT_EQ(a.regional.size(), b.regional.size());
  for (std::size_t k = 0; k < a.regional.size(); ++k) EXPECT_EQ(a.regional[k].curve.values, b.regional[k].curve.values);
}

TEST(Gadget, AdditiveModelGivesRootLeafForEveryMethod) {
  Simulation sim = generate({DesignKind::kSpurious, 0.0, 300, 1.0, 5});
  auto rng = make_rng(5, Stream::kSimlab, 99);
  Vector y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y(i) = sim.data.x()(i, 0) + sim.data.x()(i, 1) + 0.1 * standard_normal(rng);
  const Dataset d(sim.data.features(), sim.data.x(), y);
  LearnerSpec spec;
  spec.kind = LearnerKind::kLinear;
  const PredictorPtr pr = fit(spec, d);
  for (Method m : {Method::kPD, Method::kALE, Method::kSD}) {
    const GadgetTree t = fit_tree(config(m), d, pr);
    EXPECT_EQ(t.nodes.size(), 1u) << to_string(m);
  }
}

TEST(Gadget, TieGoesToLowerFeature) {
  Simulation sim = generate({DesignKind::kXor, 0.0, 200, 1.0, 6});
  Matrix x(200, 4);
  x.leftCols(3) = sim.data.x();
  x.col(3) = x.col(2);
  std::vector<FeatureMeta> f = sim.data.features();
  f.push_back({"x3copy", FeatureKind::kNumeric, {}});
  const Dataset d(f, x, sim.data.y());
  // the model reads only the copy, so both columns score identically
  const auto pr = fn(4, [](auto v) { return v[0] * (v[3] > 0 ? 3.0 : -3.0); });
  const Explainer ex(config(Method::kPD, {0}, {2, 3}), d, pr);
  const auto best = ex.best_split(Subspace());
  ASSERT_TRUE(best);
  EXPECT_EQ(best->first.rule.feature, 2u);
}

TEST(Gadget, MatchesRepidOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rng = make_rng(seed, Stream::kSimlab, 5);
    Matrix x(200, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2 * uniform01(rng) - 1;
    std::vector<FeatureMeta> f;
    for (int j = 0; j < 4; ++j) f.push_back({"x" + std::to_string(j + 1), FeatureKind::kNumeric, {}});
    const Dataset d(f, x, Vector::Zero(200));
    const double a = 1 + uniform01(rng), b = uniform01(rng);
    const auto pr = fn(4, [a, b](auto v) { return a * v[0] * v[1] + b * v[0] * std::sin(3 * v[2]) + v[3] * (v[3] + 0.7 * v[1]); });
    const std::size_t j = seed % 4;
    std::vector<std::size_t> Z;
    for (std::size_t z = 0; z < 4; ++z)
      if (z != j) Z.push_back(z);
    const Explainer ex(config(Method::kPD, {j}, Z), d, pr);
    std::vector<std::pair<std::size_t, std::vector<double>>> ts;
    for (std::size_t z : Z) {
      std::vector<double> t;
      for (const Candidate& c : ex.candidates(Subspace(), z)) t.push_back(c.rule.threshold);
      ts.push_back({z, t});
    }
    const auto want = oracle::repid_best_split(*pr, d, j, ex.grid(j), ts);
    const auto got = ex.best_split(Subspace());
    ASSERT_TRUE(got);
    EXPECT_EQ(got->first.rule.feature, want.feature) << seed;
    EXPECT_EQ(got->first.rule.threshold, want.threshold) << seed;
    EXPECT_NEAR(got->second, want.objective, 1e-9 * want.objective) << seed;
  }
}

TEST(Gadget, CategoricalIsolationZeroesBand) {
  std::ostringstream csv;
  csv << "c,x,y\n";
  auto rng = make_rng(8, Stream::kSimlab, 1);
  const char* cats[] = {"a", "b", "c"};
  for (int i = 0; i < 240; ++i) csv << cats[i % 3] << "," << 2 * uniform01(rng) - 1 << ",0\n";
  std::istringstream in(csv.str());
  const Dataset d = load_dataset(in, {"y", {}});
  const auto pr = fn(2, [](auto v) { return v[1] * (v[0] == 0 ? 2.0 : v[0] == 1 ? -1.0 : 0.5) + v[0]; });
  GadgetConfig c = config(Method::kPD, {0, 1}, {0});
  c.stop.gamma = 0.0;
  c.stop.max_depth = 1;
  const GadgetTree t = fit_tree(c, d, pr);
  ASSERT_EQ(t.nodes.size(), 3u);
  int pure = 0;
  for (int id : t.leaves()) {
    std::set<double> present;
    for (std::size_t r : t.nodes[static_cast<std::size_t>(id)].rows) present.insert(d.at(r, 0));
    if (present.size() != 1) continue;
    ++pure;
    for (const RegionalEffect& e : t.regional)
      if (e.node == id && e.feature == 0)
        for (double h : e.curve.heterogeneity) EXPECT_NEAR(h, 0.0, 1e-8);
  }
  EXPECT_EQ(pure, 1);
}

TEST(Gadget, HomogeneousFeatureHasZeroBand) {
  const Simulation sim = generate({DesignKind::kXor, 0.0, 400, 1.0, 9});
  const auto pr = fn(3, xor_truth);
  for (Method m : {Method::kPD, Method::kALE}) {
    GadgetConfig c = config(m, {0, 1, 2});
    c.stop.gamma = 0.2;
    const GadgetTree t = fit_tree(c, sim.data, pr);
    EXPECT_EQ(t.leaves().size(), 2u) << to_string(m);
    std::size_t seen = 0;
    for (const RegionalEffect& e : t.regional) {
      if (e.feature != 1) continue;
      ++seen;
      for (double h : e.curve.heterogeneity) EXPECT_NEAR(h, 0.0, 1e-8) << to_string(m);
    }
    EXPECT_EQ(seen, t.leaves().size());
  }
}

double child_loss(const Dataset& d, const PredictorPtr& pr, bool repair, double window = 0.05) {
  GadgetConfig c = config(Method::kALE, {2}, {2});
  c.ale_intervals = 50;
  c.ale_repair = repair;
  c.ale_repair_window = window;
  const Explainer ex(c, d, pr);
  return ex.risk(split_on(2, 0.0, true), 2) + ex.risk(split_on(2, 0.0, false), 2);
}

TEST(AleRepair, FiresForSmoothJump) {
  const Simulation sim = generate({DesignKind::kXor, 0.0, 1000, 1.0, 10});
  const auto smooth = fn(3, [](auto v) { return 3 * v[0] * std::tanh(v[2] / 0.02) + v[2]; });
  const double raw = child_loss(sim.data, smooth, false);
  const double fixed = child_loss(sim.data, smooth, true);
  EXPECT_LT(fixed, 0.1 * raw);
  EXPECT_EQ(child_loss(sim.data, smooth, true, 0.0), raw);
}

TEST(AleRepair, QuietForExactStep) {
  const Simulation sim = generate({DesignKind::kXor, 0.0, 1000, 1.0, 10});
  const auto step = fn(3, xor_truth);
  EXPECT_EQ(child_loss(sim.data, step, true), child_loss(sim.data, step, false));
}

TEST(Config, RejectsInvalidValues) {
  const Simulation sim = generate({DesignKind::kXor, 0.0, 50, 1.0, 1});
  auto expect_usage = [&](GadgetConfig c) {
    try {
      c.resolve(sim.data);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kUsage);
    }
  };
  GadgetConfig c;
  c.stop.min_node_size = 1;
  expect_usage(c);
  c = {};
  c.stop.gamma = 1.5;
  expect_usage(c);
  c = {};
  c.S = {3};
  expect_usage(c);
  c = {};
  c.resolve(sim.data);
  EXPECT_EQ(c.S, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(method_from_string("ale"), Method::kALE);
  EXPECT_THROW(method_from_string("lime"), Error);
}

TEST(Candidates, RespectMinNodeSize) {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(i);
  const std::vector<double> t = numeric_split_candidates(v, 30, 20);
  ASSERT_FALSE(t.empty());
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  for (double s : t) {
    const auto left = std::count_if(v.begin(), v.end(), [s](double x) { return x <= s; });
    EXPECT_GE(left, 20);
    EXPECT_GE(100 - left, 20);
  }
  EXPECT_TRUE(numeric_split_candidates(std::vector<double>(10, 1.0), 30, 2).empty());
}

}  // namespace
}  // namespace gadget
