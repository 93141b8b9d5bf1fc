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

#include "gadget/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gadget/interactions.hpp"
#include "gadget/parallel.hpp"

namespace gadget {

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::kXor:
      return "xor";
    case DesignKind::kHierarchical:
      return "hierarchical";
    case DesignKind::kSpurious:
      return "spurious";
  }
  return "xor";
}

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "xor") return DesignKind::kXor;
  if (s == "hierarchical") return DesignKind::kHierarchical;
  if (s == "spurious") return DesignKind::kSpurious;
  throw_usage("unknown design '" + s + "' (expected xor, hierarchical or spurious)");
}

const std::vector<double>& supported_rhos() {
  static const std::vector<double> rhos{0.0, 0.4, 0.7, 0.9};
  return rhos;
}

double xor_mixing_weight(double rho) {
  bool ok = false;
  for (double r : supported_rhos()) ok = ok || std::abs(r - rho) < 1e-9;
  if (!ok) {
    std::ostringstream os;
    os << "unsupported rho " << rho << " (supported: ";
    for (std::size_t k = 0; k < supported_rhos().size(); ++k) os << (k ? ", " : "") << supported_rhos()[k];
    os << ")";
    throw_usage(os.str());
  }
  return rho / (rho + std::sqrt(1.0 - rho * rho));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  double u = 0.0;
  while (u <= 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

double design_signal(DesignKind kind, std::span<const double> x) {
  switch (kind) {
    case DesignKind::kXor:
      return (x[2] > 0.0 ? 3.0 : -3.0) * x[0] + x[2];
    case DesignKind::kHierarchical: {
      const double x1 = x[0];
      if (x[2] <= 0.0) return x[3] > 0.0 ? x1 : 4.0 * x1;
      if (x[4] > 0.0) return -5.0 * x1;
      return x[1] > 0.0 ? -x1 : -3.0 * x1;
    }
    case DesignKind::kSpurious:
      return x[0] + x[1] + x[2] - 2.0 * x[0] * x[1];
  }
  return 0.0;
}

Simulation generate(const SimDesign& design) {
  if (design.n < 2) throw_usage("simulation needs at least 2 rows");
  if (!(design.noise_scale >= 0.0)) throw_usage("noise scale must be nonnegative");
  auto rng = make_rng(design.seed, Stream::kSimlab, static_cast<std::uint64_t>(design.kind));
  const std::size_t n = design.n;
  const auto u11 = [&] { return 2.0 * uniform01(rng) - 1.0; };
  GroundTruth truth;
  Matrix x;
  std::size_t p = 0;
  switch (design.kind) {
    case DesignKind::kXor: {
      const double c = xor_mixing_weight(design.rho);
      p = 3;
      x.resize(static_cast<Eigen::Index>(n), 3);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 1) = u11();
        x(r, 2) = u11();
        const double z = u11();
        x(r, 0) = c * x(r, 2) + (1.0 - c) * z;
      }
      truth.equation = "y = 3 x1 1[x3 > 0] - 3 x1 1[x3 <= 0] + x3 + e";
      truth.interacting = {0, 2};
      truth.split_feature = 2;
      truth.noise_sd = 0.3 * design.noise_scale;
      truth.leaves = {"x3 <= 0", "x3 > 0"};
      truth.leaf_slopes = {-3.0, 3.0};
      break;
    }
    case DesignKind::kHierarchical: {
      p = 5;
      x.resize(static_cast<Eigen::Index>(n), 5);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = uniform01(rng);
        for (Eigen::Index j = 1; j < 5; ++j) x(r, j) = u11();
      }
      truth.equation =
          "y = x1 1[x3 <= 0] 1[x4 > 0] + 4 x1 1[x3 <= 0] 1[x4 <= 0] - x1 1[x3 > 0] 1[x5 <= 0] 1[x2 > 0]"
          " - 3 x1 1[x3 > 0] 1[x5 <= 0] 1[x2 <= 0] - 5 x1 1[x3 > 0] 1[x5 > 0] + e";
      truth.interacting = {0, 1, 2, 3, 4};
      truth.split_feature = 2;
      truth.leaves = {"x3 <= 0 & x4 > 0", "x3 <= 0 & x4 <= 0", "x3 > 0 & x5 <= 0 & x2 > 0",
                      "x3 > 0 & x5 <= 0 & x2 <= 0", "x3 > 0 & x5 > 0"};
      truth.leaf_slopes = {1.0, 4.0, -1.0, -3.0, -5.0};
      break;
    }
    case DesignKind::kSpurious: {
      p = 4;
      x.resize(static_cast<Eigen::Index>(n), 4);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = u11();
        x(r, 1) = u11();
        x(r, 3) = u11();
        x(r, 2) = x(r, 1) + 0.3 * standard_normal(rng);
      }
      truth.equation = "y = x1 + x2 + x3 - 2 x1 x2, x3 = x2 + N(0, 0.09)";
      truth.interacting = {0, 1};
      truth.split_feature = 1;
      break;
    }
  }
  truth.signal.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    truth.signal(static_cast<Eigen::Index>(i)) = design_signal(design.kind, {x.data() + i * p, p});
  if (design.kind == DesignKind::kHierarchical) {
    const double m = truth.signal.mean();
    const double var = (truth.signal.array() - m).square().sum() / static_cast<double>(n - 1);
    truth.noise_sd = 0.1 * std::sqrt(var) * design.noise_scale;
  }
  Vector y = truth.signal;
  if (truth.noise_sd > 0.0)
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) += truth.noise_sd * standard_normal(rng);
  std::vector<FeatureMeta> features;
  for (std::size_t j = 0; j < p; ++j) features.push_back({"x" + std::to_string(j + 1), FeatureKind::kNumeric, {}});
  return {Dataset(std::move(features), std::move(x), std::move(y), "y"), std::move(truth)};
}

namespace {

std::vector<RepetitionRecord> run_repetition(const ExperimentConfig& cfg, std::size_t rep) {
  std::vector<RepetitionRecord> out;
  const std::uint64_t seed = cfg.design.seed + rep;
  SimDesign train = cfg.design;
  train.seed = seed;
  SimDesign test = cfg.design;
  test.seed = splitmix64(seed ^ 0x7e57);
  test.n = std::max<std::size_t>(2, cfg.test_rows);
  std::optional<Simulation> tr, te;
  std::string data_error;
  try {
    tr = generate(train);
    te = generate(test);
  } catch (const std::exception& e) {
    data_error = e.what();
  }
  const std::size_t p = tr ? tr->data.cols() : 0;
  for (const LearnerSpec& spec : cfg.learners) {
    RepetitionRecord base;
    base.repetition = rep;
    base.seed = seed;
    base.learner = to_string(spec.kind);
    base.method = "none";
    if (!tr) {
      base.failed = true;
      base.error = data_error;
      out.push_back(base);
      continue;
    }
    std::vector<RepetitionRecord> rows;
    try {
      LearnerSpec ls = spec;
      ls.seed = seed;
      const PredictorPtr model = fit(ls, tr->data);
      const Vector pred = model->predict(te->data.x());
      base.test_mse = (pred - te->data.y()).squaredNorm() / static_cast<double>(pred.size());
      base.test_r2 = r_squared(te->data.y(), pred);
      if (cfg.h_statistic) base.h_statistic = h_statistics(*model, tr->data, 2000, seed);
      if (cfg.pint) {
        PintConfig pc = *cfg.pint;
        pc.seed = seed;
        const PintResult pr = run_pint(pc, ls, tr->data);
        base.pint_p_values.assign(p, 1.0);
        base.pint_significant.assign(p, false);
        for (const auto& f : pr.features) {
          base.pint_p_values[f.feature] = f.p_value;
          base.pint_significant[f.feature] = f.significant;
        }
      }
      for (const GadgetConfig& gc0 : cfg.gadget) {
        GadgetConfig gc = gc0;
        gc.seed = seed;
        RepetitionRecord r = base;
        r.method = to_string(gc.method);
        r.sd_recalculate = gc.method == Method::kSD && gc.sd_recalculate;
        try {
          const GadgetTree tree = fit_tree(gc, tr->data, model);
          const GadgetNode& root = tree.root();
          if (!root.leaf()) {
            r.first_split_feature = root.split->rule.feature;
            if (!root.split->rule.categorical) r.first_split_value = root.split->rule.threshold;
            for (int c : {root.left, root.right}) {
              const GadgetNode& child = tree.nodes[static_cast<std::size_t>(c)];
              r.second_level_features.push_back(child.leaf() ? std::nullopt
                                                             : std::optional<std::size_t>(child.split->rule.feature));
            }
          }
          r.leaves = tree.leaves().size();
          r.depth = tree.depth();
          const TreeRSquared r2 = tree_r_squared(tree);
          r.r2_total = r2.total;
          r.r2_feature = r2.feature;
          r.split_feature_total.assign(p, 0.0);
          for (std::size_t z : tree.config.Z) r.split_feature_total[z] = split_feature_total(tree, z);
        } catch (const std::exception& e) {
          r.failed = true;
          r.error = e.what();
        }
        rows.push_back(std::move(r));
      }
      if (cfg.gadget.empty()) rows.push_back(base);
    } catch (const std::exception& e) {
      base.failed = true;
      base.error = e.what();
      rows.assign(1, base);
    }
    std::move(rows.begin(), rows.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.repetitions < 1) throw_usage("repetitions must be at least 1");
  if (config.learners.empty()) throw_usage("experiment needs at least one learner");
  for (const auto& l : config.learners) {
    l.validate();
    if (!l.trainable()) throw_usage("experiments need trainable learners");
  }
  if (config.pint) config.pint->validate();
  xor_mixing_weight(config.design.kind == DesignKind::kXor ? config.design.rho : 0.0);
  ExperimentResult res;
  res.config = config;
  std::vector<std::vector<RepetitionRecord>> per_rep(config.repetitions);
  parallel_for(config.repetitions, [&](std::size_t r) { per_rep[r] = run_repetition(config, r); });
  for (auto& v : per_rep) std::move(v.begin(), v.end(), std::back_inserter(res.records));
  SimDesign probe = config.design;
  probe.n = 2;
  const Simulation names = generate(probe);
  for (const auto& f : names.data.features()) res.feature_names.push_back(f.name);
  return res;
}

std::vector<SummaryRow> summarize(const ExperimentResult& result) {
  const std::size_t p = result.feature_names.size();
  std::vector<SummaryRow> rows;
  auto find = [&](const RepetitionRecord& r) -> SummaryRow& {
    for (auto& s : rows)
      if (s.learner == r.learner && s.method == r.method && s.sd_recalculate == r.sd_recalculate) return s;
    SummaryRow s;
    s.learner = r.learner;
    s.method = r.method;
    s.sd_recalculate = r.sd_recalculate;
    rows.push_back(std::move(s));
    return rows.back();
  };
  std::vector<std::vector<const RepetitionRecord*>> groups;
  for (const auto& r : result.records) {
    SummaryRow& s = find(r);
    const auto idx = static_cast<std::size_t>(&s - rows.data());
    if (groups.size() <= idx) groups.resize(idx + 1);
    groups[idx].push_back(&r);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    SummaryRow& s = rows[g];
    std::vector<const RepetitionRecord*> ok;
    s.repetitions = groups[g].size();
    for (const auto* r : groups[g]) {
      if (r->failed) ++s.failures;
      else ok.push_back(r);
    }
    s.first_split_share.assign(p, 0.0);
    s.split_feature_total_mean.assign(p, 0.0);
    s.pint_significant_share.assign(p, 0.0);
    s.pint_p_mean.assign(p, 0.0);
    s.h_statistic_mean.assign(p, 0.0);
    if (ok.empty()) continue;
    const double k = static_cast<double>(ok.size());
    std::vector<double> leaves, mse;
    bool any_value = false;
    for (const auto* r : ok) {
      mse.push_back(r->test_mse);
      leaves.push_back(static_cast<double>(r->leaves));
      if (r->first_split_feature) s.first_split_share[*r->first_split_feature] += 1.0 / k;
      if (r->first_split_value) {
        if (!any_value) s.split_value_min = s.split_value_max = *r->first_split_value;
        s.split_value_min = std::min(s.split_value_min, *r->first_split_value);
        s.split_value_max = std::max(s.split_value_max, *r->first_split_value);
        any_value = true;
      }
      for (std::size_t j = 0; j < r->split_feature_total.size() && j < p; ++j)
        s.split_feature_total_mean[j] += r->split_feature_total[j] / k;
      for (std::size_t j = 0; j < r->pint_significant.size() && j < p; ++j) {
        s.pint_significant_share[j] += r->pint_significant[j] ? 1.0 / k : 0.0;
        s.pint_p_mean[j] += r->pint_p_values[j] / k;
      }
      for (std::size_t j = 0; j < r->h_statistic.size() && j < p; ++j) s.h_statistic_mean[j] += r->h_statistic[j] / k;
      bool second = false;
      for (const auto& f : r->second_level_features) second = second || f.has_value();
      s.second_level_share += second ? 1.0 / k : 0.0;
      s.r2_total_mean += r->r2_total / k;
    }
    s.test_mse_mean = std::accumulate(mse.begin(), mse.end(), 0.0) / k;
    double ss = 0.0;
    for (double m : mse) ss += (m - s.test_mse_mean) * (m - s.test_mse_mean);
    s.test_mse_sd = ok.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    std::sort(leaves.begin(), leaves.end());
    s.leaves_min = leaves.front();
    s.leaves_max = leaves.back();
    s.leaves_median = quantile_sorted(leaves, 0.5);
  }
  return rows;
}

}  // namespace gadget
