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

#include "gadget/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gadget/parallel.hpp"

namespace gadget {
namespace {

std::size_t s_index(const GadgetTree& tree, std::size_t j) {
  const auto& S = tree.config.S;
  auto it = std::find(S.begin(), S.end(), j);
  if (it == S.end()) throw_usage("feature " + std::to_string(j + 1) + " is not a feature of interest");
  return static_cast<std::size_t>(it - S.begin());
}

const GadgetNode& node_at(const GadgetTree& tree, int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= tree.nodes.size()) throw_usage("node id out of range");
  return tree.nodes[static_cast<std::size_t>(id)];
}

double drop(const GadgetTree& tree, const GadgetNode& p, std::size_t s) {
  const GadgetNode& l = node_at(tree, p.left);
  const GadgetNode& r = node_at(tree, p.right);
  return p.risk[s] - l.risk[s] - r.risk[s];
}

}  // namespace

double split_reduction(const GadgetTree& tree, int node, std::size_t j) {
  const std::size_t s = s_index(tree, j);
  const GadgetNode& p = node_at(tree, node);
  if (p.leaf()) throw_usage("node " + std::to_string(node) + " is a leaf");
  const double root = tree.root().risk[s];
  return root > 0.0 ? drop(tree, p, s) / root : 0.0;
}

double feature_pair_reduction(const GadgetTree& tree, std::size_t z, std::size_t j) {
  double sum = 0.0;
  for (const auto& n : tree.nodes)
    if (!n.leaf() && n.split->rule.feature == z) sum += split_reduction(tree, n.id, j);
  return sum;
}

double split_feature_total(const GadgetTree& tree, std::size_t z) {
  const double root = tree.root().total_risk();
  if (!(root > 0.0)) return 0.0;
  double sum = 0.0;
  for (const auto& n : tree.nodes) {
    if (n.leaf() || n.split->rule.feature != z) continue;
    for (std::size_t s = 0; s < n.risk.size(); ++s) sum += drop(tree, n, s);
  }
  return sum / root;
}

TreeRSquared tree_r_squared(const GadgetTree& tree) {
  const std::size_t k = tree.config.S.size();
  std::vector<double> leaf(k, 0.0);
  for (const auto& n : tree.nodes)
    if (n.leaf())
      for (std::size_t s = 0; s < k; ++s) leaf[s] += n.risk[s];
  TreeRSquared out;
  const auto& root = tree.root().risk;
  for (std::size_t s = 0; s < k; ++s) out.feature.push_back(root[s] > 0.0 ? 1.0 - leaf[s] / root[s] : 0.0);
  const double rt = std::accumulate(root.begin(), root.end(), 0.0);
  const double lt = std::accumulate(leaf.begin(), leaf.end(), 0.0);
  out.total = rt > 0.0 ? 1.0 - lt / rt : 0.0;
  return out;
}

InteractionReport interaction_report(const GadgetTree& tree) {
  InteractionReport rep;
  rep.S = tree.config.S;
  rep.Z = tree.config.Z;
  const auto name = [&](std::size_t j) {
    return j < tree.feature_names.size() ? tree.feature_names[j] : "x" + std::to_string(j + 1);
  };
  for (const auto& n : tree.nodes) {
    if (n.leaf()) continue;
    SplitMeasure m;
    m.node = n.id;
    m.split_feature = n.split->rule.feature;
    for (std::size_t j : rep.S) {
      const double v = split_reduction(tree, n.id, j);
      if (v < 0.0)
        rep.warnings.push_back("split at node " + std::to_string(n.id) + " increased the heterogeneity of '" +
                               name(j) + "' (I = " + std::to_string(v) + ")");
      m.reduction.push_back(v);
    }
    rep.splits.push_back(std::move(m));
  }
  for (std::size_t z : rep.Z) {
    std::vector<double> row;
    for (std::size_t j : rep.S) row.push_back(feature_pair_reduction(tree, z, j));
    rep.pair.push_back(std::move(row));
    rep.split_feature_total.push_back(split_feature_total(tree, z));
  }
  const TreeRSquared r2 = tree_r_squared(tree);
  rep.r2_feature = r2.feature;
  rep.r2_total = r2.total;
  return rep;
}

namespace {

std::vector<double> h_for(const Predictor& pr, const Dataset& d, const std::vector<std::size_t>& features,
                         std::size_t max_rows, std::uint64_t seed) {
  const std::size_t n_all = d.rows();
  RowSet rows = all_rows(n_all);
  if (max_rows > 0 && n_all > max_rows) {
    auto rng = make_rng(seed, Stream::kShapley, 0x4853);
    for (std::size_t k = 0; k < max_rows; ++k) std::swap(rows[k], rows[k + rng() % (n_all - k)]);
    rows.resize(max_rows);
    std::sort(rows.begin(), rows.end());
  }
  const std::size_t n = rows.size();
  const Matrix x = d.rows_matrix(rows);
  Vector f = pr.predict(x);
  f.array() -= f.mean();
  const double denom = f.squaredNorm();
  if (!(denom > 0.0)) throw_numeric("degenerate model: predictions have zero variance");
  std::vector<double> out;
  for (std::size_t j : features) {
    // m(i, k) = f(x_j of row i, x_-j of row k)
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, [&](std::size_t i) {
      Matrix q = x;
      q.col(static_cast<Eigen::Index>(j)).setConstant(x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      m.row(static_cast<Eigen::Index>(i)) = pr.predict(q).transpose();
    });
    Vector pd_j = m.rowwise().mean();
    Vector pd_not_j = m.colwise().mean().transpose();
    pd_j.array() -= pd_j.mean();
    pd_not_j.array() -= pd_not_j.mean();
    out.push_back((f - pd_j - pd_not_j).squaredNorm() / denom);
  }
  return out;
}

}  // namespace

std::vector<double> h_statistics(const Predictor& pr, const Dataset& d, std::size_t max_rows,
                                 std::uint64_t seed) {
  std::vector<std::size_t> all(d.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return h_for(pr, d, all, max_rows, seed);
}

double h_statistic(const Predictor& pr, const Dataset& d, std::size_t j, std::size_t max_rows,
                   std::uint64_t seed) {
  if (j >= d.cols()) throw_usage("feature index out of range");
  return h_for(pr, d, {j}, max_rows, seed)[0];
}

}  // namespace gadget
