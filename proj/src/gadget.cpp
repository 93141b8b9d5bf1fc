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
#include <deque>
#include <numeric>

#include "gadget/parallel.hpp"

namespace gadget {

std::string to_string(Method m) {
  switch (m) {
    case Method::kPD:
      return "pd";
    case Method::kALE:
      return "ale";
    case Method::kSD:
      return "sd";
  }
  return "pd";
}

Method method_from_string(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "pd") return Method::kPD;
  if (v == "ale") return Method::kALE;
  if (v == "sd" || v == "shap") return Method::kSD;
  throw_usage("unknown method '" + s + "' (expected pd, ale or sd)");
}

void GadgetConfig::resolve(const Dataset& d) {
  const std::size_t p = d.cols();
  auto fix = [&](std::vector<std::size_t>& set, const char* name) {
    if (set.empty()) {
      set.resize(p);
      std::iota(set.begin(), set.end(), std::size_t{0});
    }
    for (std::size_t j : set)
      if (j >= p)
        throw_usage(std::string("feature index ") + std::to_string(j + 1) + " in " + name +
                    " is out of range (dataset has " + std::to_string(p) + " features)");
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  };
  fix(S, "S");
  fix(Z, "Z");
  if (stop.min_node_size < 2) throw_usage("min node size must be at least 2");
  if (!(stop.gamma >= 0.0 && stop.gamma <= 1.0)) throw_usage("gamma must lie in [0, 1]");
  if (!(stop.r2_total_target >= 0.0 && stop.r2_total_target <= 1.0))
    throw_usage("R2 target must lie in [0, 1]");
  if (grid_size < 2) throw_usage("grid size must be at least 2");
  if (max_candidates < 1) throw_usage("max candidates must be at least 1");
  if (!(ale_repair_window >= 0.0)) throw_usage("repair window must be nonnegative");
}

Constraint SplitRule::left() const {
  if (categorical) return {feature, Constraint::Op::kInSet, 0.0, left_categories};
  return {feature, Constraint::Op::kLessEqual, threshold, {}};
}

Constraint SplitRule::right() const {
  if (categorical) return {feature, Constraint::Op::kInSet, 0.0, right_categories};
  return {feature, Constraint::Op::kGreater, threshold, {}};
}

double GadgetNode::total_risk() const { return std::accumulate(risk.begin(), risk.end(), 0.0); }

std::vector<int> GadgetTree::leaves() const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.leaf()) out.push_back(n.id);
  return out;
}

std::size_t GadgetTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

namespace {

struct ThresholdCount {
  double threshold;
  std::size_t n_left;
};

std::vector<ThresholdCount> numeric_candidates(std::vector<double> v, std::size_t max_candidates,
                                               std::size_t min_node) {
  std::vector<ThresholdCount> out;
  if (v.size() < 2) return out;
  std::sort(v.begin(), v.end());
  std::vector<double> q;
  for (std::size_t k = 0; k <= max_candidates; ++k) {
    const double x = quantile_sorted(v, static_cast<double>(k) / static_cast<double>(max_candidates));
    if (q.empty() || x > q.back()) q.push_back(x);
  }
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    double t = 0.5 * (q[k] + q[k + 1]);
    if (!(t < q[k + 1])) t = q[k];  // adjacent doubles
    const auto n_left = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
    if (n_left >= min_node && v.size() - n_left >= min_node) out.push_back({t, n_left});
  }
  return out;
}

// FNV-1a, stable across platforms, for seeding per-region random streams.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Positions of the (sorted) child rows within the (sorted) parent rows.
std::vector<std::size_t> positions(const RowSet& parent, const RowSet& child) {
  std::vector<std::size_t> pos;
  pos.reserve(child.size());
  std::size_t a = 0;
  for (std::size_t r : child) {
    while (parent[a] != r) ++a;
    pos.push_back(a);
  }
  return pos;
}

struct FeatureRoot {
  std::size_t j = 0;
  bool categorical = false;
  std::vector<double> grid;        // PD grid, SD display grid
  Matrix ice;                      // PD: n x m
  std::vector<double> boundaries;  // ALE at the root
  Matrix pairs;                    // SD with recalculation: n x |pool|
  std::vector<double> phi;         // SD at the root, per data row
};

struct FeatureState {
  std::vector<char> feasible;          // PD
  std::vector<double> boundaries;      // ALE
  std::vector<std::size_t> interval;   // ALE, aligned with rows
  std::vector<double> values;          // ALE differences / SD values, aligned with rows
  std::vector<double> loss;
  double risk = 0.0;
};

struct State {
  Subspace subspace;
  RowSet rows;
  std::vector<FeatureState> f;

  double total() const {
    double t = 0.0;
    for (const auto& s : f) t += s.risk;
    return t;
  }
  std::vector<double> risks() const {
    std::vector<double> r;
    for (const auto& s : f) r.push_back(s.risk);
    return r;
  }
};

double population_variance(const Vector& v) {
  if (v.size() == 0) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> numeric_split_candidates(std::vector<double> values, std::size_t max_candidates,
                                             std::size_t min_node_size) {
  std::vector<double> out;
  for (const auto& c : numeric_candidates(std::move(values), max_candidates, min_node_size))
    out.push_back(c.threshold);
  return out;
}

struct Explainer::Impl {
  GadgetConfig cfg;
  Dataset d;
  PredictorPtr pr;
  std::vector<FeatureRoot> roots;
  RowSet pool;
  std::vector<std::ptrdiff_t> pool_pos;
  Vector pred;
  double pred_var = 0.0;

  Impl(GadgetConfig c, const Dataset& data, PredictorPtr p)
      : cfg(std::move(c)), d(data), pr(std::move(p)) {
    if (!pr) throw_usage("predictor is missing");
    if (pr->num_features() != d.cols())
      throw_data("predictor expects " + std::to_string(pr->num_features()) + " columns, got " +
                 std::to_string(d.cols()));
    cfg.resolve(d);
    const std::size_t n = d.rows();
    pred = pr->predict(d.x());
    pred_var = population_variance(pred);
    const RowSet all = all_rows(n);
    for (std::size_t j : cfg.S) {
      FeatureRoot r;
      r.j = j;
      r.categorical = d.feature(j).categorical();
      if (auto g = pr->archived_grid(j)) r.grid = *g;
      else r.grid = make_grid(d, j, cfg.grid_size, cfg.grid_mode).points;
      if (cfg.method == Method::kPD) {
        r.ice = ice(*pr, d, all, j, GridSpec{j, r.grid, cfg.grid_mode}).values;
      } else if (cfg.method == Method::kALE) {
        const std::size_t K = cfg.ale_intervals ? cfg.ale_intervals : default_ale_intervals(n);
        r.boundaries = ale_boundaries(d, all, j, K);
      }
      roots.push_back(std::move(r));
    }
    if (cfg.method == Method::kSD) init_shapley();
  }

  std::size_t position_in_s(std::size_t j) const {
    auto it = std::find(cfg.S.begin(), cfg.S.end(), j);
    if (it == cfg.S.end())
      throw_usage("feature " + std::to_string(j + 1) + " is not a feature of interest");
    return static_cast<std::size_t>(it - cfg.S.begin());
  }

  void init_shapley() {
    const std::size_t n = d.rows();
    // Linear-type predictors cost O(p) per pair; tree walks and enumeration
    // are far slower, so they get the smaller pool.
    const std::string kind = pr->kind();
    const bool cheap = kind == "linear" || kind == "pairwise" || kind == "constant";
    std::size_t cap = cfg.shapley_background;
    if (cap == 0) cap = cheap ? 1000 : 200;
    if (n <= cap) {
      pool = all_rows(n);
    } else {
      auto rng = make_rng(cfg.seed, Stream::kShapley, 0xb9);
      RowSet idx = all_rows(n);
      for (std::size_t k = 0; k < cap; ++k) std::swap(idx[k], idx[k + rng() % (n - k)]);
      pool.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cap));
      std::sort(pool.begin(), pool.end());
    }
    pool_pos.assign(n, -1);
    for (std::size_t b = 0; b < pool.size(); ++b) pool_pos[pool[b]] = static_cast<std::ptrdiff_t>(b);
    const RowSet all = all_rows(n);
    if (cfg.sd_recalculate) {
      std::vector<Matrix> pairs = pairwise_shapley(*pr, d, all, pool, cfg.S);
      for (std::size_t s = 0; s < roots.size(); ++s) {
        roots[s].pairs = std::move(pairs[s]);
        const Vector m = roots[s].pairs.rowwise().mean();
        roots[s].phi.assign(m.data(), m.data() + m.size());
      }
    } else {
      ShapleyConfig sc;
      sc.seed = cfg.seed;
      const ShapleyMatrix sm = shapley(*pr, d, all, cfg.S, sc, &pool);
      for (std::size_t s = 0; s < roots.size(); ++s) {
        roots[s].phi.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          roots[s].phi[i] = sm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
      }
    }
  }

  // ---- losses

  void evaluate_pd(const FeatureRoot& r, const RowSet& rows, FeatureState& fs) const {
    const std::size_t m = r.grid.size();
    fs.loss.assign(m, 0.0);
    fs.risk = 0.0;
    std::vector<std::size_t> F;
    for (std::size_t k = 0; k < m; ++k)
      if (fs.feasible[k]) F.push_back(k);
    if (F.empty() || rows.empty()) return;
    const double nf = static_cast<double>(F.size());
    const double nr = static_cast<double>(rows.size());
    std::vector<double> center(rows.size(), 0.0), colmean(m, 0.0);
    double mean_center = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* row = r.ice.data() + rows[i] * m;
      double c = 0.0;
      for (std::size_t k : F) {
        c += row[k];
        colmean[k] += row[k];
      }
      center[i] = c / nf;
      mean_center += center[i];
    }
    mean_center /= nr;
    for (std::size_t k : F) colmean[k] = colmean[k] / nr - mean_center;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* row = r.ice.data() + rows[i] * m;
      for (std::size_t k : F) {
        const double dev = row[k] - center[i] - colmean[k];
        fs.loss[k] += dev * dev;
      }
    }
    for (std::size_t k : F) fs.risk += fs.loss[k];
  }

  void evaluate_ale(FeatureState& fs) const {
    const std::size_t K = fs.boundaries.size() < 2 ? 0 : fs.boundaries.size() - 1;
    fs.loss.assign(K, 0.0);
    fs.risk = 0.0;
    if (K == 0) return;
    std::vector<double> sum(K, 0.0), cnt(K, 0.0);
    for (std::size_t i = 0; i < fs.values.size(); ++i) {
      sum[fs.interval[i]] += fs.values[i];
      cnt[fs.interval[i]] += 1.0;
    }
    for (std::size_t k = 0; k < K; ++k)
      if (cnt[k] > 0) sum[k] /= cnt[k];
    for (std::size_t i = 0; i < fs.values.size(); ++i) {
      const double dev = fs.values[i] - sum[fs.interval[i]];
      fs.loss[fs.interval[i]] += dev * dev;
    }
    for (double l : fs.loss) fs.risk += l;
  }

  void evaluate_sd(const FeatureRoot& r, const RowSet& rows, FeatureState& fs) const {
    const std::vector<double> xs = column_values(d, r.j, rows);
    const Smoother s = fit_sd(d, r.j, xs, fs.values, cfg.smoother);
    const auto& g = r.grid;
    fs.loss.assign(g.size(), 0.0);
    fs.risk = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto it = std::lower_bound(g.begin(), g.end(), xs[i]);
      std::size_t k = static_cast<std::size_t>(it - g.begin());
      if (k == g.size()) k = g.size() - 1;
      else if (k > 0 && xs[i] - g[k - 1] < g[k] - xs[i]) k = k - 1;
      const double res = fs.values[i] - s(xs[i]);
      fs.loss[k] += res * res;
    }
    for (double l : fs.loss) fs.risk += l;
  }

  void evaluate(const FeatureRoot& r, const RowSet& rows, FeatureState& fs) const {
    switch (cfg.method) {
      case Method::kPD:
        evaluate_pd(r, rows, fs);
        break;
      case Method::kALE:
        evaluate_ale(fs);
        break;
      case Method::kSD:
        evaluate_sd(r, rows, fs);
        break;
    }
  }

  // ---- states

  State root_state() const {
    State st;
    st.rows = all_rows(d.rows());
    const std::size_t n = d.rows();
    for (const auto& r : roots) {
      FeatureState fs;
      if (cfg.method == Method::kPD) {
        fs.feasible.assign(r.grid.size(), 1);
      } else if (cfg.method == Method::kALE) {
        fs.boundaries = r.boundaries;
        const AleDerivatives der = ale_derivatives(*pr, d, st.rows, r.j, r.boundaries);
        fs.interval.resize(n);
        fs.values.resize(n);
        for (std::size_t k = 0; k < der.intervals(); ++k)
          for (std::size_t i = 0; i < der.members[k].size(); ++i) {
            fs.interval[der.members[k][i]] = k;
            fs.values[der.members[k][i]] = der.differences[k][i];
          }
      } else {
        fs.values = r.phi;
      }
      evaluate(r, st.rows, fs);
      st.f.push_back(std::move(fs));
    }
    return st;
  }

  // Differences f(upper) - f(lower) for the listed positions of `rows`.
  void recompute_differences(std::size_t j, const RowSet& rows, const std::vector<std::size_t>& which,
                             FeatureState& fs) const {
    if (which.empty()) return;
    Matrix q(static_cast<Eigen::Index>(2 * which.size()), static_cast<Eigen::Index>(d.cols()));
    for (std::size_t w = 0; w < which.size(); ++w) {
      const std::size_t i = which[w];
      const auto lo = static_cast<Eigen::Index>(2 * w);
      q.row(lo) = d.x().row(static_cast<Eigen::Index>(rows[i]));
      q.row(lo + 1) = q.row(lo);
      q(lo, static_cast<Eigen::Index>(j)) = fs.boundaries[fs.interval[i]];
      q(lo + 1, static_cast<Eigen::Index>(j)) = fs.boundaries[fs.interval[i] + 1];
    }
    const Vector p = pr->predict(q);
    for (std::size_t w = 0; w < which.size(); ++w)
      fs.values[which[w]] = p(static_cast<Eigen::Index>(2 * w + 1)) - p(static_cast<Eigen::Index>(2 * w));
  }

  // Derivatives of rows close to the split point are replaced by draws
  // matched to the rest of the region when they vary more than twice as much.
  void repair(std::size_t j, double t, const State& st, FeatureState& fs) const {
    if (!cfg.ale_repair || st.rows.size() < 3) return;
    double lo = d.at(st.rows[0], j), hi = lo;
    for (std::size_t r : st.rows) {
      lo = std::min(lo, d.at(r, j));
      hi = std::max(hi, d.at(r, j));
    }
    const double window = cfg.ale_repair_window * (hi - lo);
    std::vector<std::size_t> near;
    std::vector<double> slope(st.rows.size());
    double sum_far = 0.0, n_far = 0.0;
    for (std::size_t i = 0; i < st.rows.size(); ++i) {
      const double width = fs.boundaries[fs.interval[i] + 1] - fs.boundaries[fs.interval[i]];
      slope[i] = fs.values[i] / width;
      if (std::abs(d.at(st.rows[i], j) - t) <= window) {
        near.push_back(i);
      } else {
        sum_far += slope[i];
        n_far += 1.0;
      }
    }
    if (near.size() < 2 || n_far < 2) return;
    const double mean_far = sum_far / n_far;
    double ss_far = 0.0, sum_near = 0.0;
    for (std::size_t i = 0, k = 0; i < st.rows.size(); ++i) {
      if (k < near.size() && near[k] == i) {
        sum_near += slope[i];
        ++k;
        continue;
      }
      ss_far += (slope[i] - mean_far) * (slope[i] - mean_far);
    }
    const double mean_near = sum_near / static_cast<double>(near.size());
    double ss_near = 0.0;
    for (std::size_t i : near) ss_near += (slope[i] - mean_near) * (slope[i] - mean_near);
    const double sd_far = std::sqrt(ss_far / n_far);
    const double sd_near = std::sqrt(ss_near / static_cast<double>(near.size()));
    if (!(sd_near > 2.0 * sd_far)) return;
    auto rng = make_rng(cfg.seed, Stream::kRepair,
                        fnv1a(st.subspace.describe(d)) ^ (static_cast<std::uint64_t>(j) << 48));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i : near) {
      const double width = fs.boundaries[fs.interval[i] + 1] - fs.boundaries[fs.interval[i]];
      fs.values[i] = (mean_far + sd_far * normal(rng)) * width;
    }
  }

  void split_ale(const FeatureRoot& r, const FeatureState& parent, const std::vector<std::size_t>& pos,
                 const Constraint& c, const State& st, FeatureState& fs) const {
    const std::size_t j = r.j;
    if (r.categorical) {
      for (double b : parent.boundaries)
        if (c.admits(b)) fs.boundaries.push_back(b);
      fs.interval.resize(pos.size());
      fs.values.assign(pos.size(), 0.0);
      if (fs.boundaries.size() < 2) return;
      std::vector<std::size_t> all(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) {
        fs.interval[i] = ale_interval_of(fs.boundaries, d.at(st.rows[i], j));
        all[i] = i;
      }
      recompute_differences(j, st.rows, all, fs);
      return;
    }
    const double t = c.threshold;
    fs.boundaries = parent.boundaries;
    fs.interval.resize(pos.size());
    fs.values.resize(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      fs.interval[i] = parent.interval[pos[i]];
      fs.values[i] = parent.values[pos[i]];
    }
    if (st.rows.empty()) return;
    // The new boundary sits at the child's own data edge, so that no
    // difference reaches across the split point into the sibling.
    const bool left = c.op == Constraint::Op::kLessEqual;
    double edge = d.at(st.rows[0], j);
    for (std::size_t r : st.rows) edge = left ? std::max(edge, d.at(r, j)) : std::min(edge, d.at(r, j));
    const auto& B = parent.boundaries;
    if (B.size() < 2 || !(edge > B.front() && edge < B.back()) || std::binary_search(B.begin(), B.end(), edge)) {
      repair(j, t, st, fs);
      return;
    }
    const auto q = static_cast<std::size_t>(std::upper_bound(B.begin(), B.end(), edge) - B.begin());
    fs.boundaries.insert(fs.boundaries.begin() + static_cast<std::ptrdiff_t>(q), edge);
    const std::size_t split_interval = q - 1;
    std::vector<std::size_t> changed;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      std::size_t& k = fs.interval[i];
      if (k > split_interval) {
        ++k;
      } else if (k == split_interval) {
        k = left ? q - 1 : q;
        changed.push_back(i);
      }
    }
    recompute_differences(j, st.rows, changed, fs);
    repair(j, t, st, fs);
  }

  void recalculate_sd(const FeatureRoot& r, const RowSet& rows, FeatureState& fs) const {
    std::vector<Eigen::Index> bg;
    for (std::size_t row : rows)
      if (pool_pos[row] >= 0) bg.push_back(pool_pos[row]);
    if (bg.empty()) return;  // keep the inherited values
    const double nb = static_cast<double>(bg.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* row = r.pairs.data() + rows[i] * static_cast<std::size_t>(r.pairs.cols());
      double s = 0.0;
      for (Eigen::Index b : bg) s += row[b];
      fs.values[i] = s / nb;
    }
  }

  State child(const State& parent, const Constraint& c, RowSet rows) const {
    State st;
    st.subspace = parent.subspace.with(c);
    st.rows = std::move(rows);
    const std::vector<std::size_t> pos = positions(parent.rows, st.rows);
    for (std::size_t s = 0; s < roots.size(); ++s) {
      const FeatureRoot& r = roots[s];
      const FeatureState& pf = parent.f[s];
      FeatureState fs;
      switch (cfg.method) {
        case Method::kPD:
          fs.feasible = pf.feasible;
          if (c.feature == r.j)
            for (std::size_t k = 0; k < r.grid.size(); ++k)
              if (!c.admits(r.grid[k])) fs.feasible[k] = 0;
          break;
        case Method::kALE:
          if (c.feature == r.j) {
            split_ale(r, pf, pos, c, st, fs);
          } else {
            fs.boundaries = pf.boundaries;
            fs.interval.resize(pos.size());
            fs.values.resize(pos.size());
            for (std::size_t i = 0; i < pos.size(); ++i) {
              fs.interval[i] = pf.interval[pos[i]];
              fs.values[i] = pf.values[pos[i]];
            }
          }
          break;
        case Method::kSD:
          fs.values.resize(pos.size());
          for (std::size_t i = 0; i < pos.size(); ++i) fs.values[i] = pf.values[pos[i]];
          if (cfg.sd_recalculate) recalculate_sd(r, st.rows, fs);
          break;
      }
      evaluate(r, st.rows, fs);
      st.f.push_back(std::move(fs));
    }
    return st;
  }

  std::pair<State, State> split(const State& parent, const SplitRule& rule) const {
    RowSet l, r;
    const Constraint lc = rule.left();
    for (std::size_t row : parent.rows) (lc.admits(d.at(row, rule.feature)) ? l : r).push_back(row);
    return {child(parent, lc, std::move(l)), child(parent, rule.right(), std::move(r))};
  }

  State state_for(const Subspace& s) const {
    State st = root_state();
    for (const Constraint& c : s.constraints()) {
      RowSet rows;
      for (std::size_t row : st.rows)
        if (c.admits(d.at(row, c.feature))) rows.push_back(row);
      st = child(st, c, std::move(rows));
    }
    return st;
  }

  // ---- candidates

  std::vector<Candidate> candidates(const State& st, std::size_t z) const {
    std::vector<Candidate> out;
    const std::size_t min_node = cfg.stop.min_node_size;
    if (!d.feature(z).categorical()) {
      for (const auto& tc : numeric_candidates(column_values(d, z, st.rows), cfg.max_candidates, min_node)) {
        Candidate c;
        c.rule.feature = z;
        c.rule.threshold = tc.threshold;
        c.n_left = tc.n_left;
        c.n_right = st.rows.size() - tc.n_left;
        out.push_back(std::move(c));
      }
      return out;
    }
    const std::size_t K_all = d.feature(z).categories.size();
    std::vector<double> count(K_all, 0.0), mean_pred(K_all, 0.0);
    for (std::size_t row : st.rows) {
      const auto code = static_cast<std::size_t>(d.at(row, z));
      count[code] += 1.0;
      mean_pred[code] += pred(static_cast<Eigen::Index>(row));
    }
    std::vector<int> present, admitted;
    for (std::size_t k = 0; k < K_all; ++k) {
      if (st.subspace.admits(z, static_cast<double>(k))) admitted.push_back(static_cast<int>(k));
      if (count[k] > 0) {
        present.push_back(static_cast<int>(k));
        mean_pred[k] /= count[k];
      }
    }
    if (present.size() < 2) return out;
    auto make = [&](std::vector<int> left) {
      std::sort(left.begin(), left.end());
      Candidate c;
      c.rule.feature = z;
      c.rule.categorical = true;
      for (int code : left) c.n_left += static_cast<std::size_t>(count[static_cast<std::size_t>(code)]);
      c.n_right = st.rows.size() - c.n_left;
      if (c.n_left < min_node || c.n_right < min_node) return;
      for (int code : admitted)
        if (!std::binary_search(left.begin(), left.end(), code)) c.rule.right_categories.push_back(code);
      c.rule.left_categories = std::move(left);
      out.push_back(std::move(c));
    };
    const std::size_t K = present.size();
    if (K <= 8) {
      // Every binary partition once: the first present category stays left.
      for (std::size_t mask = 1; mask < (std::size_t{1} << K) - 1; mask += 2) {
        std::vector<int> left;
        for (std::size_t b = 0; b < K; ++b)
          if (mask >> b & 1) left.push_back(present[b]);
        make(std::move(left));
      }
    } else {
      std::vector<int> order = present;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return mean_pred[static_cast<std::size_t>(a)] < mean_pred[static_cast<std::size_t>(b)];
      });
      for (std::size_t k = 1; k < K; ++k) make(std::vector<int>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)));
    }
    return out;
  }

  struct Evaluated {
    std::vector<Candidate> candidates;
    std::vector<double> objective;
  };

  Evaluated evaluate_all(const State& st) const {
    Evaluated e;
    for (std::size_t z : cfg.Z) {
      auto c = candidates(st, z);
      std::move(c.begin(), c.end(), std::back_inserter(e.candidates));
    }
    e.objective.assign(e.candidates.size(), 0.0);
    parallel_for(e.candidates.size(), [&](std::size_t k) {
      auto [l, r] = split(st, e.candidates[k].rule);
      e.objective[k] = l.total() + r.total();
    });
    return e;
  }

  static std::optional<std::size_t> argmin(const std::vector<double>& obj) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < obj.size(); ++k) {
      if (!std::isfinite(obj[k])) continue;
      if (!best || obj[k] < obj[*best] - 1e-12 * std::abs(obj[*best])) best = k;
    }
    return best;
  }

  double risk_scale(std::size_t s) const {
    const double n = static_cast<double>(d.rows());
    const double terms = cfg.method == Method::kPD ? n * static_cast<double>(roots[s].grid.size()) : n;
    return terms * pred_var;
  }
};

Explainer::Explainer(GadgetConfig config, const Dataset& d, PredictorPtr predictor)
    : impl_(std::make_unique<Impl>(std::move(config), d, std::move(predictor))) {}

Explainer::~Explainer() = default;

const GadgetConfig& Explainer::config() const { return impl_->cfg; }
const Dataset& Explainer::dataset() const { return impl_->d; }
const Predictor& Explainer::predictor() const { return *impl_->pr; }

std::vector<double> Explainer::loss(const Subspace& s, std::size_t j) const {
  const std::size_t k = impl_->position_in_s(j);
  return impl_->state_for(s).f[k].loss;
}

double Explainer::risk(const Subspace& s, std::size_t j) const {
  const std::size_t k = impl_->position_in_s(j);
  return impl_->state_for(s).f[k].risk;
}

double Explainer::objective(const Subspace& parent, const SplitRule& rule) const {
  auto [l, r] = impl_->split(impl_->state_for(parent), rule);
  return l.total() + r.total();
}

std::vector<Candidate> Explainer::candidates(const Subspace& parent, std::size_t z) const {
  return impl_->candidates(impl_->state_for(parent), z);
}

std::optional<std::pair<Candidate, double>> Explainer::best_split(const Subspace& parent) const {
  const auto e = impl_->evaluate_all(impl_->state_for(parent));
  const auto k = Impl::argmin(e.objective);
  if (!k) return std::nullopt;
  return std::make_pair(e.candidates[*k], e.objective[*k]);
}

double Explainer::risk_scale(std::size_t j) const { return impl_->risk_scale(impl_->position_in_s(j)); }
double Explainer::prediction_variance() const { return impl_->pred_var; }
const std::vector<double>& Explainer::grid(std::size_t j) const {
  return impl_->roots[impl_->position_in_s(j)].grid;
}

namespace {

RegionalEffect regional_pd(const Explainer::Impl& im, const FeatureRoot& r, const FeatureState& fs,
                           const State& st, int node) {
  const std::size_t m = r.grid.size();
  const double nr = static_cast<double>(st.rows.size());
  std::vector<std::size_t> F;
  for (std::size_t k = 0; k < m; ++k)
    if (fs.feasible[k]) F.push_back(k);
  RegionalEffect e;
  e.node = node;
  e.feature = r.j;
  EffectCurve raw;
  raw.feature = r.j;
  raw.method = CurveMethod::kPD;
  raw.subspace = st.subspace.describe(im.d);
  EffectCurve centered = raw;
  centered.method = CurveMethod::kPDCentered;
  std::vector<double> colmean(F.size(), 0.0);
  double mean_center = 0.0;
  for (std::size_t row : st.rows) {
    const double* v = r.ice.data() + row * m;
    double c = 0.0;
    for (std::size_t f = 0; f < F.size(); ++f) {
      colmean[f] += v[F[f]];
      c += v[F[f]];
    }
    mean_center += c / static_cast<double>(F.size());
  }
  mean_center /= nr;
  for (std::size_t f = 0; f < F.size(); ++f) {
    const double pd = colmean[f] / nr;
    raw.grid.push_back(r.grid[F[f]]);
    raw.values.push_back(pd);
    centered.grid.push_back(r.grid[F[f]]);
    centered.values.push_back(pd - mean_center);
    centered.heterogeneity.push_back(1.96 * std::sqrt(fs.loss[F[f]] / nr));
  }
  e.curve = std::move(centered);
  e.uncentered = std::move(raw);
  return e;
}

RegionalEffect regional_ale(const Explainer::Impl& im, const FeatureRoot& r, const FeatureState& fs,
                            const State& st, int node, std::vector<std::string>& warnings) {
  RegionalEffect e;
  e.node = node;
  e.feature = r.j;
  const std::string where = st.subspace.describe(im.d);
  AleDerivatives der;
  der.feature = r.j;
  der.categorical = r.categorical;
  std::size_t first = SIZE_MAX, last = 0;
  const std::size_t K = fs.boundaries.size() < 2 ? 0 : fs.boundaries.size() - 1;
  std::vector<std::size_t> cnt(K, 0);
  for (std::size_t k : fs.interval) ++cnt[k];
  bool sparse = false;
  for (std::size_t k = 0; k < K; ++k) {
    if (cnt[k] == 0) continue;
    first = std::min(first, k);
    last = std::max(last, k);
    if (cnt[k] < 2) sparse = true;
  }
  if (K == 0 || first == SIZE_MAX) {
    e.curve.feature = r.j;
    e.curve.method = CurveMethod::kALECentered;
    e.curve.subspace = where;
    return e;
  }
  if (sparse && !r.categorical) {
    warnings.push_back("region " + where + ": too few rows per ALE interval of '" +
                       im.d.feature(r.j).name + "', intervals coarsened");
    try {
      der = ale_derivatives(*im.pr, im.d, st.rows, r.j, default_ale_intervals(st.rows.size()));
    } catch (const Error&) {
      e.curve.feature = r.j;
      e.curve.method = CurveMethod::kALECentered;
      e.curve.subspace = where;
      return e;
    }
  } else {
    der.boundaries.assign(fs.boundaries.begin() + static_cast<std::ptrdiff_t>(first),
                          fs.boundaries.begin() + static_cast<std::ptrdiff_t>(last) + 2);
    der.members.assign(last - first + 1, {});
    der.differences.assign(last - first + 1, {});
    for (std::size_t i = 0; i < st.rows.size(); ++i) {
      der.members[fs.interval[i] - first].push_back(st.rows[i]);
      der.differences[fs.interval[i] - first].push_back(fs.values[i]);
    }
  }
  e.curve = ale_curve(der);
  e.curve.subspace = where;
  return e;
}

RegionalEffect regional_sd(const Explainer::Impl& im, const FeatureRoot& r, const FeatureState& fs,
                           const State& st, int node) {
  RegionalEffect e;
  e.node = node;
  e.feature = r.j;
  e.points_x = column_values(im.d, r.j, st.rows);
  e.points_y = fs.values;
  const auto [lo, hi] = std::minmax_element(e.points_x.begin(), e.points_x.end());
  std::vector<double> grid;
  for (double g : r.grid)
    if (g >= *lo && g <= *hi) grid.push_back(g);
  if (grid.size() < 2 && !r.categorical) grid = *lo < *hi ? std::vector<double>{*lo, *hi} : std::vector<double>{*lo};
  e.curve = sd_curve(im.d, r.j, e.points_x, e.points_y, grid, im.cfg.smoother);
  e.curve.subspace = st.subspace.describe(im.d);
  return e;
}

}  // namespace

GadgetTree fit_tree(const GadgetConfig& config, const Dataset& d, PredictorPtr predictor) {
  Explainer ex(config, d, std::move(predictor));
  const Explainer::Impl& im = *ex.impl_;
  const GadgetConfig& cfg = im.cfg;
  GadgetTree tree;
  tree.config = cfg;
  for (const auto& f : d.features()) tree.feature_names.push_back(f.name);
  if (cfg.method == Method::kSD && !cfg.sd_recalculate)
    tree.warnings.push_back("Shapley values are not recomputed inside regions (recalculation disabled)");

  struct Pending {
    int id;
    State state;
    double previous_reduction;
  };
  std::deque<Pending> queue;
  {
    State root = im.root_state();
    GadgetNode n;
    n.id = 0;
    n.rows = root.rows;
    n.risk = root.risks();
    tree.nodes.push_back(std::move(n));
    queue.push_back({0, std::move(root), 1.0});
  }
  const double root_total = tree.nodes[0].total_risk();
  double scale_total = 0.0;
  for (std::size_t s = 0; s < im.roots.size(); ++s) scale_total += im.risk_scale(s);
  const bool negligible = !(root_total > 1e-10 * scale_total) || root_total <= 0.0;
  if (negligible)
    tree.warnings.push_back("no interaction-related heterogeneity at the root; the tree is a single leaf");
  double leaf_total = root_total;

  auto finish_leaf = [&](Pending& p, const std::string& reason) {
    tree.nodes[static_cast<std::size_t>(p.id)].stop_reason = reason;
    for (std::size_t s = 0; s < im.roots.size(); ++s) {
      const FeatureRoot& r = im.roots[s];
      const FeatureState& fs = p.state.f[s];
      switch (cfg.method) {
        case Method::kPD:
          tree.regional.push_back(regional_pd(im, r, fs, p.state, p.id));
          break;
        case Method::kALE:
          tree.regional.push_back(regional_ale(im, r, fs, p.state, p.id, tree.warnings));
          break;
        case Method::kSD:
          tree.regional.push_back(regional_sd(im, r, fs, p.state, p.id));
          break;
      }
    }
  };

  while (!queue.empty()) {
    Pending p = std::move(queue.front());
    queue.pop_front();
    GadgetNode& node = tree.nodes[static_cast<std::size_t>(p.id)];
    const double r2 = root_total > 0.0 ? 1.0 - leaf_total / root_total : 0.0;
    if (negligible) {
      finish_leaf(p, "no heterogeneity");
      continue;
    }
    if (node.depth >= cfg.stop.max_depth) {
      finish_leaf(p, "max depth");
      continue;
    }
    if (p.state.rows.size() < 2 * cfg.stop.min_node_size) {
      finish_leaf(p, "min node size");
      continue;
    }
    if (r2 >= cfg.stop.r2_total_target) {
      finish_leaf(p, "r2 target");
      continue;
    }
    const auto e = im.evaluate_all(p.state);
    for (std::size_t k = 0; k < e.candidates.size(); ++k)
      tree.audit.push_back({p.id, e.candidates[k].rule, e.candidates[k].n_left, e.candidates[k].n_right,
                            e.objective[k]});
    const auto best = Explainer::Impl::argmin(e.objective);
    if (!best) {
      finish_leaf(p, "no admissible split");
      continue;
    }
    const double parent_total = p.state.total();
    const double reduction = parent_total - e.objective[*best];
    const double relative = reduction / root_total;
    if (!(reduction > 0.0) || relative < cfg.stop.gamma * p.previous_reduction) {
      finish_leaf(p, "gamma");
      continue;
    }
    const SplitRule& rule = e.candidates[*best].rule;
    auto [ls, rs] = im.split(p.state, rule);
    SplitRecord rec;
    rec.rule = rule;
    rec.objective = e.objective[*best];
    rec.parent_risk = parent_total;
    rec.relative_reduction = relative;
    leaf_total += rec.objective - parent_total;
    const int parent_id = p.id;
    const std::size_t depth = node.depth + 1;
    node.split = std::move(rec);
    for (State* child : {&ls, &rs}) {
      GadgetNode n;
      n.id = static_cast<int>(tree.nodes.size());
      n.parent = parent_id;
      n.depth = depth;
      n.subspace = child->subspace;
      n.rows = child->rows;
      n.risk = child->risks();
      GadgetNode& parent = tree.nodes[static_cast<std::size_t>(parent_id)];
      (parent.left < 0 ? parent.left : parent.right) = n.id;
      tree.nodes.push_back(std::move(n));
      queue.push_back({tree.nodes.back().id, std::move(*child), relative});
    }
  }
  return tree;
}

RootRisks root_risks(const GadgetConfig& config, const Dataset& d, PredictorPtr predictor) {
  GadgetConfig c = config;
  if (c.method == Method::kSD) c.sd_recalculate = false;
  const Explainer ex(c, d, std::move(predictor));
  const Explainer::Impl& im = *ex.impl_;
  const State root = im.root_state();
  RootRisks out;
  for (std::size_t s = 0; s < im.roots.size(); ++s) {
    out.risk.push_back(root.f[s].risk);
    const double scale = im.risk_scale(s);
    out.normalized.push_back(scale > 0.0 ? root.f[s].risk / scale : 0.0);
  }
  return out;
}

}  // namespace gadget
