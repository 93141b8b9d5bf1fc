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

#include "gadget/effects.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "gadget/parallel.hpp"

namespace gadget {
namespace {

constexpr std::size_t kChunkRows = 4096;

// Predicts a large query matrix in row chunks spread over the workers.
Vector predict_parallel(const Predictor& pr, const Matrix& q) {
  const std::size_t n = static_cast<std::size_t>(q.rows());
  if (n <= kChunkRows || thread_count() <= 1) return pr.predict(q);
  Vector out(q.rows());
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  parallel_for(chunks, [&](std::size_t c) {
    const auto begin = static_cast<Eigen::Index>(c * kChunkRows);
    const auto len = static_cast<Eigen::Index>(std::min(kChunkRows, n - c * kChunkRows));
    Matrix part = q.middleRows(begin, len);
    out.segment(begin, len) = pr.predict(part);
  });
  return out;
}

double shapley_weight(std::size_t coalition, std::size_t p) {
  // |W|! (p - |W| - 1)! / p!
  double w = 1.0 / static_cast<double>(p);
  for (std::size_t k = 1; k <= coalition; ++k)
    w *= static_cast<double>(k) / static_cast<double>(p - k);
  return w;
}

// Predictions f(x_W, b_-W) for every coalition mask W and every background
// row in [b_begin, b_end). Layout: out[mask * nb + b].
Vector coalition_predictions(const Predictor& pr, const Dataset& d, std::size_t row,
                             const RowSet& background, std::size_t b_begin, std::size_t b_end) {
  const std::size_t p = d.cols();
  const std::size_t masks = std::size_t{1} << p;
  const std::size_t nb = b_end - b_begin;
  Matrix q(static_cast<Eigen::Index>(masks * nb), static_cast<Eigen::Index>(p));
  for (std::size_t mask = 0; mask < masks; ++mask) {
    for (std::size_t b = 0; b < nb; ++b) {
      const auto r = static_cast<Eigen::Index>(mask * nb + b);
      q.row(r) = d.x().row(static_cast<Eigen::Index>(background[b_begin + b]));
      for (std::size_t j = 0; j < p; ++j)
        if (mask >> j & 1) q(r, static_cast<Eigen::Index>(j)) = d.at(row, j);
    }
  }
  return pr.predict(q);
}

std::size_t background_chunk(std::size_t p) {
  return std::max<std::size_t>(1, kChunkRows / (std::size_t{1} << p));
}

bool has_fast_path(const Predictor& pr, const Dataset& d, bool enabled) {
  if (!enabled) return false;
  std::vector<double> phi(d.cols());
  std::vector<double> x(d.cols(), 0.0);
  return pr.baseline_shapley(x, x, phi);
}

std::span<const double> data_row(const Dataset& d, std::size_t i) {
  return {d.x().data() + i * d.cols(), d.cols()};
}

}  // namespace

// ---------------------------------------------------------------------------
// ICE and partial dependence

IceMatrix ice(const Predictor& pr, const Dataset& d, const RowSet& rows, std::size_t j,
              const GridSpec& grid) {
  if (grid.points.empty()) throw_usage("ICE grid is empty");
  if (rows.empty()) throw_usage("ICE needs at least one row");
  if (j >= d.cols()) throw_usage("ICE feature index out of range");
  const std::size_t m = grid.points.size();
  Matrix q(static_cast<Eigen::Index>(rows.size() * m), static_cast<Eigen::Index>(d.cols()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const auto r = static_cast<Eigen::Index>(i * m + k);
      q.row(r) = d.x().row(static_cast<Eigen::Index>(rows[i]));
      q(r, static_cast<Eigen::Index>(j)) = grid.points[k];
    }
  }
  const Vector pred = predict_parallel(pr, q);
  IceMatrix out;
  out.feature = j;
  out.grid = grid;
  out.rows = rows;
  out.values = Eigen::Map<const Matrix>(pred.data(), static_cast<Eigen::Index>(rows.size()),
                                        static_cast<Eigen::Index>(m));
  out.centers = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
  return out;
}

IceMatrix center_ice(const IceMatrix& m) {
  if (m.centered) return m;
  IceMatrix out = m;
  out.centers = m.values.rowwise().mean();
  out.values = m.values.colwise() - out.centers;
  out.centered = true;
  return out;
}

std::string to_string(CurveMethod m) {
  switch (m) {
    case CurveMethod::kPD:
      return "pd";
    case CurveMethod::kPDCentered:
      return "pd-centered";
    case CurveMethod::kALECentered:
      return "ale-centered";
    case CurveMethod::kSD:
      return "sd";
  }
  return "pd";
}

EffectCurve pd_curve(const IceMatrix& m) {
  EffectCurve c;
  c.feature = m.feature;
  c.method = m.centered ? CurveMethod::kPDCentered : CurveMethod::kPD;
  c.grid = m.grid.points;
  const Vector means = m.values.colwise().mean();
  c.values.assign(means.data(), means.data() + means.size());
  return c;
}

// ---------------------------------------------------------------------------
// Accumulated local effects

std::size_t default_ale_intervals(std::size_t rows) {
  return std::max<std::size_t>(1, std::min<std::size_t>(20, rows / 10));
}

std::size_t ale_interval_of(const std::vector<double>& b, double value) {
  const std::size_t K = b.size() - 1;
  if (K == 0 || value <= b[1]) return 0;
  auto it = std::lower_bound(b.begin() + 1, b.end(), value);
  if (it == b.end()) return K - 1;
  return static_cast<std::size_t>(it - b.begin()) - 1;
}

std::vector<double> ale_boundaries(const Dataset& d, const RowSet& rows, std::size_t j,
                                   std::size_t n_intervals) {
  if (rows.empty()) throw_numeric("degenerate feature in subspace: no rows");
  std::vector<double> v = column_values(d, j, rows);
  std::sort(v.begin(), v.end());
  if (v.front() == v.back())
    throw_numeric("degenerate feature in subspace: '" + d.feature(j).name + "' is constant");
  std::vector<double> z;
  if (d.feature(j).categorical()) {
    z = v;
    z.erase(std::unique(z.begin(), z.end()), z.end());
    return z;
  }
  const std::size_t K = std::max<std::size_t>(1, n_intervals);
  for (std::size_t k = 0; k <= K; ++k) {
    const double q = quantile_sorted(v, static_cast<double>(k) / static_cast<double>(K));
    if (z.empty() || q > z.back()) z.push_back(q);
  }
  std::vector<std::size_t> counts(z.size() - 1, 0);
  for (double x : v) ++counts[ale_interval_of(z, x)];
  std::vector<double> merged{z[0], z[1]};
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] == 0) merged.back() = z[k + 1];
    else merged.push_back(z[k + 1]);
  }
  return merged;
}

AleDerivatives ale_derivatives(const Predictor& pr, const Dataset& d, const RowSet& rows,
                               std::size_t j, std::size_t n_intervals) {
  return ale_derivatives(pr, d, rows, j, ale_boundaries(d, rows, j, n_intervals));
}

AleDerivatives ale_derivatives(const Predictor& pr, const Dataset& d, const RowSet& rows,
                               std::size_t j, const std::vector<double>& boundaries) {
  if (boundaries.size() < 2) throw_numeric("degenerate feature in subspace: fewer than two boundaries");
  AleDerivatives out;
  out.feature = j;
  out.categorical = d.feature(j).categorical();
  out.boundaries = boundaries;
  const std::size_t K = boundaries.size() - 1;
  out.members.assign(K, {});
  out.differences.assign(K, {});
  Matrix q(static_cast<Eigen::Index>(2 * rows.size()), static_cast<Eigen::Index>(d.cols()));
  std::vector<std::size_t> interval(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = ale_interval_of(boundaries, d.at(rows[i], j));
    interval[i] = k;
    const auto lo = static_cast<Eigen::Index>(2 * i), hi = lo + 1;
    q.row(lo) = d.x().row(static_cast<Eigen::Index>(rows[i]));
    q.row(hi) = q.row(lo);
    q(lo, static_cast<Eigen::Index>(j)) = boundaries[k];
    q(hi, static_cast<Eigen::Index>(j)) = boundaries[k + 1];
  }
  const Vector pred = predict_parallel(pr, q);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.members[interval[i]].push_back(rows[i]);
    out.differences[interval[i]].push_back(pred(static_cast<Eigen::Index>(2 * i + 1)) -
                                           pred(static_cast<Eigen::Index>(2 * i)));
  }
  return out;
}

EffectCurve ale_curve(const AleDerivatives& der) {
  const std::size_t K = der.intervals();
  if (K == 0) throw_numeric("ALE curve needs at least one interval");
  std::vector<double> mean(K, 0.0), sd(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& v = der.differences[k];
    if (v.empty()) continue;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    mean[k] = m;
    sd[k] = std::sqrt(ss / static_cast<double>(v.size()));
  }
  std::vector<double> acc(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) acc[k + 1] = acc[k] + mean[k];
  double weighted = 0.0, total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double n = static_cast<double>(der.count(k));
    weighted += n * 0.5 * (acc[k] + acc[k + 1]);
    total += n;
  }
  const double shift = total > 0 ? weighted / total : 0.0;
  EffectCurve c;
  c.feature = der.feature;
  c.method = CurveMethod::kALECentered;
  c.grid = der.boundaries;
  c.values.resize(K + 1);
  c.heterogeneity.resize(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    c.values[k] = acc[k] - shift;
    c.heterogeneity[k] = sd[k == 0 ? 0 : k - 1];
  }
  return c;
}

// ---------------------------------------------------------------------------
// Shapley values

std::vector<Matrix> pairwise_shapley(const Predictor& pr, const Dataset& d, const RowSet& x_rows,
                                     const RowSet& background,
                                     const std::vector<std::size_t>& features,
                                     bool use_fast_path) {
  const std::size_t p = d.cols();
  for (std::size_t j : features)
    if (j >= p) throw_usage("Shapley feature index out of range");
  if (background.empty()) throw_usage("Shapley background is empty");
  std::vector<Matrix> out(features.size(),
                          Matrix(static_cast<Eigen::Index>(x_rows.size()),
                                 static_cast<Eigen::Index>(background.size())));
  if (has_fast_path(pr, d, use_fast_path)) {
    parallel_for(x_rows.size(), [&](std::size_t i) {
      std::vector<double> phi(p);
      const auto x = data_row(d, x_rows[i]);
      for (std::size_t b = 0; b < background.size(); ++b) {
        pr.baseline_shapley(x, data_row(d, background[b]), phi);
        for (std::size_t f = 0; f < features.size(); ++f)
          out[f](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = phi[features[f]];
      }
    });
    return out;
  }
  if (p > 12) throw_usage("exact Shapley enumeration supports at most 12 features");
  const std::size_t masks = std::size_t{1} << p;
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) weight[s] = shapley_weight(s, p);
  const std::size_t chunk = background_chunk(p);
  parallel_for(x_rows.size(), [&](std::size_t i) {
    for (std::size_t b0 = 0; b0 < background.size(); b0 += chunk) {
      const std::size_t b1 = std::min(background.size(), b0 + chunk);
      const std::size_t nb = b1 - b0;
      const Vector pred = coalition_predictions(pr, d, x_rows[i], background, b0, b1);
      for (std::size_t f = 0; f < features.size(); ++f) {
        const std::size_t bit = std::size_t{1} << features[f];
        for (std::size_t b = 0; b < nb; ++b) {
          double phi = 0.0;
          for (std::size_t mask = 0; mask < masks; ++mask) {
            if (mask & bit) continue;
            const double w = weight[static_cast<std::size_t>(std::popcount(mask))];
            phi += w * (pred(static_cast<Eigen::Index>((mask | bit) * nb + b)) -
                        pred(static_cast<Eigen::Index>(mask * nb + b)));
          }
          out[f](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b0 + b)) = phi;
        }
      }
    }
  });
  return out;
}

Matrix pairwise_shapley(const Predictor& pr, const Dataset& d, const RowSet& x_rows,
                        const RowSet& background, std::size_t j, bool use_fast_path) {
  return std::move(pairwise_shapley(pr, d, x_rows, background, std::vector<std::size_t>{j},
                                    use_fast_path)[0]);
}

ShapleyMatrix shapley(const Predictor& pr, const Dataset& d, const RowSet& rows,
                      const std::vector<std::size_t>& features, const ShapleyConfig& config,
                      const RowSet* background) {
  const std::size_t p = d.cols();
  if (features.empty()) throw_usage("Shapley needs at least one feature");
  for (std::size_t j : features)
    if (j >= p) throw_usage("Shapley feature index out of range");
  ShapleyMatrix out;
  out.features = features;
  out.rows = rows;
  out.background = background ? *background : rows;
  out.estimator = config.estimator;
  if (out.background.empty()) throw_usage("Shapley background is empty");
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.values = Matrix::Zero(n, static_cast<Eigen::Index>(features.size()));
  const RowSet& bg = out.background;

  if (config.estimator == ShapleyEstimator::kPermutation) {
    if (config.samples < 1) throw_usage("permutation Shapley needs at least one sample");
    out.samples = config.samples;
    parallel_for(rows.size(), [&](std::size_t i) {
      auto rng = make_rng(config.seed, Stream::kShapley, rows[i]);
      std::vector<std::size_t> perm(p);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      const std::size_t S = config.samples;
      Matrix q(static_cast<Eigen::Index>(S * (p + 1)), static_cast<Eigen::Index>(p));
      std::vector<std::vector<std::size_t>> orders(S);
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t k = p; k > 1; --k) std::swap(perm[k - 1], perm[rng() % k]);
        orders[s] = perm;
        const std::size_t b = bg[rng() % bg.size()];
        const auto base = static_cast<Eigen::Index>(s * (p + 1));
        q.row(base) = d.x().row(static_cast<Eigen::Index>(b));
        for (std::size_t k = 0; k < p; ++k) {
          q.row(base + static_cast<Eigen::Index>(k) + 1) = q.row(base + static_cast<Eigen::Index>(k));
          q(base + static_cast<Eigen::Index>(k) + 1, static_cast<Eigen::Index>(perm[k])) = d.at(rows[i], perm[k]);
        }
      }
      const Vector pred = pr.predict(q);
      std::vector<double> phi(p, 0.0);
      for (std::size_t s = 0; s < S; ++s) {
        const auto base = static_cast<Eigen::Index>(s * (p + 1));
        for (std::size_t k = 0; k < p; ++k)
          phi[orders[s][k]] += pred(base + static_cast<Eigen::Index>(k) + 1) - pred(base + static_cast<Eigen::Index>(k));
      }
      for (std::size_t f = 0; f < features.size(); ++f)
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
            phi[features[f]] / static_cast<double>(S);
    });
    return out;
  }

  if (has_fast_path(pr, d, config.use_fast_path)) {
    parallel_for(rows.size(), [&](std::size_t i) {
      std::vector<double> phi(p), sum(p, 0.0);
      const auto x = data_row(d, rows[i]);
      for (std::size_t b : bg) {
        pr.baseline_shapley(x, data_row(d, b), phi);
        for (std::size_t k = 0; k < p; ++k) sum[k] += phi[k];
      }
      for (std::size_t f = 0; f < features.size(); ++f)
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
            sum[features[f]] / static_cast<double>(bg.size());
    });
    return out;
  }

  if (p > 12) throw_usage("exact Shapley enumeration supports at most 12 features");
  const std::size_t masks = std::size_t{1} << p;
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) weight[s] = shapley_weight(s, p);
  const std::size_t chunk = background_chunk(p);
  parallel_for(rows.size(), [&](std::size_t i) {
    std::vector<double> v(masks, 0.0);
    for (std::size_t b0 = 0; b0 < bg.size(); b0 += chunk) {
      const std::size_t b1 = std::min(bg.size(), b0 + chunk);
      const std::size_t nb = b1 - b0;
      const Vector pred = coalition_predictions(pr, d, rows[i], bg, b0, b1);
      for (std::size_t mask = 0; mask < masks; ++mask)
        v[mask] += pred.segment(static_cast<Eigen::Index>(mask * nb), static_cast<Eigen::Index>(nb)).sum();
    }
    for (double& x : v) x /= static_cast<double>(bg.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
      const std::size_t bit = std::size_t{1} << features[f];
      double phi = 0.0;
      for (std::size_t mask = 0; mask < masks; ++mask)
        if (!(mask & bit)) phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = phi;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// SHAP dependence

Smoother fit_sd(const Dataset& d, std::size_t j, std::span<const double> xs,
                std::span<const double> phi, const SmootherConfig& config) {
  if (d.feature(j).categorical()) return Smoother::fit_categories(xs, phi);
  return Smoother::fit(xs, phi, config);
}

EffectCurve sd_curve(const Dataset& d, std::size_t j, std::span<const double> xs,
                     std::span<const double> phi, const std::vector<double>& display_grid,
                     const SmootherConfig& config, double* rss) {
  const Smoother s = fit_sd(d, j, xs, phi, config);
  if (rss) *rss = s.rss();
  EffectCurve c;
  c.feature = j;
  c.method = CurveMethod::kSD;
  c.grid = display_grid;
  c.values = s.evaluate(display_grid);
  if (display_grid.empty()) return c;
  std::vector<double> ss(display_grid.size(), 0.0), cnt(display_grid.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto it = std::lower_bound(display_grid.begin(), display_grid.end(), xs[i]);
    std::size_t k = static_cast<std::size_t>(it - display_grid.begin());
    if (k == display_grid.size()) k = display_grid.size() - 1;
    else if (k > 0 && xs[i] - display_grid[k - 1] < display_grid[k] - xs[i]) k = k - 1;
    const double r = phi[i] - s(xs[i]);
    ss[k] += r * r;
    cnt[k] += 1.0;
  }
  c.heterogeneity.resize(display_grid.size());
  for (std::size_t k = 0; k < display_grid.size(); ++k)
    c.heterogeneity[k] = cnt[k] > 0 ? std::sqrt(ss[k] / cnt[k]) : 0.0;
  return c;
}

}  // namespace gadget
