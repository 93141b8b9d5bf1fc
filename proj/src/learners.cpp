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

#include "gadget/learners.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gadget {
namespace {

std::span<const double> row_span(const Matrix& x, Eigen::Index i) {
  return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

int category_of(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

Vector Predictor::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != num_features())
    throw_data("predictor expects " + std::to_string(num_features()) + " columns, got " +
               std::to_string(x.cols()));
  Vector out(x.rows());
  if (x.rows() == 0) return out;
  predict_into(x, out);
  return out;
}

double Predictor::predict_row(std::span<const double> row) const {
  Matrix x(1, static_cast<Eigen::Index>(row.size()));
  std::copy(row.begin(), row.end(), x.data());
  return predict(x)(0);
}

bool Predictor::baseline_shapley(std::span<const double>, std::span<const double>,
                                 std::span<double>) const {
  return false;
}

std::optional<std::vector<double>> Predictor::archived_grid(std::size_t) const {
  return std::nullopt;
}

void ConstantPredictor::predict_into(const Matrix&, Vector& out) const { out.setConstant(value_); }

bool ConstantPredictor::baseline_shapley(std::span<const double>, std::span<const double>,
                                         std::span<double> phi) const {
  std::fill(phi.begin(), phi.end(), 0.0);
  return true;
}

void FunctionPredictor::predict_into(const Matrix& x, Vector& out) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = fn_(row_span(x, i));
}

// ---------------------------------------------------------------------------
// Linear models

LinearPredictor::LinearPredictor(std::vector<FeatureMeta> features, std::vector<Column> columns,
                                 double intercept, std::vector<double> coefficients,
                                 bool pairwise)
    : features_(std::move(features)),
      columns_(std::move(columns)),
      intercept_(intercept),
      coefficients_(std::move(coefficients)),
      pairwise_(pairwise) {}

double LinearPredictor::column_value(const Column& c, std::span<const double> row,
                                     bool second) const {
  const std::size_t f = second ? c.b : c.a;
  const int code = second ? c.b_code : c.a_code;
  if (code < 0) return row[f];
  return category_of(row[f]) == code ? 1.0 : 0.0;
}

std::shared_ptr<LinearPredictor> LinearPredictor::fit(const Dataset& d, bool pairwise) {
  std::vector<std::vector<Column>> per_feature(d.cols());
  for (std::size_t a = 0; a < d.cols(); ++a) {
    const FeatureMeta& f = d.feature(a);
    if (f.categorical()) {
      for (std::size_t code = 1; code < f.categories.size(); ++code)
        per_feature[a].push_back(Column{a, static_cast<int>(code), 0, -1, false});
    } else {
      per_feature[a].push_back(Column{a, -1, 0, -1, false});
    }
  }
  std::vector<Column> columns;
  for (const auto& cols : per_feature) columns.insert(columns.end(), cols.begin(), cols.end());
  if (pairwise) {
    for (std::size_t a = 0; a < d.cols(); ++a)
      for (std::size_t b = a + 1; b < d.cols(); ++b)
        for (const Column& ca : per_feature[a])
          for (const Column& cb : per_feature[b])
            columns.push_back(Column{a, ca.a_code, b, cb.a_code, true});
  }

  const Eigen::Index n = static_cast<Eigen::Index>(d.rows());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(columns.size()) + 1);
  LinearPredictor shell(d.features(), columns, 0.0, {}, pairwise);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = row_span(d.x(), i);
    design(i, 0) = 1.0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      double v = shell.column_value(columns[c], row, false);
      if (columns[c].product) v *= shell.column_value(columns[c], row, true);
      design(i, static_cast<Eigen::Index>(c) + 1) = v;
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::VectorXd beta = cod.solve(d.y());
  std::vector<double> coefficients(beta.data() + 1, beta.data() + beta.size());
  return std::make_shared<LinearPredictor>(d.features(), std::move(columns), beta(0),
                                           std::move(coefficients), pairwise);
}

double LinearPredictor::coefficient(std::size_t j) const {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (!columns_[c].product && columns_[c].a == j && columns_[c].a_code < 0) return coefficients_[c];
  throw_usage("feature " + std::to_string(j) + " has no plain numeric column");
}

void LinearPredictor::predict_into(const Matrix& x, Vector& out) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto row = row_span(x, i);
    double s = intercept_;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      double v = column_value(columns_[c], row, false);
      if (columns_[c].product) v *= column_value(columns_[c], row, true);
      s += coefficients_[c] * v;
    }
    out(i) = s;
  }
}

bool LinearPredictor::baseline_shapley(std::span<const double> x, std::span<const double> b,
                                       std::span<double> phi) const {
  std::fill(phi.begin(), phi.end(), 0.0);
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    const double ua_x = column_value(col, x, false), ua_b = column_value(col, b, false);
    if (!col.product) {
      phi[col.a] += coefficients_[c] * (ua_x - ua_b);
      continue;
    }
    // Two-player game on a product term: each player gets half of the
    // difference at either value of the other.
    const double ub_x = column_value(col, x, true), ub_b = column_value(col, b, true);
    phi[col.a] += coefficients_[c] * 0.5 * (ua_x - ua_b) * (ub_x + ub_b);
    phi[col.b] += coefficients_[c] * 0.5 * (ub_x - ub_b) * (ua_x + ua_b);
  }
  return true;
}

// ---------------------------------------------------------------------------
// k nearest neighbours

std::shared_ptr<KnnPredictor> KnnPredictor::fit(const Dataset& d, int k) {
  std::shared_ptr<KnnPredictor> m(new KnnPredictor());
  const std::size_t p = d.cols();
  const Eigen::Index n = static_cast<Eigen::Index>(d.rows());
  m->k_ = k;
  m->categorical_.resize(p);
  m->center_.assign(p, 0.0);
  m->scale_.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    m->categorical_[j] = d.feature(j).categorical();
    if (m->categorical_[j]) continue;
    const auto col = d.x().col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    m->center_[j] = mean;
    m->scale_[j] = var > 0 ? std::sqrt(var) : 1.0;
  }
  std::map<std::vector<double>, std::size_t> index;
  std::vector<std::vector<double>> points;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> z(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double v = d.at(static_cast<std::size_t>(i), j);
      z[j] = m->categorical_[j] ? v : (v - m->center_[j]) / m->scale_[j];
    }
    auto [it, inserted] = index.emplace(z, points.size());
    if (inserted) {
      points.push_back(z);
      m->sum_y_.push_back(0.0);
      m->count_.push_back(0.0);
    }
    m->sum_y_[it->second] += d.y()(i);
    m->count_[it->second] += 1.0;
  }
  m->locations_.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(p));
  for (std::size_t l = 0; l < points.size(); ++l)
    for (std::size_t j = 0; j < p; ++j)
      m->locations_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = points[l][j];
  return m;
}

double KnnPredictor::distance(std::span<const double> query, std::size_t location) const {
  double s = 0.0;
  const double* loc = locations_.data() + location * static_cast<std::size_t>(locations_.cols());
  for (std::size_t j = 0; j < query.size(); ++j) {
    if (categorical_[j]) {
      s += category_of(query[j]) == category_of(loc[j]) ? 0.0 : 1.0;
    } else {
      const double diff = (query[j] - center_[j]) / scale_[j] - loc[j];
      s += diff * diff;
    }
  }
  return s;
}

void KnnPredictor::predict_into(const Matrix& x, Vector& out) const {
  const std::size_t L = static_cast<std::size_t>(locations_.rows());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), L);
  std::vector<double> dist(L), scratch(L);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto q = row_span(x, i);
    for (std::size_t l = 0; l < L; ++l) dist[l] = distance(q, l);
    scratch = dist;
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    const double kth = scratch[k - 1];
    double sy = 0.0, sc = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      if (dist[l] <= kth) {
        sy += sum_y_[l];
        sc += count_[l];
      }
    }
    out(i) = sy / sc;
  }
}

// ---------------------------------------------------------------------------
// Regression trees

double RegressionTree::predict(std::span<const double> row) const {
  int node = 0;
  while (feature[static_cast<std::size_t>(node)] >= 0) {
    const auto n = static_cast<std::size_t>(node);
    node = row[static_cast<std::size_t>(feature[n])] <= threshold[n] ? left[n] : right[n];
  }
  return value[static_cast<std::size_t>(node)];
}

int RegressionTree::depth() const {
  std::vector<int> d(feature.size(), 0);
  int best = 0;
  for (std::size_t n = 0; n < feature.size(); ++n) {
    best = std::max(best, d[n]);
    if (feature[n] >= 0) {
      d[static_cast<std::size_t>(left[n])] = d[n] + 1;
      d[static_cast<std::size_t>(right[n])] = d[n] + 1;
    }
  }
  return best;
}

namespace {

const std::array<double, 66>& factorials() {
  static const std::array<double, 66> table = [] {
    std::array<double, 66> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  return table;
}

struct ShapWalk {
  const RegressionTree& tree;
  std::span<const double> x, b;
  std::span<double> phi;

  void visit(int node, std::uint64_t xs, std::uint64_t bs, int nx, int nb) {
    const auto n = static_cast<std::size_t>(node);
    const int f = tree.feature[n];
    if (f < 0) {
      if (nx + nb == 0) return;
      const auto& fact = factorials();
      const double v = tree.value[n];
      const double denom = fact[static_cast<std::size_t>(nx + nb)];
      if (nx > 0) {
        const double w = v * fact[static_cast<std::size_t>(nx - 1)] * fact[static_cast<std::size_t>(nb)] / denom;
        for (std::uint64_t m = xs; m; m &= m - 1) phi[static_cast<std::size_t>(std::countr_zero(m))] += w;
      }
      if (nb > 0) {
        const double w = v * fact[static_cast<std::size_t>(nx)] * fact[static_cast<std::size_t>(nb - 1)] / denom;
        for (std::uint64_t m = bs; m; m &= m - 1) phi[static_cast<std::size_t>(std::countr_zero(m))] -= w;
      }
      return;
    }
    const auto fu = static_cast<std::size_t>(f);
    const int gx = x[fu] <= tree.threshold[n] ? tree.left[n] : tree.right[n];
    const int gb = b[fu] <= tree.threshold[n] ? tree.left[n] : tree.right[n];
    const std::uint64_t bit = std::uint64_t{1} << fu;
    if (gx == gb) {
      visit(gx, xs, bs, nx, nb);
    } else if (xs & bit) {
      visit(gx, xs, bs, nx, nb);
    } else if (bs & bit) {
      visit(gb, xs, bs, nx, nb);
    } else {
      visit(gx, xs | bit, bs, nx + 1, nb);
      visit(gb, xs, bs | bit, nx, nb + 1);
    }
  }
};

}  // namespace

void RegressionTree::baseline_shapley(std::span<const double> x, std::span<const double> b,
                                      std::span<double> phi) const {
  ShapWalk walk{*this, x, b, phi};
  walk.visit(0, 0, 0, 0, 0);
}

RegressionTree fit_regression_tree(const Matrix& x, const Vector& y, const RowSet& sample,
                                   int max_depth, int min_leaf) {
  RegressionTree tree;
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t min_leaf_sz = static_cast<std::size_t>(std::max(1, min_leaf));

  struct Task {
    int node;
    int depth;
    RowSet rows;
  };
  auto new_node = [&tree] {
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(0.0);
    return static_cast<int>(tree.feature.size()) - 1;
  };

  std::vector<Task> stack;
  stack.push_back(Task{new_node(), 0, sample});
  std::vector<std::size_t> order;
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    const auto node = static_cast<std::size_t>(task.node);
    const RowSet& rows = task.rows;
    const double cnt = static_cast<double>(rows.size());
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t r : rows) {
      const double v = y(static_cast<Eigen::Index>(r));
      sum += v;
      sumsq += v * v;
    }
    tree.value[node] = sum / cnt;
    const double sse = sumsq - sum * sum / cnt;
    if (task.depth >= max_depth || rows.size() < 2 * min_leaf_sz ||
        sse <= 1e-12 * std::max(1.0, sumsq))
      continue;

    const double parent_score = sum * sum / cnt;
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    order.resize(rows.size());
    for (std::size_t f = 0; f < p; ++f) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto fe = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x(static_cast<Eigen::Index>(rows[a]), fe) < x(static_cast<Eigen::Index>(rows[b]), fe);
      });
      double left_sum = 0.0;
      for (std::size_t i = 1; i < order.size(); ++i) {
        left_sum += y(static_cast<Eigen::Index>(rows[order[i - 1]]));
        const double lo = x(static_cast<Eigen::Index>(rows[order[i - 1]]), fe);
        const double hi = x(static_cast<Eigen::Index>(rows[order[i]]), fe);
        if (!(lo < hi)) continue;
        if (i < min_leaf_sz || order.size() - i < min_leaf_sz) continue;
        const double nl = static_cast<double>(i), nr = cnt - nl;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
        if (gain > best_gain * (1.0 + 1e-12) + 1e-15) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (lo + hi);
          if (best_threshold >= hi) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0 || best_gain <= 1e-12 * sse) continue;

    RowSet left_rows, right_rows;
    for (std::size_t r : rows) {
      if (x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold) left_rows.push_back(r);
      else right_rows.push_back(r);
    }
    const int l = new_node();
    const int rr = new_node();
    tree.feature[node] = best_feature;
    tree.threshold[node] = best_threshold;
    tree.left[node] = l;
    tree.right[node] = rr;
    stack.push_back(Task{rr, task.depth + 1, std::move(right_rows)});
    stack.push_back(Task{l, task.depth + 1, std::move(left_rows)});
  }
  return tree;
}

std::shared_ptr<BaggedTreesPredictor> BaggedTreesPredictor::fit(const Dataset& d,
                                                               const TreeParams& params) {
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  const std::size_t n = d.rows();
  for (int t = 0; t < params.n_trees; ++t) {
    auto rng = make_rng(params.seed, Stream::kLearner, static_cast<std::uint64_t>(t));
    RowSet sample(n);
    for (auto& s : sample) s = static_cast<std::size_t>(rng() % n);
    std::sort(sample.begin(), sample.end());
    trees.push_back(fit_regression_tree(d.x(), d.y(), sample, params.max_depth, params.min_leaf));
  }
  return std::make_shared<BaggedTreesPredictor>(d.cols(), std::move(trees));
}

void BaggedTreesPredictor::predict_into(const Matrix& x, Vector& out) const {
  const double scale = 1.0 / static_cast<double>(trees_.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto row = row_span(x, i);
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(row);
    out(i) = s * scale;
  }
}

bool BaggedTreesPredictor::baseline_shapley(std::span<const double> x, std::span<const double> b,
                                            std::span<double> phi) const {
  if (p_ > 64) return false;
  std::fill(phi.begin(), phi.end(), 0.0);
  for (const auto& t : trees_) t.baseline_shapley(x, b, phi);
  const double scale = 1.0 / static_cast<double>(trees_.size());
  for (double& v : phi) v *= scale;
  return true;
}

// ---------------------------------------------------------------------------
// External prediction archives

std::string ExternalTablePredictor::key(std::span<const double> row) {
  std::string k(row.size() * sizeof(double), '\0');
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = row[j] == 0.0 ? 0.0 : row[j];
    std::memcpy(k.data() + j * sizeof(double), &v, sizeof(double));
  }
  return k;
}

std::shared_ptr<ExternalTablePredictor> ExternalTablePredictor::load(const std::string& path,
                                                                     const Dataset& d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open prediction archive '" + path + "'");
  return load(in, d);
}

namespace {

double parse_archive_number(const std::string& cell, std::size_t line, const char* what) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v))
    throw_data(std::string("prediction archive line ") + std::to_string(line) + ": invalid " + what +
               " '" + cell + "'");
  return v;
}

}  // namespace

std::shared_ptr<ExternalTablePredictor> ExternalTablePredictor::load(std::istream& in,
                                                                     const Dataset& d) {
  const auto records = read_csv(in);
  if (records.empty()) throw_data("prediction archive is empty");
  const auto& header = records[0];
  auto col = [&](const std::string& name) -> int {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  };
  const int c_row = col("row_id"), c_pred = col("prediction");
  const int c_feat = col("feature"), c_grid = col("grid_value");
  if (c_row < 0 || c_pred < 0)
    throw_data("prediction archive needs columns row_id and prediction");
  if ((c_feat < 0) != (c_grid < 0))
    throw_data("prediction archive must have both feature and grid_value columns or neither");

  std::shared_ptr<ExternalTablePredictor> m(new ExternalTablePredictor());
  m->p_ = d.cols();
  for (const auto& f : d.features()) m->names_.push_back(f.name);
  m->grids_.resize(d.cols());
  std::vector<double> row(d.cols());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t line = r + 1;
    if (rec.size() != header.size())
      throw_data("prediction archive line " + std::to_string(line) + " has the wrong field count");
    const double id = parse_archive_number(rec[static_cast<std::size_t>(c_row)], line, "row_id");
    if (id < 1 || id > static_cast<double>(d.rows()) || id != std::floor(id))
      throw_data("prediction archive line " + std::to_string(line) + ": row_id out of range");
    const auto i = static_cast<std::size_t>(id) - 1;
    for (std::size_t j = 0; j < d.cols(); ++j) row[j] = d.at(i, j);
    if (c_feat >= 0) {
      const std::string& fname = rec[static_cast<std::size_t>(c_feat)];
      auto j = d.find_feature(fname);
      if (!j) throw_data("prediction archive line " + std::to_string(line) + ": unknown feature '" + fname + "'");
      const std::string& g = rec[static_cast<std::size_t>(c_grid)];
      double value = 0.0;
      const FeatureMeta& meta = d.feature(*j);
      if (meta.categorical()) {
        auto it = std::find(meta.categories.begin(), meta.categories.end(), g);
        if (it == meta.categories.end())
          throw_data("prediction archive line " + std::to_string(line) + ": unknown category '" + g + "'");
        value = static_cast<double>(it - meta.categories.begin());
      } else {
        value = parse_archive_number(g, line, "grid_value");
      }
      row[*j] = value;
      m->grids_[*j].push_back(value);
    }
    m->table_[key(row)] = parse_archive_number(rec[static_cast<std::size_t>(c_pred)], line, "prediction");
  }
  for (auto& g : m->grids_) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
  return m;
}

std::optional<std::vector<double>> ExternalTablePredictor::archived_grid(std::size_t j) const {
  if (j >= grids_.size() || grids_[j].empty()) return std::nullopt;
  return grids_[j];
}

void ExternalTablePredictor::predict_into(const Matrix& x, Vector& out) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto row = row_span(x, i);
    auto it = table_.find(key(row));
    if (it == table_.end()) {
      std::ostringstream os;
      os.precision(10);
      os << "coverage gap: no archived prediction for query (";
      for (std::size_t j = 0; j < row.size(); ++j) os << (j ? ", " : "") << names_[j] << "=" << row[j];
      os << ")";
      throw_data(os.str());
    }
    out(i) = it->second;
  }
}

// ---------------------------------------------------------------------------

void LearnerSpec::validate() const {
  if (k < 1) throw_usage("knn requires k >= 1");
  if (trees.n_trees < 1) throw_usage("bagged trees require n_trees >= 1");
  if (trees.max_depth < 1) throw_usage("bagged trees require max_depth >= 1");
  if (trees.min_leaf < 1) throw_usage("bagged trees require min_leaf >= 1");
  if (kind == LearnerKind::kExternalTable && archive_path.empty())
    throw_usage("external-table learner requires an archive path");
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kLinear:
      return "linear";
    case LearnerKind::kPairwise:
      return "pairwise";
    case LearnerKind::kKnn:
      return "knn";
    case LearnerKind::kBaggedTrees:
      return "trees";
    case LearnerKind::kExternalTable:
      return "external";
  }
  return "trees";
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "linear") return LearnerKind::kLinear;
  if (s == "pairwise" || s == "linear-with-pairwise-interactions") return LearnerKind::kPairwise;
  if (s == "knn") return LearnerKind::kKnn;
  if (s == "trees" || s == "bagged-trees") return LearnerKind::kBaggedTrees;
  if (s == "external" || s == "external-table") return LearnerKind::kExternalTable;
  throw_usage("unknown learner '" + s + "' (expected linear, pairwise, knn, trees or external)");
}

PredictorPtr fit(const LearnerSpec& spec, const Dataset& d) {
  spec.validate();
  if (spec.kind == LearnerKind::kExternalTable) throw_usage("external predictor cannot be refit");
  const std::size_t min_rows =
      std::max<std::size_t>(5, spec.kind == LearnerKind::kBaggedTrees
                                   ? static_cast<std::size_t>(spec.trees.min_leaf)
                                   : 0);
  if (d.rows() < min_rows)
    throw_data("learner needs at least " + std::to_string(min_rows) + " rows, got " +
               std::to_string(d.rows()));
  const double mean = d.y().mean();
  if ((d.y().array() - mean).abs().maxCoeff() == 0.0)
    return std::make_shared<ConstantPredictor>(d.cols(), mean);
  switch (spec.kind) {
    case LearnerKind::kLinear:
      return LinearPredictor::fit(d, false);
    case LearnerKind::kPairwise:
      return LinearPredictor::fit(d, true);
    case LearnerKind::kKnn:
      return KnnPredictor::fit(d, spec.k);
    case LearnerKind::kBaggedTrees: {
      TreeParams params = spec.trees;
      params.seed = spec.seed;
      return BaggedTreesPredictor::fit(d, params);
    }
    case LearnerKind::kExternalTable:
      break;
  }
  throw_usage("unsupported learner");
}

PredictorPtr make_predictor(const LearnerSpec& spec, const Dataset& d) {
  if (spec.kind == LearnerKind::kExternalTable) {
    spec.validate();
    return ExternalTablePredictor::load(spec.archive_path, d);
  }
  return fit(spec, d);
}

double r_squared(const Vector& truth, const Vector& predicted) {
  const double mean = truth.mean();
  const double sst = (truth.array() - mean).square().sum();
  const double sse = (truth - predicted).squaredNorm();
  return sst > 0 ? 1.0 - sse / sst : 0.0;
}

}  // namespace gadget
