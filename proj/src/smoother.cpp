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
#include <limits>
#include <numeric>

#include "gadget/dataset.hpp"

namespace gadget {

std::size_t cubic_bspline_basis(const std::vector<double>& t, double x, double out[4]) {
  const std::size_t K = t.size() - 4;
  x = std::clamp(x, t[3], t[K]);
  std::size_t s = 3;
  {
    // Largest span start with t[s] <= x and t[s] < t[s + 1].
    auto it = std::upper_bound(t.begin() + 3, t.begin() + static_cast<std::ptrdiff_t>(K), x);
    s = static_cast<std::size_t>(it - t.begin()) - 1;
    if (s > K - 1) s = K - 1;
    while (s > 3 && !(t[s] < t[s + 1])) --s;
  }
  double left[4], right[4];
  out[0] = 1.0;
  for (int j = 1; j <= 3; ++j) {
    left[j] = x - t[s + 1 - static_cast<std::size_t>(j)];
    right[j] = t[s + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? out[r] / denom : 0.0;
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
  return s - 3;
}

namespace {

struct Moments {
  std::vector<double> ux;   // distinct x
  std::vector<double> mean; // mean y per distinct x
};

Moments distinct_means(std::span<const double> x, std::span<const double> y) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Moments m;
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    sum += y[order[k]];
    ++cnt;
    if (k + 1 == order.size() || x[order[k + 1]] != x[order[k]]) {
      m.ux.push_back(x[order[k]]);
      m.mean.push_back(sum / static_cast<double>(cnt));
      sum = 0.0;
      cnt = 0;
    }
  }
  return m;
}

}  // namespace

Smoother Smoother::fit(std::span<const double> x, std::span<const double> y,
                       const SmootherConfig& config) {
  if (x.size() != y.size()) throw_usage("smoother inputs differ in length");
  if (x.empty()) throw_numeric("smoother needs at least one point");
  Smoother s;
  const std::size_t n = x.size();
  s.constant_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  Moments m = distinct_means(x, y);
  s.lo_ = m.ux.front();
  s.hi_ = m.ux.back();
  auto finish = [&](Smoother& out) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - out(x[i]);
      rss += r * r;
    }
    out.rss_ = rss;
    return out;
  };
  if (m.ux.size() == 1) {
    s.kind_ = Kind::kConstant;
    s.edf_ = 1.0;
    return finish(s);
  }
  if (m.ux.size() < 4) {
    s.kind_ = Kind::kPiecewiseLinear;
    s.xs_ = m.ux;
    s.ys_ = m.mean;
    s.edf_ = static_cast<double>(m.ux.size());
    return finish(s);
  }

  // Knots: boundary knots repeated four times, interior knots at quantiles.
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t want = std::min(config.interior_knots, m.ux.size() - 4);
  std::vector<double> interior;
  for (std::size_t k = 1; k <= want; ++k) {
    const double q = quantile_sorted(sorted, static_cast<double>(k) / static_cast<double>(want + 1));
    if (q > s.lo_ && q < s.hi_ && (interior.empty() || q > interior.back())) interior.push_back(q);
  }
  std::vector<double>& t = s.knots_;
  t.assign(4, s.lo_);
  t.insert(t.end(), interior.begin(), interior.end());
  t.insert(t.end(), 4, s.hi_);
  const std::size_t K = t.size() - 4;

  Eigen::MatrixXd btb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  Eigen::VectorXd bty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  double yty = 0.0;
  double basis[4];
  for (std::size_t i = 0; i < n; ++i) {
    const auto first = static_cast<Eigen::Index>(cubic_bspline_basis(t, x[i], basis));
    for (int a = 0; a < 4; ++a) {
      bty(first + a) += basis[a] * y[i];
      for (int b = 0; b < 4; ++b) btb(first + a, first + b) += basis[a] * basis[b];
    }
    yty += y[i] * y[i];
  }

  // Second divided differences at the Greville abscissae.
  std::vector<double> greville(K);
  for (std::size_t i = 0; i < K; ++i) greville[i] = (t[i + 1] + t[i + 2] + t[i + 3]) / 3.0;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K - 2), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i + 2 < K; ++i) {
    const double h0 = greville[i + 1] - greville[i];
    const double h1 = greville[i + 2] - greville[i + 1];
    const auto r = static_cast<Eigen::Index>(i);
    D(r, r) = 1.0 / h0;
    D(r, r + 1) = -1.0 / h0 - 1.0 / h1;
    D(r, r + 2) = 1.0 / h1;
  }
  const Eigen::MatrixXd P = D.transpose() * D;
  const double scale = btb.trace() / std::max(P.trace(), std::numeric_limits<double>::min());
  const double ridge = 1e-10 * btb.trace() / static_cast<double>(K);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));

  double best_gcv = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_coef;
  const double nd = static_cast<double>(n);
  const std::size_t steps = std::max<std::size_t>(config.lambda_steps, 1);
  for (std::size_t k = 0; k < steps; ++k) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(steps - 1);
    const double lambda =
        scale * std::pow(10.0, config.log_lambda_min + frac * (config.log_lambda_max - config.log_lambda_min));
    const Eigen::MatrixXd A = btb + lambda * P + ridge * I;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd coef = ldlt.solve(bty);
    const double edf = ldlt.solve(btb).trace();
    const double rss = std::max(0.0, yty - 2.0 * coef.dot(bty) + coef.dot(btb * coef));
    if (nd - edf <= 0.5) continue;
    const double gcv = nd * rss / ((nd - edf) * (nd - edf));
    if (gcv < best_gcv * (1.0 - 1e-12)) {
      best_gcv = gcv;
      best_coef = coef;
      s.lambda_ = lambda;
      s.edf_ = edf;
    }
  }
  if (best_coef.size() == 0) {
    s.kind_ = Kind::kPiecewiseLinear;
    s.xs_ = m.ux;
    s.ys_ = m.mean;
    s.edf_ = static_cast<double>(m.ux.size());
    return finish(s);
  }
  s.kind_ = Kind::kSpline;
  s.coef_.assign(best_coef.data(), best_coef.data() + best_coef.size());
  return finish(s);
}

Smoother Smoother::fit_categories(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw_usage("smoother inputs differ in length");
  if (x.empty()) throw_numeric("smoother needs at least one point");
  Smoother s;
  s.kind_ = Kind::kCategoryMeans;
  int max_code = 0;
  for (double v : x) max_code = std::max(max_code, static_cast<int>(std::lround(v)));
  std::vector<double> sum(static_cast<std::size_t>(max_code) + 1, 0.0), cnt(sum.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto c = static_cast<std::size_t>(std::max(0L, std::lround(x[i])));
    sum[c] += y[i];
    cnt[c] += 1.0;
  }
  s.constant_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  s.coef_.resize(sum.size());
  std::size_t groups = 0;
  for (std::size_t c = 0; c < sum.size(); ++c) {
    s.coef_[c] = cnt[c] > 0 ? sum[c] / cnt[c] : std::numeric_limits<double>::quiet_NaN();
    if (cnt[c] > 0) ++groups;
  }
  s.edf_ = static_cast<double>(groups);
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - s(x[i]);
    rss += r * r;
  }
  s.rss_ = rss;
  return s;
}

double Smoother::operator()(double x) const {
  switch (kind_) {
    case Kind::kConstant:
      return constant_;
    case Kind::kCategoryMeans: {
      const long c = std::lround(x);
      if (c < 0 || static_cast<std::size_t>(c) >= coef_.size() || std::isnan(coef_[static_cast<std::size_t>(c)]))
        return constant_;
      return coef_[static_cast<std::size_t>(c)];
    }
    case Kind::kPiecewiseLinear: {
      x = std::clamp(x, xs_.front(), xs_.back());
      auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      if (it == xs_.end()) return ys_.back();
      if (it == xs_.begin()) return ys_.front();
      const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
      const double w = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
      return ys_[k - 1] + w * (ys_[k] - ys_[k - 1]);
    }
    case Kind::kSpline: {
      double basis[4];
      const std::size_t first = cubic_bspline_basis(knots_, std::clamp(x, lo_, hi_), basis);
      double v = 0.0;
      for (std::size_t a = 0; a < 4; ++a) v += basis[a] * coef_[first + a];
      return v;
    }
  }
  return constant_;
}

std::vector<double> Smoother::evaluate(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (*this)(x[i]);
  return out;
}

}  // namespace gadget
