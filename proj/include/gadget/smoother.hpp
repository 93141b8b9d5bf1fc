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

// Univariate scatterplot smoothing: penalized cubic B-splines with the
// smoothing parameter chosen by generalized cross-validation.

#ifndef GADGET_SMOOTHER_HPP_
#define GADGET_SMOOTHER_HPP_

#include <span>
#include <vector>

#include "gadget/common.hpp"

namespace gadget {

struct SmootherConfig {
  std::size_t interior_knots = 10;
  // log10 lambda search range, relative to the scale of the normal equations.
  double log_lambda_min = -6.0;
  double log_lambda_max = 6.0;
  std::size_t lambda_steps = 25;
};

class Smoother {
 public:
  enum class Kind { kConstant, kPiecewiseLinear, kSpline, kCategoryMeans };

  // Spline fit with a penalty on second divided differences of the
  // coefficients (taken at the Greville abscissae), so straight lines are
  // never penalized. Falls back to fewer knots for few distinct x values and
  // to linear interpolation of per-x means below 4 distinct values.
  static Smoother fit(std::span<const double> x, std::span<const double> y,
                      const SmootherConfig& config = {});
  // Mean of y per integer code of x.
  static Smoother fit_categories(std::span<const double> x, std::span<const double> y);

  double operator()(double x) const;
  std::vector<double> evaluate(std::span<const double> x) const;

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double rss() const { return rss_; }
  double effective_df() const { return edf_; }
  const std::vector<double>& knots() const { return knots_; }

 private:
  Kind kind_ = Kind::kConstant;
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> knots_;   // full knot vector for splines
  std::vector<double> coef_;    // spline coefficients or category means
  std::vector<double> xs_, ys_; // interpolation nodes
  double constant_ = 0.0;
  double lambda_ = 0.0;
  double rss_ = 0.0;
  double edf_ = 0.0;
};

// Values of the cubic B-spline basis functions that are nonzero at x.
// Returns the index of the first of the four.
std::size_t cubic_bspline_basis(const std::vector<double>& knots, double x, double out[4]);

}  // namespace gadget

#endif  // GADGET_SMOOTHER_HPP_
