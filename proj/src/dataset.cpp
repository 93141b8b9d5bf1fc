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

#include "gadget/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gadget {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "na" || lower == "nan" || lower == "null";
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

// RFC-4180 reader: quoted fields may contain separators, doubled quotes and
// line breaks. Returns false at end of input.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;; c = in_.get()) {
      if (quoted) {
        if (c == EOF) throw_data("unterminated quoted field near line " + std::to_string(line_ + 1));
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == EOF || c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      }
      if (c == '\r') {
        if (in_.peek() == '\n') continue;
        ++line_;
        fields.push_back(std::move(field));
        return true;
      }
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
        continue;
      }
      if (c == '"' && trim(field).empty() && !was_quoted) {
        field.clear();
        quoted = true;
        was_quoted = true;
        continue;
      }
      field.push_back(static_cast<char>(c));
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

bool blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> record;
  while (reader.next(record))
    if (!blank_record(record)) out.push_back(record);
  return out;
}

Dataset::Dataset(std::vector<FeatureMeta> features, Matrix x, Vector y,
                 std::string target_name)
    : Dataset(std::move(features), std::make_shared<const Matrix>(std::move(x)),
              std::move(y), std::move(target_name)) {}

Dataset::Dataset(std::vector<FeatureMeta> features, std::shared_ptr<const Matrix> x,
                 Vector y, std::string target_name)
    : features_(std::move(features)),
      x_(std::move(x)),
      y_(std::move(y)),
      target_name_(std::move(target_name)) {
  validate();
}

void Dataset::validate() const {
  if (x_->rows() < 1) throw_data("dataset has no rows");
  if (static_cast<std::size_t>(x_->cols()) != features_.size())
    throw_data("feature matrix has " + std::to_string(x_->cols()) + " columns but " +
               std::to_string(features_.size()) + " features are declared");
  if (y_.size() != x_->rows())
    throw_data("target length " + std::to_string(y_.size()) + " does not match " +
               std::to_string(x_->rows()) + " rows");
  std::set<std::string> names;
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const FeatureMeta& f = features_[j];
    if (!names.insert(f.name).second) throw_data("duplicate feature name '" + f.name + "'");
    if (f.categorical()) {
      if (f.categories.size() < 2)
        throw_data("categorical feature '" + f.name + "' has fewer than 2 categories");
      for (Eigen::Index i = 0; i < x_->rows(); ++i) {
        const double v = (*x_)(i, static_cast<Eigen::Index>(j));
        if (v < 0 || v != std::floor(v) || v >= static_cast<double>(f.categories.size()))
          throw_data("invalid category code at row " + std::to_string(i + 1) +
                     " of feature '" + f.name + "'");
      }
    }
  }
  if (!x_->allFinite() || !y_.allFinite()) throw_data("dataset contains non-finite values");
}

std::optional<std::size_t> Dataset::find_feature(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j)
    if (features_[j].name == name) return j;
  return std::nullopt;
}

Dataset Dataset::with_target(Vector y) const {
  return Dataset(features_, x_, std::move(y), target_name_);
}

Matrix Dataset::rows_matrix(const RowSet& rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x_->cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x_->row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Dataset load_dataset(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open '" + path + "'");
  return load_dataset(in, options);
}

Dataset load_dataset(std::istream& in, const LoadOptions& options) {
  CsvReader reader(in);
  std::vector<std::string> header;
  while (reader.next(header) && blank_record(header)) {
  }
  if (header.empty() || blank_record(header)) throw_data("empty file: no header row");
  for (auto& h : header) h = std::string(trim(h));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const std::size_t width = header.size();
  std::size_t target_col = width;
  for (std::size_t c = 0; c < width; ++c)
    if (header[c] == options.target) target_col = c;
  if (target_col == width) throw_data("unknown target column '" + options.target + "'");
  for (const auto& [name, kind] : options.kind_hints) {
    (void)kind;
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw_data("type hint names unknown column '" + name + "'");
  }

  std::vector<std::vector<std::string>> cells(width);
  std::vector<std::string> record;
  std::size_t row = 0;
  while (reader.next(record)) {
    if (blank_record(record)) continue;
    ++row;
    if (record.size() != width)
      throw_data("row " + std::to_string(row) + " has " + std::to_string(record.size()) +
                 " fields, expected " + std::to_string(width));
    for (std::size_t c = 0; c < width; ++c) {
      if (is_missing(record[c]))
        throw_data("missing value at row " + std::to_string(row) + ", column '" +
                   header[c] + "'");
      cells[c].push_back(std::string(trim(record[c])));
    }
  }
  if (row == 0) throw_data("empty file: no data rows");

  std::vector<FeatureMeta> features;
  Matrix x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(width - 1));
  Vector y(static_cast<Eigen::Index>(row));
  Eigen::Index out_col = 0;
  for (std::size_t c = 0; c < width; ++c) {
    const auto& col = cells[c];
    std::vector<double> numeric(col.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < col.size() && all_numeric; ++i) {
      auto v = parse_number(col[i]);
      if (v) numeric[i] = *v;
      else all_numeric = false;
    }
    auto hint = options.kind_hints.find(header[c]);
    FeatureKind kind = all_numeric ? FeatureKind::kNumeric : FeatureKind::kCategorical;
    if (hint != options.kind_hints.end()) {
      if (hint->second == FeatureKind::kNumeric && !all_numeric)
        throw_data("column '" + header[c] + "' is declared numeric but has non-numeric values");
      kind = hint->second;
    }
    std::vector<std::string> categories;
    if (kind == FeatureKind::kCategorical) {
      std::unordered_map<std::string, int> codes;
      for (std::size_t i = 0; i < col.size(); ++i) {
        auto [it, inserted] = codes.emplace(col[i], static_cast<int>(categories.size()));
        if (inserted) categories.push_back(col[i]);
        numeric[i] = it->second;
      }
    }
    if (c == target_col) {
      if (kind == FeatureKind::kCategorical && categories.size() > 2)
        throw_data("target column '" + header[c] + "' is non-numeric with more than 2 classes");
      for (std::size_t i = 0; i < col.size(); ++i) y(static_cast<Eigen::Index>(i)) = numeric[i];
      continue;
    }
    for (std::size_t i = 0; i < col.size(); ++i) x(static_cast<Eigen::Index>(i), out_col) = numeric[i];
    features.push_back(FeatureMeta{header[c], kind, std::move(categories)});
    ++out_col;
  }
  if (features.empty()) throw_data("dataset has no feature columns");
  return Dataset(std::move(features), std::move(x), std::move(y), header[target_col]);
}

bool Constraint::admits(double value) const {
  switch (op) {
    case Op::kLessEqual:
      return value <= threshold;
    case Op::kGreater:
      return value > threshold;
    case Op::kInSet:
      return std::binary_search(categories.begin(), categories.end(),
                                static_cast<int>(std::lround(value)));
  }
  return false;
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string Constraint::describe(const Dataset& d) const {
  const std::string& name = d.feature(feature).name;
  switch (op) {
    case Op::kLessEqual:
      return name + " <= " + format_number(threshold);
    case Op::kGreater:
      return name + " > " + format_number(threshold);
    case Op::kInSet: {
      std::string out = name + " in {";
      for (std::size_t k = 0; k < categories.size(); ++k) {
        if (k) out += ", ";
        out += d.feature(feature).categories.at(static_cast<std::size_t>(categories[k]));
      }
      return out + "}";
    }
  }
  return name;
}

Subspace::Subspace(std::vector<Constraint> constraints)
    : constraints_(std::move(constraints)) {}

Subspace Subspace::with(Constraint c) const {
  std::sort(c.categories.begin(), c.categories.end());
  Subspace out = *this;
  out.constraints_.push_back(std::move(c));
  return out;
}

bool Subspace::contains(const Dataset& d, std::size_t row) const {
  for (const Constraint& c : constraints_)
    if (!c.admits(d.at(row, c.feature))) return false;
  return true;
}

bool Subspace::admits(std::size_t feature, double value) const {
  for (const Constraint& c : constraints_)
    if (c.feature == feature && !c.admits(value)) return false;
  return true;
}

std::string Subspace::describe(const Dataset& d) const {
  if (constraints_.empty()) return "TRUE";
  std::string out;
  for (std::size_t k = 0; k < constraints_.size(); ++k) {
    if (k) out += " & ";
    out += constraints_[k].describe(d);
  }
  return out;
}

RowSet filter_rows(const Dataset& d, const Subspace& s) {
  return filter_rows(d, s, all_rows(d.rows()));
}

RowSet filter_rows(const Dataset& d, const Subspace& s, const RowSet& candidates) {
  for (const Constraint& c : s.constraints())
    if (c.feature >= d.cols()) throw_usage("constraint on unknown feature index " + std::to_string(c.feature));
  RowSet out;
  out.reserve(candidates.size());
  for (std::size_t r : candidates)
    if (s.contains(d, r)) out.push_back(r);
  return out;
}

RowSet all_rows(std::size_t n) {
  RowSet rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw_numeric("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> column_values(const Dataset& d, std::size_t j, const RowSet& rows) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.push_back(d.at(r, j));
  return v;
}

GridSpec make_grid(const Dataset& d, std::size_t j, std::size_t m, GridMode mode) {
  return make_grid(d, j, m, mode, all_rows(d.rows()));
}

GridSpec make_grid(const Dataset& d, std::size_t j, std::size_t m, GridMode mode,
                   const RowSet& rows) {
  if (j >= d.cols()) throw_usage("grid requested for unknown feature index " + std::to_string(j));
  GridSpec grid;
  grid.feature = j;
  grid.mode = mode;
  const FeatureMeta& f = d.feature(j);
  if (f.categorical()) {
    for (std::size_t k = 0; k < f.categories.size(); ++k) grid.points.push_back(static_cast<double>(k));
    return grid;
  }
  if (m < 2) throw_usage("grid size must be at least 2");
  std::vector<double> v = column_values(d, j, rows);
  std::sort(v.begin(), v.end());
  if (v.empty() || v.front() == v.back()) throw_numeric("degenerate feature '" + f.name + "'");
  switch (mode) {
    case GridMode::kQuantile: {
      const std::size_t count = std::min(m, v.size());
      for (std::size_t k = 0; k < count; ++k)
        grid.points.push_back(quantile_sorted(v, static_cast<double>(k) / static_cast<double>(count - 1)));
      break;
    }
    case GridMode::kEquidistant:
      for (std::size_t k = 0; k < m; ++k)
        grid.points.push_back(v.front() + (v.back() - v.front()) * static_cast<double>(k) /
                                              static_cast<double>(m - 1));
      break;
    case GridMode::kUniqueValues:
      grid.points = v;
      break;
  }
  grid.points.erase(std::unique(grid.points.begin(), grid.points.end()), grid.points.end());
  return grid;
}

std::string to_string(GridMode mode) {
  switch (mode) {
    case GridMode::kQuantile:
      return "quantile";
    case GridMode::kEquidistant:
      return "equidistant";
    case GridMode::kUniqueValues:
      return "unique-values";
  }
  return "quantile";
}

GridMode grid_mode_from_string(const std::string& s) {
  if (s == "quantile") return GridMode::kQuantile;
  if (s == "equidistant") return GridMode::kEquidistant;
  if (s == "unique-values" || s == "unique") return GridMode::kUniqueValues;
  throw_usage("unknown grid mode '" + s + "' (expected quantile, equidistant or unique-values)");
}

}  // namespace gadget
