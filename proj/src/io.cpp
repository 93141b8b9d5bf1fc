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

#include "gadget/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace gadget {
namespace {

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object()) throw_usage("configuration must be a JSON object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw_usage(std::string("configuration key '") + key + "' has the wrong type");
  }
}

std::size_t count_or(const Json& j, const char* key, std::size_t fallback) {
  const double v = value_or<double>(j, key, static_cast<double>(fallback));
  if (!(v >= 0.0) || v != std::floor(v)) throw_usage(std::string("'") + key + "' must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

void check_keys(const Json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw_usage(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; }))
      throw_usage(std::string("unknown ") + what + " key '" + k + "'");
  }
}

std::size_t feature_ref(const std::string& token, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == token) return j;
  if (!token.empty() && std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const auto pos = std::stoull(token);
    if (pos >= 1 && pos <= names.size()) return static_cast<std::size_t>(pos - 1);
    throw_usage("feature position " + token + " is out of range 1.." + std::to_string(names.size()));
  }
  throw_usage("unknown feature '" + token + "'");
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

Json names_of(const std::vector<std::size_t>& idx, const std::vector<std::string>& names) {
  Json a = Json::array();
  for (std::size_t j : idx) a.push_back(names.at(j));
  return a;
}

Json finite(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(finite(x));
  return a;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Json split_rule_json(const SplitRule& r, const Dataset& d) {
  Json s;
  s["feature"] = d.feature(r.feature).name;
  if (r.categorical) {
    s["type"] = "categorical";
    Json l = Json::array(), rr = Json::array();
    for (int c : r.left_categories) l.push_back(d.feature(r.feature).categories.at(static_cast<std::size_t>(c)));
    for (int c : r.right_categories) rr.push_back(d.feature(r.feature).categories.at(static_cast<std::size_t>(c)));
    s["left"] = l;
    s["right"] = rr;
  } else {
    s["type"] = "numeric";
    s["threshold"] = r.threshold;
  }
  return s;
}

}  // namespace

std::vector<std::size_t> parse_features(const std::string& spec, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(feature_ref(tok, names));
  }
  if (out.empty()) throw_usage("empty feature list");
  return out;
}

std::vector<std::size_t> parse_features(const Json& spec, const std::vector<std::string>& names) {
  if (spec.is_string()) return parse_features(spec.get<std::string>(), names);
  if (!spec.is_array()) throw_usage("a feature list must be an array or a comma-separated string");
  std::vector<std::size_t> out;
  for (const Json& e : spec) {
    if (e.is_string()) out.push_back(feature_ref(e.get<std::string>(), names));
    else if (e.is_number_integer()) out.push_back(feature_ref(std::to_string(e.get<long long>()), names));
    else throw_usage("feature list entries must be names or 1-based positions");
  }
  return out;
}

std::vector<std::string> feature_names(const Dataset& d) {
  std::vector<std::string> n;
  for (const auto& f : d.features()) n.push_back(f.name);
  return n;
}

LearnerSpec learner_from_json(const Json& j) {
  check_keys(j, {"kind", "k", "trees", "max_depth", "min_leaf", "seed", "archive"}, "learner");
  LearnerSpec s;
  s.kind = learner_kind_from_string(value_or<std::string>(j, "kind", to_string(s.kind)));
  s.k = static_cast<int>(count_or(j, "k", static_cast<std::size_t>(s.k)));
  s.trees.n_trees = static_cast<int>(count_or(j, "trees", static_cast<std::size_t>(s.trees.n_trees)));
  s.trees.max_depth = static_cast<int>(count_or(j, "max_depth", static_cast<std::size_t>(s.trees.max_depth)));
  s.trees.min_leaf = static_cast<int>(count_or(j, "min_leaf", static_cast<std::size_t>(s.trees.min_leaf)));
  s.seed = value_or<std::uint64_t>(j, "seed", s.seed);
  s.archive_path = value_or<std::string>(j, "archive", s.archive_path);
  s.validate();
  return s;
}

Json to_json(const LearnerSpec& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  if (s.kind == LearnerKind::kKnn) j["k"] = s.k;
  if (s.kind == LearnerKind::kBaggedTrees) {
    j["trees"] = s.trees.n_trees;
    j["max_depth"] = s.trees.max_depth;
    j["min_leaf"] = s.trees.min_leaf;
  }
  if (s.kind == LearnerKind::kExternalTable) j["archive"] = s.archive_path;
  j["seed"] = s.seed;
  return j;
}

GadgetConfig gadget_config_from_json(const Json& j, const std::vector<std::string>& names) {
  check_keys(j,
             {"S", "Z", "method", "sd_recalculate", "max_depth", "min_node_size", "gamma", "r2_target", "grid_size",
              "grid_mode", "ale_intervals", "max_candidates", "ale_repair", "ale_repair_window",
              "shapley_background", "seed"},
             "gadget");
  GadgetConfig c;
  if (j.contains("S") && !j["S"].is_null()) c.S = parse_features(j["S"], names);
  if (j.contains("Z") && !j["Z"].is_null()) c.Z = parse_features(j["Z"], names);
  c.method = method_from_string(value_or<std::string>(j, "method", to_string(c.method)));
  c.sd_recalculate = value_or<bool>(j, "sd_recalculate", c.sd_recalculate);
  c.stop.max_depth = count_or(j, "max_depth", c.stop.max_depth);
  c.stop.min_node_size = count_or(j, "min_node_size", c.stop.min_node_size);
  c.stop.gamma = value_or<double>(j, "gamma", c.stop.gamma);
  c.stop.r2_total_target = value_or<double>(j, "r2_target", c.stop.r2_total_target);
  c.grid_size = count_or(j, "grid_size", c.grid_size);
  c.grid_mode = grid_mode_from_string(value_or<std::string>(j, "grid_mode", to_string(c.grid_mode)));
  c.ale_intervals = count_or(j, "ale_intervals", c.ale_intervals);
  c.max_candidates = count_or(j, "max_candidates", c.max_candidates);
  c.ale_repair = value_or<bool>(j, "ale_repair", c.ale_repair);
  c.ale_repair_window = value_or<double>(j, "ale_repair_window", c.ale_repair_window);
  c.shapley_background = count_or(j, "shapley_background", c.shapley_background);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

Json to_json(const GadgetConfig& c, const std::vector<std::string>& names) {
  Json j;
  j["S"] = names_of(c.S, names);
  j["Z"] = names_of(c.Z, names);
  j["method"] = to_string(c.method);
  j["sd_recalculate"] = c.sd_recalculate;
  j["max_depth"] = c.stop.max_depth;
  j["min_node_size"] = c.stop.min_node_size;
  j["gamma"] = c.stop.gamma;
  j["r2_target"] = c.stop.r2_total_target;
  j["grid_size"] = c.grid_size;
  j["grid_mode"] = to_string(c.grid_mode);
  j["ale_intervals"] = c.ale_intervals;
  j["max_candidates"] = c.max_candidates;
  j["ale_repair"] = c.ale_repair;
  j["ale_repair_window"] = c.ale_repair_window;
  j["shapley_background"] = c.shapley_background;
  j["seed"] = c.seed;
  return j;
}

PintConfig pint_config_from_json(const Json& j, const std::vector<std::string>& names) {
  check_keys(j, {"s", "alpha", "dist_fit", "seed", "prefilter", "bonferroni", "effect"}, "pint");
  PintConfig c;
  c.s = count_or(j, "s", c.s);
  c.alpha = value_or<double>(j, "alpha", c.alpha);
  c.dist_fit = null_fit_from_string(value_or<std::string>(j, "dist_fit", to_string(c.dist_fit)));
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("prefilter") && !j["prefilter"].is_null()) c.prefilter = value_or<double>(j, "prefilter", 0.0);
  c.bonferroni = value_or<bool>(j, "bonferroni", c.bonferroni);
  if (j.contains("effect")) c.effect = gadget_config_from_json(j["effect"], names);
  return c;
}

Json to_json(const PintConfig& c, const std::vector<std::string>& names) {
  Json j;
  j["s"] = c.s;
  j["alpha"] = c.alpha;
  j["dist_fit"] = to_string(c.dist_fit);
  j["seed"] = c.seed;
  j["prefilter"] = c.prefilter ? Json(*c.prefilter) : Json(nullptr);
  j["bonferroni"] = c.bonferroni;
  j["effect"] = to_json(c.effect, names);
  return j;
}

SimDesign design_from_json(const Json& j) {
  check_keys(j, {"kind", "rho", "n", "noise_scale", "seed"}, "design");
  SimDesign s;
  s.kind = design_kind_from_string(value_or<std::string>(j, "kind", to_string(s.kind)));
  s.rho = value_or<double>(j, "rho", s.rho);
  s.n = count_or(j, "n", s.n);
  s.noise_scale = value_or<double>(j, "noise_scale", s.noise_scale);
  s.seed = value_or<std::uint64_t>(j, "seed", s.seed);
  if (s.kind == DesignKind::kXor) xor_mixing_weight(s.rho);
  return s;
}

Json to_json(const SimDesign& d) {
  Json j;
  j["kind"] = to_string(d.kind);
  j["rho"] = d.rho;
  j["n"] = d.n;
  j["noise_scale"] = d.noise_scale;
  j["seed"] = d.seed;
  return j;
}

ExperimentConfig experiment_from_json(const Json& j) {
  check_keys(j, {"design", "repetitions", "learners", "gadget", "pint", "test_rows", "h_statistic"}, "experiment");
  ExperimentConfig c;
  if (j.contains("design")) c.design = design_from_json(j["design"]);
  SimDesign probe = c.design;
  probe.n = 2;
  const std::vector<std::string> names = feature_names(generate(probe).data);
  c.repetitions = count_or(j, "repetitions", c.repetitions);
  c.test_rows = count_or(j, "test_rows", c.test_rows);
  c.h_statistic = value_or<bool>(j, "h_statistic", c.h_statistic);
  if (j.contains("learners")) {
    if (!j["learners"].is_array()) throw_usage("'learners' must be an array");
    for (const Json& l : j["learners"]) c.learners.push_back(learner_from_json(l));
  } else {
    c.learners.push_back(LearnerSpec{});
  }
  if (j.contains("gadget")) {
    if (!j["gadget"].is_array()) throw_usage("'gadget' must be an array");
    for (const Json& g : j["gadget"]) c.gadget.push_back(gadget_config_from_json(g, names));
  }
  if (j.contains("pint") && !j["pint"].is_null()) c.pint = pint_config_from_json(j["pint"], names);
  return c;
}

Json to_json(const ExperimentConfig& c, const std::vector<std::string>& names) {
  Json j;
  j["design"] = to_json(c.design);
  j["repetitions"] = c.repetitions;
  j["test_rows"] = c.test_rows;
  j["h_statistic"] = c.h_statistic;
  j["learners"] = Json::array();
  for (const auto& l : c.learners) j["learners"].push_back(to_json(l));
  j["gadget"] = Json::array();
  for (const auto& g : c.gadget) j["gadget"].push_back(to_json(g, names));
  j["pint"] = c.pint ? to_json(*c.pint, names) : Json(nullptr);
  return j;
}

Json tree_to_json(const GadgetTree& t, const Dataset& d) {
  const auto& names = t.feature_names;
  Json j;
  j["schema"] = std::string("gadget.tree/") + kSchemaVersion;
  j["method"] = to_string(t.config.method);
  j["features"] = names;
  j["config"] = to_json(t.config, names);
  j["nodes"] = Json::array();
  for (const GadgetNode& n : t.nodes) {
    Json o;
    o["id"] = n.id;
    o["parent"] = n.parent < 0 ? Json(nullptr) : Json(n.parent);
    o["depth"] = n.depth;
    o["subspace"] = n.subspace.describe(d);
    o["n_rows"] = n.rows.size();
    o["rows"] = n.rows;
    Json risk = Json::object();
    for (std::size_t s = 0; s < t.config.S.size(); ++s) risk[names[t.config.S[s]]] = finite(n.risk[s]);
    o["risk"] = risk;
    o["total_risk"] = finite(n.total_risk());
    if (n.split) {
      Json s = split_rule_json(n.split->rule, d);
      s["objective"] = finite(n.split->objective);
      s["parent_risk"] = finite(n.split->parent_risk);
      s["relative_reduction"] = finite(n.split->relative_reduction);
      o["split"] = s;
      o["children"] = {n.left, n.right};
      o["stop_reason"] = nullptr;
    } else {
      o["split"] = nullptr;
      o["children"] = Json::array();
      o["stop_reason"] = n.stop_reason;
    }
    j["nodes"].push_back(o);
  }
  j["leaves"] = t.leaves();
  j["audit"] = Json::array();
  for (const CandidateRecord& c : t.audit) {
    Json a = split_rule_json(c.rule, d);
    a["node"] = c.node;
    a["n_left"] = c.n_left;
    a["n_right"] = c.n_right;
    a["objective"] = finite(c.objective);
    j["audit"].push_back(a);
  }
  j["warnings"] = t.warnings;
  return j;
}

Json curves_to_json(const GadgetTree& t, const Dataset& d) {
  Json j;
  j["schema"] = std::string("gadget.curves/") + kSchemaVersion;
  j["method"] = to_string(t.config.method);
  j["curves"] = Json::array();
  for (const RegionalEffect& e : t.regional) {
    const GadgetNode& n = t.nodes.at(static_cast<std::size_t>(e.node));
    Json c;
    c["node"] = e.node;
    c["subspace"] = n.subspace.describe(d);
    c["feature"] = t.feature_names.at(e.feature);
    c["categorical"] = d.feature(e.feature).categorical();
    c["kind"] = to_string(e.curve.method);
    c["grid"] = numbers(e.curve.grid);
    c["values"] = numbers(e.curve.values);
    c["band"] = numbers(e.curve.heterogeneity);
    if (e.uncentered) c["uncentered"] = numbers(e.uncentered->values);
    if (!e.points_x.empty()) c["points"] = {{"x", numbers(e.points_x)}, {"y", numbers(e.points_y)}};
    j["curves"].push_back(c);
  }
  return j;
}

Json report_to_json(const InteractionReport& r, const std::vector<std::string>& names) {
  Json j;
  j["schema"] = std::string("gadget.report/") + kSchemaVersion;
  j["S"] = names_of(r.S, names);
  j["Z"] = names_of(r.Z, names);
  j["splits"] = Json::array();
  for (const SplitMeasure& m : r.splits) {
    Json red = Json::object();
    for (std::size_t s = 0; s < r.S.size(); ++s) red[names[r.S[s]]] = finite(m.reduction[s]);
    j["splits"].push_back({{"node", m.node}, {"split_feature", names[m.split_feature]}, {"reduction", red}});
  }
  Json pair = Json::object(), total = Json::object();
  for (std::size_t z = 0; z < r.Z.size(); ++z) {
    Json row = Json::object();
    for (std::size_t s = 0; s < r.S.size(); ++s) row[names[r.S[s]]] = finite(r.pair[z][s]);
    pair[names[r.Z[z]]] = row;
    total[names[r.Z[z]]] = finite(r.split_feature_total[z]);
  }
  j["pair"] = pair;
  j["split_feature_total"] = total;
  Json r2 = Json::object();
  for (std::size_t s = 0; s < r.S.size(); ++s) r2[names[r.S[s]]] = finite(r.r2_feature[s]);
  j["r2_feature"] = r2;
  j["r2_total"] = finite(r.r2_total);
  if (!r.h_statistic.empty()) {
    Json h = Json::object();
    for (std::size_t k = 0; k < r.h_statistic.size(); ++k) h[names[k]] = finite(r.h_statistic[k]);
    j["h_statistic"] = h;
  }
  j["warnings"] = r.warnings;
  return j;
}

std::string report_to_csv(const InteractionReport& r, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "measure,feature,split_feature,node,value\n";
  auto row = [&](const char* m, const std::string& f, const std::string& z, const std::string& node, double v) {
    os << m << ',' << csv_field(f) << ',' << csv_field(z) << ',' << node << ',' << csv_number(v) << '\n';
  };
  for (const SplitMeasure& m : r.splits)
    for (std::size_t s = 0; s < r.S.size(); ++s)
      row("split_reduction", names[r.S[s]], names[m.split_feature], std::to_string(m.node), m.reduction[s]);
  for (std::size_t z = 0; z < r.Z.size(); ++z) {
    for (std::size_t s = 0; s < r.S.size(); ++s) row("pair_reduction", names[r.S[s]], names[r.Z[z]], "", r.pair[z][s]);
    row("split_feature_total", "", names[r.Z[z]], "", r.split_feature_total[z]);
  }
  for (std::size_t s = 0; s < r.S.size(); ++s) row("r2_feature", names[r.S[s]], "", "", r.r2_feature[s]);
  row("r2_total", "", "", "", r.r2_total);
  for (std::size_t k = 0; k < r.h_statistic.size(); ++k) row("h_statistic", names[k], "", "", r.h_statistic[k]);
  return os.str();
}

Json pint_to_json(const PintResult& r) {
  const auto& names = r.feature_names;
  Json j;
  j["schema"] = std::string("gadget.pint/") + kSchemaVersion;
  j["config"] = to_json(r.config, names);
  j["features"] = Json::array();
  for (const PintFeatureResult& f : r.features) {
    Json o;
    o["feature"] = names[f.feature];
    o["observed_risk"] = finite(f.observed_risk);
    o["normalized_risk"] = finite(f.normalized_risk);
    o["excluded"] = f.excluded;
    if (f.excluded) {
      o["null"] = nullptr;
    } else {
      o["null"] = {{"family", to_string(f.null.family)},
                   {"param1", finite(f.null.param1)},
                   {"param2", finite(f.null.param2)},
                   {"ks_statistic", finite(f.null.ks_statistic)},
                   {"ks_p_value", finite(f.null.ks_p_value)},
                   {"sample", numbers(f.null.sample)}};
    }
    o["threshold"] = finite(f.threshold);
    o["p_value"] = finite(f.p_value);
    o["p_bonferroni"] = finite(f.p_bonferroni);
    o["significant"] = f.significant;
    j["features"].push_back(o);
  }
  j["S"] = names_of(r.significant, names);
  j["warnings"] = r.warnings;
  return j;
}

Json hstat_to_json(const std::vector<double>& h, const std::vector<std::string>& names) {
  Json j;
  j["schema"] = std::string("gadget.hstat/") + kSchemaVersion;
  j["features"] = Json::array();
  for (std::size_t k = 0; k < h.size(); ++k) j["features"].push_back({{"feature", names[k]}, {"h2", finite(h[k])}});
  return j;
}

Json experiment_to_json(const ExperimentResult& r) {
  const auto& names = r.feature_names;
  auto per_feature = [&](const std::vector<double>& v) {
    Json o = Json::object();
    for (std::size_t k = 0; k < v.size() && k < names.size(); ++k) o[names[k]] = finite(v[k]);
    return o;
  };
  Json j;
  j["schema"] = std::string("gadget.simlab/") + kSchemaVersion;
  j["config"] = to_json(r.config, names);
  j["features"] = names;
  j["records"] = Json::array();
  for (const RepetitionRecord& x : r.records) {
    Json o;
    o["repetition"] = x.repetition;
    o["seed"] = x.seed;
    o["learner"] = x.learner;
    o["method"] = x.method;
    o["sd_recalculate"] = x.sd_recalculate;
    o["failed"] = x.failed;
    o["error"] = x.failed ? Json(x.error) : Json(nullptr);
    o["test_mse"] = finite(x.test_mse);
    o["test_r2"] = finite(x.test_r2);
    o["first_split_feature"] = x.first_split_feature ? Json(names[*x.first_split_feature]) : Json(nullptr);
    o["first_split_value"] = x.first_split_value ? finite(*x.first_split_value) : Json(nullptr);
    Json second = Json::array();
    for (const auto& f : x.second_level_features) second.push_back(f ? Json(names[*f]) : Json(nullptr));
    o["second_level_features"] = second;
    o["leaves"] = x.leaves;
    o["depth"] = x.depth;
    o["r2_total"] = finite(x.r2_total);
    o["r2_feature"] = numbers(x.r2_feature);
    o["split_feature_total"] = per_feature(x.split_feature_total);
    o["pint_p_values"] = per_feature(x.pint_p_values);
    Json sig = Json::object();
    for (std::size_t k = 0; k < x.pint_significant.size(); ++k) sig[names[k]] = static_cast<bool>(x.pint_significant[k]);
    o["pint_significant"] = sig;
    o["h_statistic"] = per_feature(x.h_statistic);
    j["records"].push_back(o);
  }
  j["summary"] = Json::array();
  for (const SummaryRow& s : summarize(r)) {
    Json o;
    o["learner"] = s.learner;
    o["method"] = s.method;
    o["sd_recalculate"] = s.sd_recalculate;
    o["repetitions"] = s.repetitions;
    o["failures"] = s.failures;
    o["test_mse_mean"] = finite(s.test_mse_mean);
    o["test_mse_sd"] = finite(s.test_mse_sd);
    o["first_split_share"] = per_feature(s.first_split_share);
    o["split_value_min"] = finite(s.split_value_min);
    o["split_value_max"] = finite(s.split_value_max);
    o["split_feature_total_mean"] = per_feature(s.split_feature_total_mean);
    o["leaves_min"] = finite(s.leaves_min);
    o["leaves_max"] = finite(s.leaves_max);
    o["leaves_median"] = finite(s.leaves_median);
    o["second_level_share"] = finite(s.second_level_share);
    o["r2_total_mean"] = finite(s.r2_total_mean);
    o["pint_significant_share"] = per_feature(s.pint_significant_share);
    o["pint_p_mean"] = per_feature(s.pint_p_mean);
    o["h_statistic_mean"] = per_feature(s.h_statistic_mean);
    j["summary"].push_back(o);
  }
  return j;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "learner,method,sd_recalculate,repetitions,failures,test_mse_mean,test_mse_sd,split_value_min,"
        "split_value_max,leaves_min,leaves_max,leaves_median,second_level_share,r2_total_mean";
  for (const char* prefix : {"first_split_share", "split_feature_total_mean", "pint_significant_share", "pint_p_mean",
                             "h_statistic_mean"})
    for (const auto& n : names) os << ',' << csv_field(std::string(prefix) + ":" + n);
  os << '\n';
  for (const SummaryRow& s : rows) {
    os << s.learner << ',' << s.method << ',' << (s.sd_recalculate ? "true" : "false") << ',' << s.repetitions << ','
       << s.failures << ',' << csv_number(s.test_mse_mean) << ',' << csv_number(s.test_mse_sd) << ','
       << csv_number(s.split_value_min) << ',' << csv_number(s.split_value_max) << ',' << csv_number(s.leaves_min)
       << ',' << csv_number(s.leaves_max) << ',' << csv_number(s.leaves_median) << ','
       << csv_number(s.second_level_share) << ',' << csv_number(s.r2_total_mean);
    for (const auto* v : {&s.first_split_share, &s.split_feature_total_mean, &s.pint_significant_share,
                          &s.pint_p_mean, &s.h_statistic_mean})
      for (std::size_t k = 0; k < names.size(); ++k) os << ',' << (k < v->size() ? csv_number((*v)[k]) : "");
    os << '\n';
  }
  return os.str();
}

std::string write_csv(const Dataset& d) {
  std::ostringstream os;
  for (std::size_t j = 0; j < d.cols(); ++j) os << csv_field(d.feature(j).name) << ',';
  os << csv_field(d.target_name()) << '\n';
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      const FeatureMeta& f = d.feature(j);
      if (f.categorical()) os << csv_field(f.categories.at(static_cast<std::size_t>(d.at(i, j))));
      else os << csv_number(d.at(i, j));
      os << ',';
    }
    os << csv_number(d.y()(static_cast<Eigen::Index>(i))) << '\n';
  }
  return os.str();
}

}  // namespace gadget
