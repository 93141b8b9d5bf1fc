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

// Command-line front end: explain, pint, simlab, hstat and version. All work
// goes through the C interface; this file only parses flags, writes
// artifacts and records a manifest with their hashes.

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gadget/gadget.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitInternal = 1;

struct Failure {
  int code;
  std::string message;
};

void check(gadget_status s) {
  if (s != GADGET_OK) throw Failure{static_cast<int>(s), gadget_last_error()};
}

[[noreturn]] void usage(const std::string& msg) { throw Failure{GADGET_ERROR_USAGE, msg}; }

struct CString {
  char* p = nullptr;
  ~CString() { gadget_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

using DatasetPtr = std::unique_ptr<gadget_dataset, decltype(&gadget_dataset_free)>;
using ModelPtr = std::unique_ptr<gadget_model, decltype(&gadget_model_free)>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{GADGET_ERROR_DATA, "cannot open '" + path + "'"};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string sha256(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw Failure{kExitInternal, "SHA-256 failed"};
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    usage("invalid JSON in " + where + ": " + e.what());
  }
}

// Collects artifacts in memory and writes them together; if any write fails
// the files already written are removed.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.push_back({name, std::move(content)}); }

  Json hashes() const {
    Json a = Json::array();
    for (const auto& [name, content] : files_) a.push_back({{"file", name}, {"sha256", sha256(content)}});
    return a;
  }

  void commit() {
    std::error_code ec;
    if (!dir_.empty()) fs::create_directories(dir_, ec);
    if (ec) throw Failure{GADGET_ERROR_DATA, "cannot create '" + dir_.string() + "': " + ec.message()};
    std::vector<fs::path> written;
    for (const auto& [name, content] : files_) {
      const fs::path p = dir_ / name;
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      const bool opened = out.is_open();
      if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (out) out.close();
      if (!out) {
        for (const auto& w : written) fs::remove(w, ec);
        if (opened) fs::remove(p, ec);
        throw Failure{GADGET_ERROR_DATA, "cannot write '" + p.string() + "'"};
      }
      written.push_back(p);
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct DataFlags {
  std::string path;
  std::string target;
  std::string categorical;
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.path, "CSV file with a header row")->required();
  app->add_option("--target", f.target, "target column")->required();
  app->add_option("--categorical", f.categorical, "comma-separated columns to treat as categorical");
}

DatasetPtr load(const DataFlags& f) {
  gadget_dataset* d = nullptr;
  check(gadget_dataset_load_csv(f.path.c_str(), f.target.c_str(), f.categorical.empty() ? nullptr : f.categorical.c_str(),
                                &d));
  return DatasetPtr(d, gadget_dataset_free);
}

struct LearnerFlags {
  std::string kind = "trees";
  int trees = 50;
  int tree_depth = 8;
  int min_leaf = 5;
  int k = 10;
  std::string archive;
};

void add_learner_flags(CLI::App* app, LearnerFlags& f) {
  app->add_option("--learner", f.kind, "linear, pairwise, knn, trees or external")
      ->capture_default_str()
      ->check(CLI::IsMember({"linear", "pairwise", "knn", "trees", "external"}));
  app->add_option("--trees", f.trees, "number of bagged trees")->capture_default_str();
  app->add_option("--tree-depth", f.tree_depth, "maximum depth of each bagged tree")->capture_default_str();
  app->add_option("--min-leaf", f.min_leaf, "minimum rows per tree leaf")->capture_default_str();
  app->add_option("--k", f.k, "neighbours for knn")->capture_default_str();
  app->add_option("--archive", f.archive, "prediction archive CSV for the external learner");
}

Json learner_json(const LearnerFlags& f, std::uint64_t seed) {
  Json j;
  j["kind"] = f.kind;
  if (f.kind == "trees") {
    j["trees"] = f.trees;
    j["max_depth"] = f.tree_depth;
    j["min_leaf"] = f.min_leaf;
  }
  if (f.kind == "knn") j["k"] = f.k;
  if (f.kind == "external") {
    if (f.archive.empty()) usage("--learner external needs --archive");
    j["archive"] = f.archive;
  }
  j["seed"] = seed;
  return j;
}

ModelPtr fit(const gadget_dataset* d, const Json& learner) {
  gadget_model* m = nullptr;
  check(gadget_model_fit(d, learner.dump().c_str(), &m));
  return ModelPtr(m, gadget_model_free);
}

struct EffectFlags {
  std::string method = "pd";
  std::string S, Z, s_from;
  std::size_t max_depth = 6;
  std::size_t min_node = 40;
  double gamma = 0.1;
  double r2_target = 1.0;
  std::string sd_recalc = "true";
  std::size_t grid_size = 20;
  std::string config;
};

void add_effect_flags(CLI::App* app, EffectFlags& f, bool tree_flags) {
  app->add_option("--method", f.method, "pd, ale or sd")->capture_default_str()->check(
      CLI::IsMember({"pd", "ale", "sd", "shap"}));
  app->add_option("--S", f.S, "features of interest: names or 1-based positions, comma-separated");
  app->add_option("--grid-size", f.grid_size, "grid points per feature")->capture_default_str();
  app->add_option("--sd-recalc", f.sd_recalc, "recompute Shapley values inside regions")
      ->capture_default_str()
      ->check(CLI::IsMember({"true", "false"}));
  app->add_option("--config", f.config, "JSON file with further settings; flags take precedence")
      ->check(CLI::ExistingFile);
  if (!tree_flags) return;
  app->add_option("--Z", f.Z, "split candidates: names or 1-based positions, comma-separated");
  app->add_option("--S-from", f.s_from, "take S from a pint.json or a comma-separated list file")
      ->check(CLI::ExistingFile);
  app->add_option("--max-depth", f.max_depth, "maximum tree depth")->capture_default_str();
  app->add_option("--min-node", f.min_node, "minimum rows per region")->capture_default_str();
  app->add_option("--gamma", f.gamma, "relative improvement needed to keep splitting")->capture_default_str();
  app->add_option("--r2-target", f.r2_target, "stop once this share of heterogeneity is explained")
      ->capture_default_str();
}

bool given(CLI::App* app, const char* name) { return app->count(name) > 0; }

std::string s_from_file(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const Json j = parse_json(text, path);
    if (!j.contains("S") || !j["S"].is_array()) usage("'" + path + "' has no S list");
    std::string s;
    for (const auto& e : j["S"]) s += (s.empty() ? "" : ",") + e.get<std::string>();
    if (s.empty()) usage("'" + path + "' lists no significant features");
    return s;
  }
  std::string s;
  for (char c : text) s += (c == '\n' || c == '\r') ? ',' : c;
  return s;
}

Json effect_json(CLI::App* app, const EffectFlags& f, std::uint64_t seed) {
  Json j = f.config.empty() ? Json::object() : parse_json(read_file(f.config), f.config);
  if (!j.is_object()) usage("--config must hold a JSON object");
  if (given(app, "--method") || !j.contains("method")) j["method"] = f.method == "shap" ? "sd" : f.method;
  if (!f.S.empty()) j["S"] = f.S;
  if (!f.s_from.empty()) {
    if (!f.S.empty()) usage("--S and --S-from are exclusive");
    j["S"] = s_from_file(f.s_from);
  }
  if (!f.Z.empty()) j["Z"] = f.Z;
  auto set = [&](const char* flag, const char* key, auto value) {
    if (given(app, flag) || !j.contains(key)) j[key] = value;
  };
  set("--grid-size", "grid_size", f.grid_size);
  set("--sd-recalc", "sd_recalculate", f.sd_recalc == "true");
  if (app->get_option_no_throw("--max-depth")) {
    set("--max-depth", "max_depth", f.max_depth);
    set("--min-node", "min_node_size", f.min_node);
    set("--gamma", "gamma", f.gamma);
    set("--r2-target", "r2_target", f.r2_target);
  }
  j["seed"] = seed;
  return j;
}

struct PintFlags {
  std::size_t s = 50;
  double alpha = 0.05;
  std::string dist_fit = "parametric-auto";
  std::optional<double> prefilter;
  bool bonferroni = false;
};

void add_pint_flags(CLI::App* app, PintFlags& f) {
  app->add_option("--s", f.s, "number of permutations")->capture_default_str();
  app->add_option("--alpha", f.alpha, "significance level")->capture_default_str();
  app->add_option("--dist-fit", f.dist_fit, "empirical or parametric-auto")
      ->capture_default_str()
      ->check(CLI::IsMember({"empirical", "parametric-auto"}));
  app->add_option("--prefilter-threshold", f.prefilter, "skip features whose normalized root risk is below this");
  app->add_flag("--bonferroni", f.bonferroni, "also decide on Bonferroni-adjusted p-values");
}

Json pint_json(const PintFlags& f, const Json& effect, std::uint64_t seed) {
  Json j;
  j["s"] = f.s;
  j["alpha"] = f.alpha;
  j["dist_fit"] = f.dist_fit;
  j["seed"] = seed;
  if (f.prefilter) j["prefilter"] = *f.prefilter;
  j["bonferroni"] = f.bonferroni;
  Json e = effect;
  e.erase("Z");
  j["effect"] = e;
  return j;
}

Json manifest(const std::string& command, const std::vector<std::string>& args, const Json& inputs,
              const Json& settings, std::uint64_t seed, const Artifacts& out) {
  Json m;
  m["schema"] = "gadget.manifest/1";
  m["tool"] = "gadget";
  m["version"] = gadget_version();
  m["command"] = command;
  m["arguments"] = args;
  m["inputs"] = inputs;
  m["settings"] = settings;
  m["seed"] = seed;
  m["outputs"] = out.hashes();
  return m;
}

Json input_entry(const std::string& path) { return {{"path", path}, {"sha256", sha256(read_file(path))}}; }

void print_warnings(const Json& j) {
  if (j.contains("warnings"))
    for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regional feature effects and interaction detection for tabular models"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: GADGET_THREADS or all cores)");
  std::uint64_t seed = 0;

  std::vector<std::string> args(argv + 1, argv + argc);

  // explain
  auto* explain = app.add_subcommand("explain", "fit a model and partition its feature space");
  DataFlags ex_data;
  LearnerFlags ex_learner;
  EffectFlags ex_effect;
  PintFlags ex_pint;
  std::string ex_out;
  bool ex_run_pint = false, ex_hstat = false;
  add_data_flags(explain, ex_data);
  add_learner_flags(explain, ex_learner);
  add_effect_flags(explain, ex_effect, true);
  add_pint_flags(explain, ex_pint);
  explain->add_flag("--pint", ex_run_pint, "run the permutation test first and use its features as S");
  explain->add_flag("--hstat", ex_hstat, "add H-statistics to the report");
  explain->add_option("--seed", seed, "seed for every random step")->capture_default_str();
  explain->add_option("--out", ex_out, "output directory")->required();

  // pint
  auto* pint = app.add_subcommand("pint", "permutation test for interacting features");
  DataFlags pi_data;
  LearnerFlags pi_learner;
  EffectFlags pi_effect;
  PintFlags pi_flags;
  std::string pi_out, pi_s_out;
  add_data_flags(pint, pi_data);
  add_learner_flags(pint, pi_learner);
  add_effect_flags(pint, pi_effect, false);
  add_pint_flags(pint, pi_flags);
  pint->add_option("--seed", seed, "seed for every random step")->capture_default_str();
  pint->add_option("--out", pi_out, "output directory")->required();
  pint->add_option("--S-out", pi_s_out, "also write the significant features as a comma-separated list");

  // hstat
  auto* hstat = app.add_subcommand("hstat", "H-statistic of every feature");
  DataFlags h_data;
  LearnerFlags h_learner;
  std::size_t h_rows = 2000;
  std::string h_out;
  add_data_flags(hstat, h_data);
  add_learner_flags(hstat, h_learner);
  hstat->add_option("--max-rows", h_rows, "subsample above this many rows")->capture_default_str();
  hstat->add_option("--seed", seed, "seed for every random step")->capture_default_str();
  hstat->add_option("--out", h_out, "output JSON file")->required();

  // simlab
  auto* simlab = app.add_subcommand("simlab", "benchmark designs and experiments");
  simlab->require_subcommand(1);
  auto* sim_gen = simlab->add_subcommand("generate", "write a simulated dataset");
  auto* sim_run = simlab->add_subcommand("run", "run repetitions of learners and explanations");
  std::string design = "xor", sim_out, truth_out, sim_config, sim_method = "pd", sim_recalc = "true";
  double rho = 0.0, noise = 1.0, sim_gamma = 0.1;
  std::size_t n = 500, reps = 10, test_rows = 2000, sim_depth = 6, sim_min_node = 40;
  bool sim_pint = false, sim_h = false;
  LearnerFlags sim_learner;
  PintFlags sim_pint_flags;
  for (auto* c : {sim_gen, sim_run}) {
    c->add_option("--design", design, "xor, hierarchical or spurious")
        ->capture_default_str()
        ->check(CLI::IsMember({"xor", "hierarchical", "spurious"}));
    c->add_option("--rho", rho, "xor only: correlation of x1 and x3")->capture_default_str();
    c->add_option("--n", n, "rows")->capture_default_str();
    c->add_option("--noise-scale", noise, "multiplies the design noise")->capture_default_str();
    c->add_option("--seed", seed, "seed")->capture_default_str();
    c->add_option("--out", sim_out, "output file")->required();
  }
  sim_gen->add_option("--truth", truth_out, "also write the ground truth as JSON");
  add_learner_flags(sim_run, sim_learner);
  add_pint_flags(sim_run, sim_pint_flags);
  sim_run->add_option("--reps", reps, "repetitions")->capture_default_str();
  sim_run->add_option("--test-rows", test_rows, "rows of the held-out test draw")->capture_default_str();
  sim_run->add_option("--method", sim_method, "pd, ale, sd or none")
      ->capture_default_str()
      ->check(CLI::IsMember({"pd", "ale", "sd", "none"}));
  sim_run->add_option("--sd-recalc", sim_recalc, "true, false or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"true", "false", "both"}));
  sim_run->add_option("--max-depth", sim_depth, "maximum tree depth")->capture_default_str();
  sim_run->add_option("--min-node", sim_min_node, "minimum rows per region")->capture_default_str();
  sim_run->add_option("--gamma", sim_gamma, "relative improvement needed to keep splitting")->capture_default_str();
  sim_run->add_flag("--pint", sim_pint, "run the permutation test in every repetition");
  sim_run->add_flag("--hstat", sim_h, "compute H-statistics in every repetition");
  sim_run->add_option("--config", sim_config, "experiment JSON; replaces the flags above")->check(CLI::ExistingFile);

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : GADGET_ERROR_USAGE;
  }

  try {
    if (threads < 0) usage("--threads must be nonnegative");
    gadget_set_threads(threads);

    if (app.got_subcommand("version")) {
      std::cout << "gadget " << gadget_version() << "\n";
      return 0;
    }

    if (explain->parsed()) {
      DatasetPtr d = load(ex_data);
      const Json learner = learner_json(ex_learner, seed);
      Json effect = effect_json(explain, ex_effect, seed);
      Artifacts out(ex_out);
      Json settings;
      settings["learner"] = learner;
      if (ex_run_pint) {
        if (!ex_effect.S.empty() || !ex_effect.s_from.empty()) usage("--pint chooses S itself; drop --S/--S-from");
        const Json pc = pint_json(ex_pint, effect, seed);
        CString pr;
        check(gadget_pint(d.get(), learner.dump().c_str(), pc.dump().c_str(), &pr.p));
        const Json pj = parse_json(pr.str(), "permutation test result");
        print_warnings(pj);
        if (pj["S"].empty()) usage("the permutation test found no interacting features; nothing to explain");
        effect["S"] = pj["S"];
        settings["pint"] = pj["config"];
        out.add("pint.json", pr.str());
      }
      ModelPtr m = fit(d.get(), learner);
      CString tree, curves, report, csv;
      check(gadget_explain(d.get(), m.get(), effect.dump().c_str(), ex_hstat ? 1 : 0, &tree.p, &curves.p, &report.p,
                           &csv.p));
      const Json tj = parse_json(tree.str(), "tree");
      print_warnings(tj);
      settings["gadget"] = tj["config"];
      out.add("tree.json", tree.str());
      out.add("curves.json", curves.str());
      out.add("report.json", report.str());
      out.add("report.csv", csv.str());
      Json inputs = Json::array({input_entry(ex_data.path)});
      if (ex_learner.kind == "external") inputs.push_back(input_entry(ex_learner.archive));
      const Json man = manifest("explain", args, inputs, settings, seed, out);
      out.add("manifest.json", man.dump(2) + "\n");
      out.commit();
      double r2 = 0.0;
      check(gadget_model_r_squared(m.get(), d.get(), &r2));
      const Json rep = parse_json(report.str(), "report");
      std::cout << "model R^2 (training) " << r2 << ", " << tj["leaves"].size() << " regions, R^2_Tot "
                << rep["r2_total"] << "\n";
      return 0;
    }

    if (pint->parsed()) {
      DatasetPtr d = load(pi_data);
      const Json learner = learner_json(pi_learner, seed);
      const Json pc = pint_json(pi_flags, effect_json(pint, pi_effect, seed), seed);
      CString pr;
      check(gadget_pint(d.get(), learner.dump().c_str(), pc.dump().c_str(), &pr.p));
      const Json pj = parse_json(pr.str(), "permutation test result");
      print_warnings(pj);
      Artifacts out(pi_out);
      out.add("pint.json", pr.str());
      std::string s;
      for (const auto& e : pj["S"]) s += (s.empty() ? "" : ",") + e.get<std::string>();
      const Json man = manifest("pint", args, Json::array({input_entry(pi_data.path)}),
                                {{"learner", learner}, {"pint", pj["config"]}}, seed, out);
      out.add("manifest.json", man.dump(2) + "\n");
      out.commit();
      if (!pi_s_out.empty()) {
        Artifacts handoff(fs::path(pi_s_out).parent_path());
        handoff.add(fs::path(pi_s_out).filename().string(), s + "\n");
        handoff.commit();
      }
      std::cout << "S = {" << s << "}\n";
      return 0;
    }

    if (hstat->parsed()) {
      DatasetPtr d = load(h_data);
      ModelPtr m = fit(d.get(), learner_json(h_learner, seed));
      CString h;
      check(gadget_hstat(d.get(), m.get(), h_rows, seed, &h.p));
      Artifacts out(fs::path(h_out).parent_path());
      out.add(fs::path(h_out).filename().string(), h.str());
      out.commit();
      const Json hj = parse_json(h.str(), "H-statistics");
      for (const auto& f : hj["features"])
        std::cout << f["feature"].get<std::string>() << " " << f["h2"] << "\n";
      return 0;
    }

    if (sim_gen->parsed()) {
      const Json dj = {{"kind", design}, {"rho", rho}, {"n", n}, {"noise_scale", noise}, {"seed", seed}};
      gadget_dataset* raw = nullptr;
      CString truth, csv;
      check(gadget_dataset_simulate(dj.dump().c_str(), &raw, &truth.p));
      DatasetPtr d(raw, gadget_dataset_free);
      check(gadget_dataset_to_csv(d.get(), &csv.p));
      Artifacts out(fs::path(sim_out).parent_path());
      out.add(fs::path(sim_out).filename().string(), csv.str());
      out.commit();
      if (!truth_out.empty()) {
        Artifacts t(fs::path(truth_out).parent_path());
        t.add(fs::path(truth_out).filename().string(), truth.str());
        t.commit();
      }
      return 0;
    }

    if (sim_run->parsed()) {
      Json cfg;
      if (!sim_config.empty()) {
        cfg = parse_json(read_file(sim_config), sim_config);
      } else {
        cfg["design"] = {{"kind", design}, {"rho", rho}, {"n", n}, {"noise_scale", noise}, {"seed", seed}};
        cfg["repetitions"] = reps;
        cfg["test_rows"] = test_rows;
        cfg["h_statistic"] = sim_h;
        cfg["learners"] = Json::array({learner_json(sim_learner, seed)});
        cfg["gadget"] = Json::array();
        if (sim_method != "none") {
          std::vector<bool> recalc;
          if (sim_method != "sd" || sim_recalc != "false") recalc.push_back(true);
          if (sim_method == "sd" && sim_recalc != "true") recalc.push_back(false);
          for (bool r : recalc)
            cfg["gadget"].push_back({{"method", sim_method},
                                     {"sd_recalculate", r},
                                     {"max_depth", sim_depth},
                                     {"min_node_size", sim_min_node},
                                     {"gamma", sim_gamma}});
        }
        if (sim_pint) cfg["pint"] = pint_json(sim_pint_flags, Json{{"method", "pd"}}, seed);
      }
      CString result, summary;
      check(gadget_simlab_run(cfg.dump().c_str(), &result.p, &summary.p));
      fs::path csv_path = sim_out;
      csv_path.replace_extension(".csv");
      Artifacts out(fs::path(sim_out).parent_path());
      out.add(fs::path(sim_out).filename().string(), result.str());
      out.add(csv_path.filename().string(), summary.str());
      out.commit();
      std::cout << summary.str();
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
