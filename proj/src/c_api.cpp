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

#include "gadget/gadget.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

#include "gadget/io.hpp"
#include "gadget/parallel.hpp"

struct gadget_dataset {
  gadget::Dataset data;
  std::vector<std::string> names;
};

struct gadget_model {
  gadget::PredictorPtr predictor;
  gadget::LearnerSpec spec;
  std::size_t features = 0;
};

namespace {

thread_local std::string last_error;

gadget_status fail(gadget_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
gadget_status guarded(F&& f) {
  try {
    f();
    return GADGET_OK;
  } catch (const gadget::Error& e) {
    switch (e.kind()) {
      case gadget::ErrorKind::kUsage:
        return fail(GADGET_ERROR_USAGE, e.what());
      case gadget::ErrorKind::kData:
        return fail(GADGET_ERROR_DATA, e.what());
      case gadget::ErrorKind::kNumeric:
        return fail(GADGET_ERROR_NUMERIC, e.what());
    }
    return fail(GADGET_ERROR_INTERNAL, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(GADGET_ERROR_USAGE, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(GADGET_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GADGET_ERROR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

gadget::Json parse(const char* text, const char* what) {
  if (!text || !*text) return gadget::Json::object();
  try {
    return gadget::Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    gadget::throw_usage(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) gadget::throw_usage(std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* gadget_version(void) { return GADGET_VERSION; }

const char* gadget_last_error(void) { return last_error.c_str(); }

void gadget_string_free(char* s) { std::free(s); }

void gadget_set_threads(int threads) { gadget::set_thread_count(threads); }

gadget_status gadget_dataset_load_csv(const char* path, const char* target, const char* categorical,
                                      gadget_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output handle");
    *out = nullptr;
    std::ifstream in(path, std::ios::binary);
    if (!in) gadget::throw_data(std::string("cannot open '") + path + "'");
    gadget::LoadOptions opt;
    opt.target = target ? target : "";
    if (categorical) {
      std::stringstream ss(categorical);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) opt.kind_hints[tok] = gadget::FeatureKind::kCategorical;
    }
    gadget::Dataset d = gadget::load_dataset(in, opt);
    for (const auto& [name, kind] : opt.kind_hints) {
      (void)kind;
      if (!d.find_feature(name)) gadget::throw_usage("unknown categorical column '" + name + "'");
    }
    auto names = gadget::feature_names(d);
    *out = new gadget_dataset{std::move(d), std::move(names)};
  });
}

gadget_status gadget_dataset_simulate(const char* design_json, gadget_dataset** out, char** truth_json) {
  return guarded([&] {
    require(out, "output handle");
    *out = nullptr;
    const gadget::SimDesign design = gadget::design_from_json(parse(design_json, "design"));
    gadget::Simulation sim = gadget::generate(design);
    auto names = gadget::feature_names(sim.data);
    if (truth_json) {
      gadget::Json t;
      t["design"] = gadget::to_json(design);
      t["equation"] = sim.truth.equation;
      gadget::Json inter = gadget::Json::array();
      for (std::size_t j : sim.truth.interacting) inter.push_back(names[j]);
      t["interacting"] = inter;
      t["split_feature"] = names[sim.truth.split_feature];
      t["split_value"] = sim.truth.split_value;
      t["noise_sd"] = sim.truth.noise_sd;
      t["leaves"] = sim.truth.leaves;
      t["leaf_slopes"] = sim.truth.leaf_slopes;
      *truth_json = dup(t.dump(2) + "\n");
    }
    *out = new gadget_dataset{std::move(sim.data), std::move(names)};
  });
}

size_t gadget_dataset_rows(const gadget_dataset* d) { return d ? d->data.rows() : 0; }

size_t gadget_dataset_cols(const gadget_dataset* d) { return d ? d->data.cols() : 0; }

const char* gadget_dataset_feature_name(const gadget_dataset* d, size_t j) {
  if (!d || j >= d->names.size()) return nullptr;
  return d->names[j].c_str();
}

gadget_status gadget_dataset_to_csv(const gadget_dataset* d, char** csv) {
  return guarded([&] {
    require(d, "dataset");
    require(csv, "output string");
    *csv = dup(gadget::write_csv(d->data));
  });
}

void gadget_dataset_free(gadget_dataset* d) { delete d; }

gadget_status gadget_model_fit(const gadget_dataset* d, const char* learner_json, gadget_model** out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "output handle");
    *out = nullptr;
    const gadget::LearnerSpec spec = gadget::learner_from_json(parse(learner_json, "learner"));
    gadget::PredictorPtr p = gadget::make_predictor(spec, d->data);
    *out = new gadget_model{std::move(p), spec, d->data.cols()};
  });
}

gadget_status gadget_model_predict(const gadget_model* m, const double* x, size_t rows, size_t cols, double* out) {
  return guarded([&] {
    require(m, "model");
    require(x, "input matrix");
    require(out, "output buffer");
    if (cols != m->features)
      gadget::throw_usage("model expects " + std::to_string(m->features) + " columns, got " + std::to_string(cols));
    gadget::Matrix q(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(q.data(), x, rows * cols * sizeof(double));
    const gadget::Vector p = m->predictor->predict(q);
    std::memcpy(out, p.data(), rows * sizeof(double));
  });
}

gadget_status gadget_model_r_squared(const gadget_model* m, const gadget_dataset* d, double* out) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(out, "output value");
    *out = gadget::r_squared(d->data.y(), m->predictor->predict(d->data.x()));
  });
}

void gadget_model_free(gadget_model* m) { delete m; }

gadget_status gadget_explain(const gadget_dataset* d, const gadget_model* m, const char* config_json, int with_h,
                             char** tree_json, char** curves_json, char** report_json, char** report_csv) {
  return guarded([&] {
    require(d, "dataset");
    require(m, "model");
    const gadget::GadgetConfig cfg = gadget::gadget_config_from_json(parse(config_json, "gadget"), d->names);
    const gadget::GadgetTree tree = gadget::fit_tree(cfg, d->data, m->predictor);
    gadget::InteractionReport rep = gadget::interaction_report(tree);
    if (with_h) rep.h_statistic = gadget::h_statistics(*m->predictor, d->data, 2000, cfg.seed);
    // Build every output before handing any out, so a failure leaves none.
    const std::string t = gadget::tree_to_json(tree, d->data).dump(2) + "\n";
    const std::string c = gadget::curves_to_json(tree, d->data).dump(2) + "\n";
    const std::string r = gadget::report_to_json(rep, d->names).dump(2) + "\n";
    const std::string csv = gadget::report_to_csv(rep, d->names);
    put(tree_json, t);
    put(curves_json, c);
    put(report_json, r);
    put(report_csv, csv);
  });
}

gadget_status gadget_pint(const gadget_dataset* d, const char* learner_json, const char* config_json,
                          char** result_json) {
  return guarded([&] {
    require(d, "dataset");
    require(result_json, "output string");
    const gadget::LearnerSpec spec = gadget::learner_from_json(parse(learner_json, "learner"));
    const gadget::PintConfig cfg = gadget::pint_config_from_json(parse(config_json, "pint"), d->names);
    const gadget::PintResult r = gadget::run_pint(cfg, spec, d->data);
    *result_json = dup(gadget::pint_to_json(r).dump(2) + "\n");
  });
}

gadget_status gadget_hstat(const gadget_dataset* d, const gadget_model* m, size_t max_rows, uint64_t seed,
                           char** result_json) {
  return guarded([&] {
    require(d, "dataset");
    require(m, "model");
    require(result_json, "output string");
    const std::vector<double> h = gadget::h_statistics(*m->predictor, d->data, max_rows ? max_rows : 2000, seed);
    *result_json = dup(gadget::hstat_to_json(h, d->names).dump(2) + "\n");
  });
}

gadget_status gadget_simlab_run(const char* experiment_json, char** result_json, char** summary_csv) {
  return guarded([&] {
    require(result_json, "output string");
    const gadget::ExperimentConfig cfg = gadget::experiment_from_json(parse(experiment_json, "experiment"));
    const gadget::ExperimentResult r = gadget::run_experiment(cfg);
    const std::string j = gadget::experiment_to_json(r).dump(2) + "\n";
    const std::string csv = gadget::summary_to_csv(gadget::summarize(r), r.feature_names);
    put(result_json, j);
    put(summary_csv, csv);
  });
}

}  // extern "C"
