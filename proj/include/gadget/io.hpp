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

// JSON and CSV forms of fitted trees, curves, interaction reports, test and
// experiment results, and parsers for the configuration objects that the C
// interface accepts. Features appear by name in every artifact.

#ifndef GADGET_IO_HPP_
#define GADGET_IO_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "gadget/dataset.hpp"
#include "gadget/gadget.hpp"
#include "gadget/interactions.hpp"
#include "gadget/learners.hpp"
#include "gadget/pint.hpp"
#include "gadget/simlab.hpp"

namespace gadget {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

// Feature lists: an array of names or 1-based positions, or a comma-separated
// string of either. Unknown names and out-of-range positions are usage
// errors.
std::vector<std::size_t> parse_features(const Json& spec, const std::vector<std::string>& names);
std::vector<std::size_t> parse_features(const std::string& spec, const std::vector<std::string>& names);

std::vector<std::string> feature_names(const Dataset& d);

LearnerSpec learner_from_json(const Json& j);
Json to_json(const LearnerSpec& s);

// S and Z are resolved against `names`; missing keys keep defaults.
GadgetConfig gadget_config_from_json(const Json& j, const std::vector<std::string>& names);
Json to_json(const GadgetConfig& c, const std::vector<std::string>& names);

PintConfig pint_config_from_json(const Json& j, const std::vector<std::string>& names);
Json to_json(const PintConfig& c, const std::vector<std::string>& names);

SimDesign design_from_json(const Json& j);
Json to_json(const SimDesign& d);

ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ExperimentConfig& c, const std::vector<std::string>& names);

Json tree_to_json(const GadgetTree& t, const Dataset& d);
Json curves_to_json(const GadgetTree& t, const Dataset& d);
Json report_to_json(const InteractionReport& r, const std::vector<std::string>& names);
// One row per (measure, feature, split feature, node).
std::string report_to_csv(const InteractionReport& r, const std::vector<std::string>& names);
Json pint_to_json(const PintResult& r);
Json hstat_to_json(const std::vector<double>& h, const std::vector<std::string>& names);
Json experiment_to_json(const ExperimentResult& r);
// Summary rows as CSV, one column per aggregated quantity.
std::string summary_to_csv(const std::vector<SummaryRow>& rows, const std::vector<std::string>& names);

std::string write_csv(const Dataset& d);

}  // namespace gadget

#endif  // GADGET_IO_HPP_
