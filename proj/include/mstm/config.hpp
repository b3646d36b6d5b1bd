#pragma once

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "mstm/gibbs.hpp"
#include "mstm/model.hpp"
#include "mstm/study.hpp"

namespace mstm {

// Declarative run configuration: one JSON tree, no positional knobs beyond
// the subcommand. Unknown keys are rejected so typos cannot silently fall
// back to defaults.
struct RunConfig {
  std::string edge_list_path;
  std::string support_path;
  std::string observations_path;
  std::string covariates_path;  // optional
  ModelConfig model;
  GibbsConfig mcmc;
  std::string output_dir = "out";
  bool basis_dump = false;
  std::map<std::string, std::vector<ContrastWeight>> contrasts;
};

RunConfig parse_run_config(const nlohmann::json& j);
StudyConfig parse_study_config(const nlohmann::json& j);

nlohmann::json run_config_echo(const RunConfig& config);

const char* to_string(Coupling c);
const char* to_string(PropagatorMode m);
const char* to_string(BetaMode m);
const char* to_string(VarianceMode m);

}  // namespace mstm
