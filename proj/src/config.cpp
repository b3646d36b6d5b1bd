#include "mstm/config.hpp"

#include <set>

#include "mstm/errors.hpp"

namespace mstm {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "'");
  }
}

Coupling parse_coupling(const std::string& s) {
  if (s == "none") return Coupling::none;
  if (s == "same_unit") return Coupling::same_unit;
  throw ConfigError("config: coupling must be 'none' or 'same_unit'");
}

PropagatorMode parse_propagator_mode(const std::string& s) {
  if (s == "reduced") return PropagatorMode::reduced;
  if (s == "paper_literal") return PropagatorMode::paper_literal;
  throw ConfigError("config: propagator.mode must be 'reduced' or "
                    "'paper_literal'");
}

BetaMode parse_beta_mode(const std::string& s) {
  if (s == "shared") return BetaMode::shared;
  if (s == "per_time") return BetaMode::per_time;
  throw ConfigError("config: beta.mode must be 'shared' or 'per_time'");
}

VarianceMode parse_variance_mode(const std::string& s) {
  if (s == "known") return VarianceMode::known;
  if (s == "reweighted") return VarianceMode::reweighted;
  if (s == "constant") return VarianceMode::constant;
  throw ConfigError("config: variance.mode must be 'known', 'reweighted' or "
                    "'constant'");
}

ModelConfig parse_model_config(const json& j) {
  check_keys(j, "model",
             {"r", "coupling", "propagator", "prior", "beta", "variance",
              "covariates"});
  ModelConfig m;
  if (!j.contains("r")) throw ConfigError("config: model.r is required");
  m.r = j.at("r").get<int>();
  m.coupling = parse_coupling(get_or<std::string>(j, "coupling", "same_unit"));
  if (j.contains("propagator")) {
    check_keys(j.at("propagator"), "model.propagator", {"mode"});
    m.propagator_mode = parse_propagator_mode(
        get_or<std::string>(j.at("propagator"), "mode", "reduced"));
  }
  if (j.contains("prior")) {
    check_keys(j.at("prior"), "model.prior", {"target"});
    m.prior_target = get_or<std::string>(j.at("prior"), "target", "car");
  }
  if (j.contains("beta")) {
    check_keys(j.at("beta"), "model.beta", {"mode", "prior_variance"});
    m.beta_mode =
        parse_beta_mode(get_or<std::string>(j.at("beta"), "mode", "shared"));
    m.sigma_beta2 = get_or<double>(j.at("beta"), "prior_variance", 1e15);
  }
  if (j.contains("variance")) {
    check_keys(j.at("variance"), "model.variance", {"mode", "value"});
    m.variance_mode = parse_variance_mode(
        get_or<std::string>(j.at("variance"), "mode", "known"));
    m.variance_value = get_or<double>(j.at("variance"), "value", 1.0);
  }
  if (j.contains("covariates")) {
    const json& c = j.at("covariates");
    check_keys(c, "model.covariates",
               {"intercept", "variable_indicators", "group_interactions",
                "variable_groups", "file_columns"});
    m.covariates.intercept = get_or<bool>(c, "intercept", true);
    m.covariates.variable_indicators =
        get_or<bool>(c, "variable_indicators", false);
    m.covariates.group_interactions =
        get_or<bool>(c, "group_interactions", false);
    m.covariates.variable_groups =
        get_or<std::vector<int>>(c, "variable_groups", {});
    m.covariates.file_columns =
        get_or<std::vector<std::string>>(c, "file_columns", {});
  }
  return m;
}

GibbsConfig parse_mcmc_config(const json& j) {
  check_keys(j, "mcmc", {"iterations", "burn_in", "chains", "seed", "threads"});
  GibbsConfig g;
  g.iterations = get_or<int>(j, "iterations", 10000);
  g.burn_in = get_or<int>(j, "burn_in", 1000);
  g.chains = get_or<int>(j, "chains", 3);
  g.seed = get_or<std::uint64_t>(j, "seed", 0);
  g.threads = get_or<int>(j, "threads", 0);
  return g;
}

std::vector<ContrastWeight> parse_contrast(const json& j,
                                           const std::string& name) {
  if (!j.is_array())
    throw ConfigError("config: contrast '" + name + "' must be an array");
  std::vector<ContrastWeight> out;
  for (const auto& e : j) {
    check_keys(e, "contrasts." + name, {"variable", "time", "unit", "weight"});
    ContrastWeight w;
    w.variable = e.at("variable").get<int>() - 1;
    w.time = e.at("time").get<int>() - 1;
    w.unit = e.at("unit").get<std::string>();
    w.weight = e.at("weight").get<double>();
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  check_keys(j, "", {"inputs", "model", "mcmc", "output", "contrasts"});
  RunConfig config;
  if (!j.contains("inputs"))
    throw ConfigError("config: 'inputs' section is required");
  const json& in = j.at("inputs");
  check_keys(in, "inputs",
             {"edge_list", "support", "observations", "covariates"});
  for (const char* key : {"edge_list", "support", "observations"})
    if (!in.contains(key))
      throw ConfigError(std::string("config: inputs.") + key + " is required");
  config.edge_list_path = in.at("edge_list").get<std::string>();
  config.support_path = in.at("support").get<std::string>();
  config.observations_path = in.at("observations").get<std::string>();
  config.covariates_path = get_or<std::string>(in, "covariates", "");

  if (!j.contains("model"))
    throw ConfigError("config: 'model' section is required");
  config.model = parse_model_config(j.at("model"));
  config.mcmc = j.contains("mcmc") ? parse_mcmc_config(j.at("mcmc"))
                                   : GibbsConfig{};
  if (j.contains("output")) {
    check_keys(j.at("output"), "output", {"dir", "basis_dump"});
    config.output_dir = get_or<std::string>(j.at("output"), "dir", "out");
    config.basis_dump = get_or<bool>(j.at("output"), "basis_dump", false);
  }
  if (j.contains("contrasts")) {
    if (!j.at("contrasts").is_object())
      throw ConfigError("config: 'contrasts' must map names to weight lists");
    for (auto it = j.at("contrasts").begin(); it != j.at("contrasts").end();
         ++it)
      config.contrasts[it.key()] = parse_contrast(it.value(), it.key());
  }
  return config;
}

StudyConfig parse_study_config(const nlohmann::json& j) {
  check_keys(j, "",
             {"study", "lattice", "inputs", "shape", "model", "generative",
              "mcmc", "output"});
  if (j.contains("output")) check_keys(j.at("output"), "output", {"dir"});
  StudyConfig config;
  if (j.contains("study")) {
    const json& s = j.at("study");
    check_keys(s, "study",
               {"replicates", "observed_fraction", "noise_variance", "seed",
                "threads"});
    config.replicates = get_or<int>(s, "replicates", 20);
    config.observed_fraction = get_or<double>(s, "observed_fraction", 0.65);
    if (s.contains("noise_variance") && !s.at("noise_variance").is_string())
      config.noise_variance = s.at("noise_variance").get<double>();
    else
      config.noise_variance = -1.0;  // "auto": empirical table variance
    config.seed = get_or<std::uint64_t>(s, "seed", 1);
    config.threads = get_or<int>(s, "threads", 0);
  }
  if (j.contains("lattice")) {
    check_keys(j.at("lattice"), "lattice", {"rows", "cols"});
    config.lattice_rows = get_or<int>(j.at("lattice"), "rows", 10);
    config.lattice_cols = get_or<int>(j.at("lattice"), "cols", 10);
  }
  if (j.contains("inputs")) {
    check_keys(j.at("inputs"), "inputs", {"edge_list"});
    config.edge_list_path =
        get_or<std::string>(j.at("inputs"), "edge_list", "");
  }
  if (j.contains("shape")) {
    check_keys(j.at("shape"), "shape", {"L", "T"});
    config.L = get_or<int>(j.at("shape"), "L", 2);
    config.T = get_or<int>(j.at("shape"), "T", 20);
  }
  if (!j.contains("model"))
    throw ConfigError("config: 'model' section is required");
  config.model = parse_model_config(j.at("model"));
  config.mcmc = j.contains("mcmc") ? parse_mcmc_config(j.at("mcmc"))
                                   : GibbsConfig{};
  if (j.contains("generative")) {
    const json& g = j.at("generative");
    check_keys(g, "generative",
               {"beta", "sigma_k2", "eta_sd", "sigma_xi2",
                "measurement_variance"});
    auto beta = get_or<std::vector<double>>(g, "beta", {});
    config.generative.beta =
        Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                          static_cast<Eigen::Index>(beta.size()));
    if (g.contains("sigma_k2") && !g.at("sigma_k2").is_string())
      config.generative.sigma_k2 = g.at("sigma_k2").get<double>();
    else
      config.generative.sigma_k2 = -1.0;  // "auto": scale from eta_sd
    config.generative.eta_sd = get_or<double>(g, "eta_sd", 0.15);
    config.generative.sigma_xi2 = get_or<double>(g, "sigma_xi2", 0.25);
    config.generative.measurement_variance =
        get_or<double>(g, "measurement_variance", 0.0);
  }
  return config;
}

const char* to_string(Coupling c) {
  return c == Coupling::none ? "none" : "same_unit";
}
const char* to_string(PropagatorMode m) {
  return m == PropagatorMode::reduced ? "reduced" : "paper_literal";
}
const char* to_string(BetaMode m) {
  return m == BetaMode::shared ? "shared" : "per_time";
}
const char* to_string(VarianceMode m) {
  switch (m) {
    case VarianceMode::known: return "known";
    case VarianceMode::reweighted: return "reweighted";
    default: return "constant";
  }
}

nlohmann::json run_config_echo(const RunConfig& config) {
  nlohmann::json j;
  j["inputs"] = {{"edge_list", config.edge_list_path},
                 {"support", config.support_path},
                 {"observations", config.observations_path}};
  if (!config.covariates_path.empty())
    j["inputs"]["covariates"] = config.covariates_path;
  j["model"] = {
      {"r", config.model.r},
      {"coupling", to_string(config.model.coupling)},
      {"propagator", {{"mode", to_string(config.model.propagator_mode)}}},
      {"prior", {{"target", config.model.prior_target}}},
      {"beta",
       {{"mode", to_string(config.model.beta_mode)},
        {"prior_variance", config.model.sigma_beta2}}},
      {"variance",
       {{"mode", to_string(config.model.variance_mode)},
        {"value", config.model.variance_value}}},
      {"covariates",
       {{"intercept", config.model.covariates.intercept},
        {"variable_indicators", config.model.covariates.variable_indicators},
        {"group_interactions", config.model.covariates.group_interactions},
        {"variable_groups", config.model.covariates.variable_groups},
        {"file_columns", config.model.covariates.file_columns}}}};
  j["mcmc"] = {{"iterations", config.mcmc.iterations},
               {"burn_in", config.mcmc.burn_in},
               {"chains", config.mcmc.chains},
               {"seed", config.mcmc.seed},
               {"threads", config.mcmc.threads}};
  j["output"] = {{"dir", config.output_dir},
                 {"basis_dump", config.basis_dump}};
  if (!config.contrasts.empty()) {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [name, weights] : config.contrasts) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& w : weights)
        arr.push_back({{"variable", w.variable + 1},
                       {"time", w.time + 1},
                       {"unit", w.unit},
                       {"weight", w.weight}});
      c[name] = arr;
    }
    j["contrasts"] = c;
  }
  return j;
}

}  // namespace mstm
