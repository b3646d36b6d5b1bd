#include "mstm/artifacts.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "mstm/diagnostics.hpp"
#include "mstm/errors.hpp"
#include "mstm/io.hpp"

namespace fs = std::filesystem;

namespace mstm {

namespace {

std::string chain_dir(const std::string& dir, int chain_id) {
  return dir + "/chain_" + std::to_string(chain_id + 1);
}

void write_eta_csv(const std::string& path, const ChainDraws& chain, int r,
                   int T) {
  std::ostringstream out;
  out << "iteration";
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < r; ++k)
      out << ",eta_t" << t + 1 << "_c" << k + 1;
  out << "\n";
  for (int i = 0; i < chain.kept(); ++i) {
    out << chain.burn_in + i + 1;
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < r; ++k)
        out << "," << format_full(chain.eta[i](k, t));
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_xi_csv(const std::string& path, const ChainDraws& chain, int T) {
  std::ostringstream out;
  out << "iteration";
  for (int t = 0; t < T; ++t)
    for (int i = chain.xi_offsets[t]; i < chain.xi_offsets[t + 1]; ++i)
      out << ",xi_t" << t + 1 << "_i" << i - chain.xi_offsets[t] + 1;
  out << "\n";
  for (int k = 0; k < chain.kept(); ++k) {
    out << chain.burn_in + k + 1;
    for (Eigen::Index i = 0; i < chain.xi[k].size(); ++i)
      out << "," << format_full(chain.xi[k](i));
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_beta_csv(const std::string& path, const ChainDraws& chain, int p,
                    BetaMode mode, int T) {
  std::ostringstream out;
  out << "iteration";
  if (mode == BetaMode::shared) {
    for (int j = 0; j < p; ++j) out << ",beta_" << j + 1;
  } else {
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < p; ++j) out << ",beta_t" << t + 1 << "_" << j + 1;
  }
  out << "\n";
  for (int k = 0; k < chain.kept(); ++k) {
    out << chain.burn_in + k + 1;
    const Eigen::MatrixXd& b = chain.beta[k];
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        out << "," << format_full(b(j, c));
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_variances_csv(const std::string& path, const ChainDraws& chain,
                         int T, bool has_delta) {
  std::ostringstream out;
  out << "iteration,sigma_k2";
  for (int t = 0; t < T; ++t) out << ",sigma_xi2_t" << t + 1;
  if (has_delta) out << ",delta_1,delta_2";
  out << "\n";
  for (int k = 0; k < chain.kept(); ++k) {
    out << chain.burn_in + k + 1 << "," << format_full(chain.sigma_k2[k]);
    for (int t = 0; t < T; ++t)
      out << "," << format_full(chain.sigma_xi2[k](t));
    if (has_delta)
      out << "," << format_full(chain.delta[k][0]) << ","
          << format_full(chain.delta[k][1]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

nlohmann::json fit_metadata(const RunConfig& config, const Model& model,
                            const FitResult& fit) {
  nlohmann::json j;
  j["format_version"] = kFitFormatVersion;
  j["config"] = run_config_echo(config);
  j["seed"] = fit.mcmc.seed;
  j["iterations"] = fit.mcmc.iterations;
  j["burn_in"] = fit.mcmc.burn_in;
  j["chains"] = fit.mcmc.chains;
  j["retained_per_chain"] = fit.mcmc.iterations - fit.mcmc.burn_in;
  j["L"] = model.support.L;
  j["T"] = model.support.T;
  j["p"] = model.p;
  j["r_config"] = model.config.r;
  j["r_effective"] = model.r_effective;
  j["basis_cache_hits"] = model.basis_cache_hits;
  j["covariate_columns"] = model.covariate_names;

  std::vector<int> n_cells, n_obs;
  for (int t = 0; t < model.support.T; ++t) {
    n_cells.push_back(model.support.N(t));
    n_obs.push_back(model.support.n_obs(t));
  }
  j["prediction_cells_per_t"] = n_cells;
  j["observed_cells_per_t"] = n_obs;

  std::vector<bool> lifted(model.prior.lifted_flags.begin(),
                           model.prior.lifted_flags.end());
  std::vector<bool> floored(model.prior.floored_flags.begin(),
                            model.prior.floored_flags.end());
  j["w_star_lifted"] = lifted;
  j["k_star_floored"] = floored;

  // standing departures from the written sampler recipe, plus anything the
  // assembly/sampler flagged for this run
  std::vector<std::string> deviations = {
      "t=1 treats N(0, sigma_K^2 K*_1) as the prior and applies a measurement "
      "update with the first observations",
      "backward-sampler gain uses the transition matrix into t+1",
      "sigma_xi,t^2 conditional uses n_t in its shape"};
  for (const auto& n : fit.notes) deviations.push_back(n);
  j["deviations"] = deviations;

  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : fit.chains)
    chains.push_back({{"chain", c.chain_id + 1}, {"seed", c.seed}});
  j["chain_seeds"] = chains;
  return j;
}

std::vector<std::vector<double>> column_as_chains(
    const FitResult& fit, const std::function<double(const ChainDraws&, int)>& get) {
  std::vector<std::vector<double>> out;
  for (const auto& c : fit.chains) {
    std::vector<double> series(static_cast<std::size_t>(c.kept()));
    for (int k = 0; k < c.kept(); ++k) series[static_cast<std::size_t>(k)] = get(c, k);
    out.push_back(std::move(series));
  }
  return out;
}

nlohmann::json scalar_diagnostics(const std::vector<std::vector<double>>& chains) {
  nlohmann::json j;
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  double mean = 0.0;
  for (double x : pooled) mean += x;
  mean /= static_cast<double>(pooled.size());
  double sd = 0.0;
  for (double x : pooled) sd += (x - mean) * (x - mean);
  sd = pooled.size() > 1 ? std::sqrt(sd / (static_cast<double>(pooled.size()) - 1.0)) : 0.0;
  j["posterior_mean"] = mean;
  j["posterior_sd"] = sd;
  if (chains.size() >= 2 && chains[0].size() >= 10) {
    GelmanRubin gr = gelman_rubin(chains);
    j["rhat"] = gr.rhat;
    j["degenerate"] = gr.degenerate;
  }
  std::vector<double> se;
  for (const auto& c : chains)
    if (c.size() >= 100) se.push_back(batch_means_se(c));
  if (!se.empty()) j["batch_se"] = se;
  return j;
}

}  // namespace

nlohmann::json diagnostics_json(const FitResult& fit) {
  nlohmann::json params;
  const ChainDraws& c0 = fit.chains.front();
  const int T = static_cast<int>(c0.sigma_xi2.front().size());
  const int p = static_cast<int>(c0.beta.front().rows());
  const int bcols = static_cast<int>(c0.beta.front().cols());

  params["sigma_k2"] = scalar_diagnostics(column_as_chains(
      fit, [](const ChainDraws& c, int k) { return c.sigma_k2[k]; }));
  for (int t = 0; t < T; ++t)
    params["sigma_xi2_t" + std::to_string(t + 1)] =
        scalar_diagnostics(column_as_chains(
            fit, [t](const ChainDraws& c, int k) { return c.sigma_xi2[k](t); }));
  for (int col = 0; col < bcols; ++col)
    for (int j = 0; j < p; ++j) {
      std::string name =
          bcols == 1 ? "beta_" + std::to_string(j + 1)
                     : "beta_t" + std::to_string(col + 1) + "_" +
                           std::to_string(j + 1);
      params[name] = scalar_diagnostics(column_as_chains(
          fit, [j, col](const ChainDraws& c, int k) { return c.beta[k](j, col); }));
    }
  if (!c0.delta.empty())
    for (int d = 0; d < 2; ++d)
      params["delta_" + std::to_string(d + 1)] =
          scalar_diagnostics(column_as_chains(
              fit, [d](const ChainDraws& c, int k) { return c.delta[k][d]; }));

  nlohmann::json out;
  out["chains"] = static_cast<int>(fit.chains.size());
  out["retained_per_chain"] = c0.kept();
  out["parameters"] = params;
  return out;
}

void write_fit_artifacts(const std::string& dir, const RunConfig& config,
                         const Model& model, const FitResult& fit) {
  fs::create_directories(dir);
  const int T = model.support.T;
  const bool has_delta =
      fit.mcmc.variance_mode == VarianceMode::reweighted;
  for (const auto& chain : fit.chains) {
    const std::string cdir = chain_dir(dir, chain.chain_id);
    fs::create_directories(cdir);
    write_eta_csv(cdir + "/eta.csv", chain, model.r_effective, T);
    write_xi_csv(cdir + "/xi.csv", chain, T);
    write_beta_csv(cdir + "/beta.csv", chain, model.p, fit.mcmc.beta_mode, T);
    write_variances_csv(cdir + "/variances.csv", chain, T, has_delta);
  }
  write_json_file(dir + "/run_metadata.json",
                  fit_metadata(config, model, fit));
  write_json_file(dir + "/diagnostics.json", diagnostics_json(fit));
  if (config.basis_dump)
    write_text_file(dir + "/basis.csv", basis_dump_csv(model));
}

std::string basis_dump_csv(const Model& model) {
  std::ostringstream out;
  out << "time,cell_index,component,value\n";
  for (int t = 0; t < model.support.T; ++t)
    for (Eigen::Index i = 0; i < model.basis[t].S.rows(); ++i)
      for (Eigen::Index k = 0; k < model.basis[t].S.cols(); ++k)
        out << t + 1 << "," << i + 1 << "," << k + 1 << ","
            << format_full(model.basis[t].S(i, k)) << "\n";
  return out.str();
}

namespace {

Csv read_chain_csv(const std::string& path, int expected_cols, int kept) {
  Csv csv = read_csv_file(path);
  if (static_cast<int>(csv.header.size()) != expected_cols + 1)
    throw ConfigError("fit artifacts: " + path + " has " +
                      std::to_string(csv.header.size()) +
                      " columns, expected " + std::to_string(expected_cols + 1),
                      path);
  if (static_cast<int>(csv.rows.size()) != kept)
    throw ConfigError("fit artifacts: " + path + " has " +
                      std::to_string(csv.rows.size()) + " draws, expected " +
                      std::to_string(kept), path);
  return csv;
}

}  // namespace

LoadedFit load_fit_dir(const std::string& dir) {
  LoadedFit out;
  out.metadata = load_json_file(dir + "/run_metadata.json");
  if (!out.metadata.contains("format_version") ||
      out.metadata.at("format_version").get<int>() != kFitFormatVersion)
    throw ConfigError("fit artifacts: incompatible fit version in " + dir);

  out.config = parse_run_config(out.metadata.at("config"));

  // rebuild the model from the recorded inputs
  std::ifstream edges(out.config.edge_list_path);
  if (!edges)
    throw ConfigError("cannot open file: " + out.config.edge_list_path,
                      out.config.edge_list_path);
  AdjacencyGraph graph = AdjacencyGraph::from_edge_list(edges);
  std::ifstream roster(out.config.support_path);
  if (!roster)
    throw ConfigError("cannot open file: " + out.config.support_path,
                      out.config.support_path);
  MultivariateSupport support =
      MultivariateSupport::from_roster_csv(roster, graph);
  CovariateTable covariates;
  if (!out.config.covariates_path.empty()) {
    std::ifstream cov(out.config.covariates_path);
    if (!cov)
      throw ConfigError("cannot open file: " + out.config.covariates_path,
                        out.config.covariates_path);
    covariates = CovariateTable::from_csv(cov, graph);
  }
  std::ifstream obs(out.config.observations_path);
  if (!obs)
    throw ConfigError("cannot open file: " + out.config.observations_path,
                      out.config.observations_path);
  ObservationTable observations = ObservationTable::from_csv(obs);
  out.model = assemble(graph, support, observations, covariates,
                       out.config.model);

  const int chains = out.metadata.at("chains").get<int>();
  const int iterations = out.metadata.at("iterations").get<int>();
  const int burn_in = out.metadata.at("burn_in").get<int>();
  const int kept = iterations - burn_in;
  const int T = out.model.support.T;
  const int r = out.model.r_effective;
  const int p = out.model.p;
  const bool per_time = out.config.model.beta_mode == BetaMode::per_time;
  const bool has_delta =
      out.config.model.variance_mode == VarianceMode::reweighted;

  out.fit.mcmc = out.config.mcmc;
  out.fit.mcmc.beta_mode = out.config.model.beta_mode;
  out.fit.mcmc.variance_mode = out.config.model.variance_mode;
  for (const auto& n : out.metadata.at("deviations"))
    out.fit.notes.push_back(n.get<std::string>());

  std::vector<int> offsets(static_cast<std::size_t>(T) + 1, 0);
  for (int t = 0; t < T; ++t)
    offsets[t + 1] = offsets[t] + out.model.support.n_obs(t);

  for (int c = 0; c < chains; ++c) {
    ChainDraws chain;
    chain.chain_id = c;
    chain.seed = derive_seed(out.config.mcmc.seed, static_cast<std::uint64_t>(c));
    chain.iterations = iterations;
    chain.burn_in = burn_in;
    chain.xi_offsets = offsets;
    const std::string cdir = chain_dir(dir, c);

    Csv eta = read_chain_csv(cdir + "/eta.csv", T * r, kept);
    Csv xi = read_chain_csv(cdir + "/xi.csv", offsets[T], kept);
    Csv beta = read_chain_csv(cdir + "/beta.csv", per_time ? T * p : p, kept);
    Csv var = read_chain_csv(cdir + "/variances.csv",
                             1 + T + (has_delta ? 2 : 0), kept);

    for (int k = 0; k < kept; ++k) {
      Eigen::MatrixXd em(r, T);
      for (int t = 0; t < T; ++t)
        for (int j = 0; j < r; ++j)
          em(j, t) = eta.double_at(k, 1 + t * r + j);
      chain.eta.push_back(std::move(em));

      Eigen::VectorXd xv(offsets[T]);
      for (int i = 0; i < offsets[T]; ++i) xv(i) = xi.double_at(k, 1 + i);
      chain.xi.push_back(std::move(xv));

      Eigen::MatrixXd bm(p, per_time ? T : 1);
      for (Eigen::Index col = 0; col < bm.cols(); ++col)
        for (int j = 0; j < p; ++j)
          bm(j, col) = beta.double_at(k, 1 + static_cast<int>(col) * p + j);
      chain.beta.push_back(std::move(bm));

      chain.sigma_k2.push_back(var.double_at(k, 1));
      Eigen::VectorXd sx(T);
      for (int t = 0; t < T; ++t) sx(t) = var.double_at(k, 2 + t);
      chain.sigma_xi2.push_back(std::move(sx));
      if (has_delta)
        chain.delta.push_back(
            {var.double_at(k, 2 + T), var.double_at(k, 3 + T)});
    }
    out.fit.chains.push_back(std::move(chain));
  }
  return out;
}

}  // namespace mstm
