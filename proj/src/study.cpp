#include "mstm/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include "mstm/diagnostics.hpp"
#include "mstm/errors.hpp"
#include "mstm/ffbs.hpp"
#include "mstm/io.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

std::string LatentRecord::to_csv() const {
  std::string out = "block,time,index,value\n";
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    out += "beta,," + std::to_string(j + 1) + "," + format_full(beta(j)) + "\n";
  out += "sigma_k2,,," + format_full(sigma_k2_used) + "\n";
  for (Eigen::Index t = 0; t < eta.cols(); ++t)
    for (Eigen::Index k = 0; k < eta.rows(); ++k)
      out += "eta," + std::to_string(t + 1) + "," + std::to_string(k + 1) +
             "," + format_full(eta(k, t)) + "\n";
  for (std::size_t t = 0; t < xi.size(); ++t)
    for (Eigen::Index i = 0; i < xi[t].size(); ++i)
      out += "xi," + std::to_string(t + 1) + "," + std::to_string(i + 1) +
             "," + format_full(xi[t](i)) + "\n";
  return out;
}

SimulationResult simulate(const Model& model, const GenerativeConfig& gen,
                          RngStream& rng) {
  const int T = model.support.T;
  const int r = model.r_effective;
  if (gen.beta.size() != model.p)
    throw ConfigError("simulate: generative beta has length " +
                      std::to_string(gen.beta.size()) + ", design has p=" +
                      std::to_string(model.p));
  if (gen.sigma_xi2 < 0.0 || gen.measurement_variance < 0.0)
    throw ConfigError("simulate: negative generative variance");

  double sigma_k2 = gen.sigma_k2;
  if (sigma_k2 < 0.0) {
    const double max_diag = model.prior.k_star[0].diagonal().maxCoeff();
    sigma_k2 = gen.eta_sd * gen.eta_sd / max_diag;
  }

  SimulationResult out;
  out.latents.beta = gen.beta;
  out.latents.sigma_k2_used = sigma_k2;
  out.latents.eta.resize(r, T);
  out.latents.xi.resize(T);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(r);
  out.latents.eta.col(0) =
      mvn_draw(zero, sigma_k2 * model.prior.k_star[0], rng);
  for (int t = 1; t < T; ++t)
    out.latents.eta.col(t) =
        model.M[t] * out.latents.eta.col(t - 1) +
        mvn_draw(zero, sigma_k2 * model.prior.w_star[t], rng);

  const double xi_sd = std::sqrt(gen.sigma_xi2);
  const double noise_sd = std::sqrt(gen.measurement_variance);
  for (int t = 0; t < T; ++t) {
    const int N = model.support.N(t);
    Eigen::VectorXd mu = model.X_full[t] * gen.beta;
    Eigen::VectorXd sb = model.basis[t].S * out.latents.eta.col(t);
    out.latents.xi[t].resize(N);
    for (int i = 0; i < N; ++i) {
      const double xi = xi_sd > 0.0 ? xi_sd * rng.normal() : 0.0;
      out.latents.xi[t](i) = xi;
      double value = mu(i) + sb(i) + xi;
      if (noise_sd > 0.0) value += noise_sd * rng.normal();
      const Cell& c = model.support.prediction_cells[t][static_cast<std::size_t>(i)];
      ObservationRow row;
      row.variable = c.variable;
      row.time = t;
      row.unit = model.graph.units()[c.unit].id;
      row.value = value;
      if (gen.measurement_variance > 0.0) {
        row.variance = gen.measurement_variance;
        row.has_variance = true;
      }
      out.truth.rows.push_back(std::move(row));
    }
  }
  return out;
}

void perturb(ObservationTable& table, double sigma_eps2, RngStream& rng) {
  if (sigma_eps2 < 0.0) throw ConfigError("perturb: sigma_eps2 must be >= 0");
  if (sigma_eps2 == 0.0) return;
  const double sd = std::sqrt(sigma_eps2);
  for (auto& row : table.rows) row.value += sd * rng.normal();
}

void mask_observed(MultivariateSupport& support, double fraction,
                   RngStream& rng) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("mask: observed fraction must be in (0, 1]");
  for (int t = 0; t < support.T; ++t) {
    std::vector<Cell> observed;
    for (int l = 0; l < support.L; ++l) {
      std::vector<Cell> of_var;
      for (const Cell& c : support.prediction_cells[t])
        if (c.variable == l) of_var.push_back(c);
      const int count = static_cast<int>(of_var.size());
      if (count == 0) continue;
      const int k = static_cast<int>(std::lround(fraction * count));
      // partial Fisher-Yates: first k entries are a uniform subset
      for (int i = 0; i < k; ++i)
        std::swap(of_var[i], of_var[i + rng.uniform_int(count - i)]);
      observed.insert(observed.end(), of_var.begin(), of_var.begin() + k);
    }
    std::sort(observed.begin(), observed.end());
    support.observed_cells[t] = std::move(observed);
  }
}

void apply_mask(Model& model, const MultivariateSupport& masked) {
  if (masked.T != model.support.T)
    throw MstmError("apply_mask: support shape changed");
  for (int t = 0; t < masked.T; ++t)
    if (!(masked.prediction_cells[t] == model.support.prediction_cells[t]))
      throw MstmError("apply_mask: prediction cells changed");
  model.support = masked;
  for (int t = 0; t < masked.T; ++t) {
    model.obs_rows[t] = masked.observed_row_indices(t);
    model.S_obs[t] = basis_rows_for(model.basis[t], model.obs_rows[t]);
    Eigen::MatrixXd Xo(static_cast<Eigen::Index>(model.obs_rows[t].size()),
                       model.p);
    for (std::size_t i = 0; i < model.obs_rows[t].size(); ++i)
      Xo.row(static_cast<Eigen::Index>(i)) =
          model.X_full[t].row(model.obs_rows[t][i]);
    model.X_obs[t] = std::move(Xo);
  }
  model.bound = false;
  model.z.clear();
  model.v_base.clear();
  model.group.clear();
}

AdjacencyGraph study_graph(const StudyConfig& config) {
  if (!config.edge_list_path.empty()) {
    std::ifstream in(config.edge_list_path);
    if (!in)
      throw ConfigError("cannot open edge list: " + config.edge_list_path,
                        config.edge_list_path);
    return AdjacencyGraph::from_edge_list(in);
  }
  return lattice_graph(config.lattice_rows, config.lattice_cols);
}

Model study_structure(const StudyConfig& config) {
  AdjacencyGraph graph = study_graph(config);
  MultivariateSupport support =
      MultivariateSupport::full(graph, config.L, config.T);
  return assemble_structure(graph, support, CovariateTable{}, config.model);
}

namespace {

double table_variance(const ObservationTable& table) {
  double mean = 0.0;
  for (const auto& r : table.rows) mean += r.value;
  mean /= static_cast<double>(table.rows.size());
  double s2 = 0.0;
  for (const auto& r : table.rows) s2 += (r.value - mean) * (r.value - mean);
  return s2 / static_cast<double>(table.rows.size() - 1);
}

ReplicateMetrics run_replicate(const Model& base, const StudyConfig& config,
                               int rep) {
  ReplicateMetrics m;
  m.replicate = rep;
  try {
    RngStream rng(derive_seed(config.seed, 0x5245504cULL, rep));

    SimulationResult sim = simulate(base, config.generative, rng);
    const double sigma_eps2 = config.noise_variance > 0.0
                                  ? config.noise_variance
                                  : table_variance(sim.truth);
    m.sigma_eps2 = sigma_eps2;

    ObservationTable perturbed = sim.truth;
    perturb(perturbed, sigma_eps2, rng);

    MultivariateSupport masked = base.support;
    mask_observed(masked, config.observed_fraction, rng);

    Model model = base;
    apply_mask(model, masked);

    // fit sees the perturbed values at observed cells, with the perturbation
    // variance as the known measurement variance
    ObservationTable fit_table;
    std::vector<std::vector<bool>> is_obs(masked.T);
    for (int t = 0; t < masked.T; ++t) {
      is_obs[t].assign(static_cast<std::size_t>(masked.N(t)), false);
      for (int row : masked.observed_row_indices(t))
        is_obs[t][static_cast<std::size_t>(row)] = true;
    }
    std::size_t k = 0;
    for (int t = 0; t < masked.T; ++t) {
      for (int i = 0; i < masked.N(t); ++i, ++k) {
        if (!is_obs[t][static_cast<std::size_t>(i)]) continue;
        ObservationRow row = perturbed.rows[k];
        row.variance = sigma_eps2;
        row.has_variance = true;
        fit_table.rows.push_back(std::move(row));
      }
    }
    bind_observations(model, fit_table);

    GibbsConfig mcmc = config.mcmc;
    mcmc.seed = derive_seed(config.seed, 0x46495453ULL, rep);
    FitResult result = fit(model, mcmc);
    PredictionSet pred = predict(model, result);

    // score against the unperturbed truth, split observed / missing
    std::vector<double> pred_obs, truth_obs, pred_miss, truth_miss;
    k = 0;
    std::size_t cell_idx = 0;
    for (int t = 0; t < masked.T; ++t) {
      for (int i = 0; i < masked.N(t); ++i, ++k, ++cell_idx) {
        const double truth = sim.truth.rows[k].value;
        const double fitted = pred.cells[cell_idx].post_mean;
        if (is_obs[t][static_cast<std::size_t>(i)]) {
          pred_obs.push_back(fitted);
          truth_obs.push_back(truth);
        } else {
          pred_miss.push_back(fitted);
          truth_miss.push_back(truth);
        }
      }
    }
    m.mprd_observed = mprd(pred_obs, truth_obs);
    m.stspe_observed = stspe(pred_obs, truth_obs, sigma_eps2);
    if (!pred_miss.empty()) {
      m.mprd_missing = mprd(pred_miss, truth_miss);
      m.stspe_missing = stspe(pred_miss, truth_miss, sigma_eps2);
    }
  } catch (const std::exception& e) {
    m.failed = true;
    m.error = e.what();
  }
  return m;
}

}  // namespace

std::string StudyReport::replicates_csv() const {
  std::string out =
      "replicate,failed,mprd_observed,mprd_missing,stspe_observed,"
      "stspe_missing,sigma_eps2\n";
  for (const auto& m : replicates) {
    out += std::to_string(m.replicate + 1) + "," + (m.failed ? "1" : "0") +
           "," + format_full(m.mprd_observed) + "," +
           format_full(m.mprd_missing) + "," + format_full(m.stspe_observed) +
           "," + format_full(m.stspe_missing) + "," +
           format_full(m.sigma_eps2) + "\n";
  }
  return out;
}

StudyReport run_study(const StudyConfig& config) {
  if (config.replicates < 1)
    throw ConfigError("study: replicates must be >= 1");
  Model base = study_structure(config);

  StudyReport report;
  report.replicates.resize(static_cast<std::size_t>(config.replicates));

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, config.replicates));

  for (int start = 0; start < config.replicates; start += threads) {
    const int end = std::min(start + threads, config.replicates);
    std::vector<std::future<ReplicateMetrics>> futures;
    for (int rep = start; rep < end; ++rep)
      futures.push_back(std::async(std::launch::async, [&base, &config, rep] {
        return run_replicate(base, config, rep);
      }));
    for (int rep = start; rep < end; ++rep)
      report.replicates[static_cast<std::size_t>(rep)] =
          futures[static_cast<std::size_t>(rep - start)].get();
  }

  std::vector<double> mo, mm, so, sm;
  for (const auto& m : report.replicates) {
    if (m.failed) {
      ++report.failures;
      continue;
    }
    mo.push_back(m.mprd_observed);
    mm.push_back(m.mprd_missing);
    so.push_back(m.stspe_observed);
    sm.push_back(m.stspe_missing);
  }
  if (!mo.empty()) {
    auto iqr = [](const std::vector<double>& x) {
      return quantile(x, 0.75) - quantile(x, 0.25);
    };
    report.mprd_observed_median = median(mo);
    report.mprd_observed_iqr = iqr(mo);
    report.mprd_missing_median = median(mm);
    report.mprd_missing_iqr = iqr(mm);
    report.stspe_observed_median = median(so);
    report.stspe_observed_iqr = iqr(so);
    report.stspe_missing_median = median(sm);
    report.stspe_missing_iqr = iqr(sm);
  }
  return report;
}

}  // namespace mstm
