#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mstm/model.hpp"
#include "mstm/rng.hpp"

namespace mstm {

// Generative settings for the synthetic-data simulator. The latent state is
// drawn from the model's own VAR(1) with the assembled shapes; sigma_k2 < 0
// selects the automatic scale that gives eta components a marginal standard
// deviation of about eta_sd (the prior shape fixes only the relative
// spectrum, so the scale is a free generative choice).
struct GenerativeConfig {
  Eigen::VectorXd beta;               // length p
  double sigma_k2 = -1.0;             // < 0: auto from eta_sd
  double eta_sd = 0.15;
  double sigma_xi2 = 0.25;
  double measurement_variance = 0.0;  // white noise added to the truth table
};

struct LatentRecord {
  Eigen::MatrixXd eta;               // r x T
  std::vector<Eigen::VectorXd> xi;   // per t, full prediction support
  Eigen::VectorXd beta;
  double sigma_k2_used = 0.0;

  std::string to_csv() const;
};

struct SimulationResult {
  ObservationTable truth;  // one row per prediction cell, ordered (t, row)
  LatentRecord latents;
};

// Draws one realization of the generative model over the full prediction
// support of an assembled structure.
SimulationResult simulate(const Model& model, const GenerativeConfig& gen,
                          RngStream& rng);

// Adds i.i.d. N(0, sigma_eps2) to every value (exact identity when 0).
void perturb(ObservationTable& table, double sigma_eps2, RngStream& rng);

// Reassigns the observed subset: per (variable, t), a uniform random subset
// of round(fraction * N) prediction cells is marked observed.
void mask_observed(MultivariateSupport& support, double fraction,
                   RngStream& rng);

// Replaces the observed subset of an assembled structure (prediction cells
// must be unchanged) and drops any bound observations.
void apply_mask(Model& model, const MultivariateSupport& masked);

struct StudyConfig {
  int replicates = 20;
  double observed_fraction = 0.65;
  double noise_variance = -1.0;  // <= 0: empirical table variance (SNR 1)
  int lattice_rows = 10;
  int lattice_cols = 10;
  std::string edge_list_path;  // optional alternative to the lattice
  int L = 2;
  int T = 20;
  ModelConfig model;
  GibbsConfig mcmc;  // per-replicate seeds are derived from `seed`
  GenerativeConfig generative;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware default
};

struct ReplicateMetrics {
  int replicate = 0;
  bool failed = false;
  std::string error;
  double mprd_observed = 0.0;
  double mprd_missing = 0.0;
  double stspe_observed = 0.0;
  double stspe_missing = 0.0;
  double sigma_eps2 = 0.0;
};

struct StudyReport {
  std::vector<ReplicateMetrics> replicates;
  int failures = 0;
  // summaries over successful replicates
  double mprd_observed_median = 0.0, mprd_observed_iqr = 0.0;
  double mprd_missing_median = 0.0, mprd_missing_iqr = 0.0;
  double stspe_observed_median = 0.0, stspe_observed_iqr = 0.0;
  double stspe_missing_median = 0.0, stspe_missing_iqr = 0.0;

  std::string replicates_csv() const;
};

// simulate -> perturb -> mask -> fit -> predict -> score, replicated.
// Replicates run concurrently with derived seeds; failures are recorded and
// the study continues.
StudyReport run_study(const StudyConfig& config);

// Graph named by the study config (lattice or edge-list file).
AdjacencyGraph study_graph(const StudyConfig& config);

// Assembled structure over the full (everything observed) support.
Model study_structure(const StudyConfig& config);

}  // namespace mstm
