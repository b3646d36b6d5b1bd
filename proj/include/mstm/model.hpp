#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mstm/gibbs.hpp"
#include "mstm/graph.hpp"
#include "mstm/moran.hpp"
#include "mstm/prior.hpp"
#include "mstm/propagator.hpp"

namespace mstm {

// One data row: (variable, time, unit) keyed measurement with an optional
// survey variance. variable/time are 1-based in files, 0-based here.
struct ObservationRow {
  int variable = 0;
  int time = 0;
  std::string unit;
  double value = 0.0;
  double variance = 0.0;
  bool has_variance = false;
};

struct ObservationTable {
  std::vector<ObservationRow> rows;

  // Columns: variable,time,unit,value,variance (variance may be empty).
  static ObservationTable from_csv(std::istream& in);
  std::string to_csv() const;
};

// Cell-keyed extra covariate columns loaded from file.
struct CovariateTable {
  std::vector<std::string> names;
  std::map<std::tuple<int, int, int>, Eigen::VectorXd> values;  // (t, var, unit)

  static CovariateTable from_csv(std::istream& in, const AdjacencyGraph& graph);
  bool empty() const { return names.empty(); }
};

// Declarative design generator: intercept, variable indicators (baseline
// variable 1 dropped), group-interaction indicators, and named file columns.
struct CovariateSpec {
  bool intercept = true;
  bool variable_indicators = false;
  bool group_interactions = false;       // requires variable_groups
  std::vector<int> variable_groups;      // per variable, values 1 or 2
  std::vector<std::string> file_columns;

  int dimension(int L) const;
  std::vector<std::string> column_names(int L) const;
};

struct ModelConfig {
  int r = 1;
  Coupling coupling = Coupling::same_unit;
  PropagatorMode propagator_mode = PropagatorMode::reduced;
  std::string prior_target = "car";  // "car" or "file:<path>"
  BetaMode beta_mode = BetaMode::shared;
  VarianceMode variance_mode = VarianceMode::known;
  double variance_value = 1.0;  // constant mode only
  double sigma_beta2 = 1e15;
  CovariateSpec covariates;
};

// Assembled structure: per-time designs, bases, propagators and prior
// shapes. Immutable after construction; observations are bound separately
// so masks/replicates can reuse the expensive spectral work.
struct Model {
  MultivariateSupport support;
  AdjacencyGraph graph;
  ModelConfig config;
  int p = 0;
  int r_effective = 0;
  std::vector<std::string> covariate_names;

  std::vector<Eigen::MatrixXd> X_full;  // per t, N_t x p
  std::vector<MiBasis> basis;           // per t
  std::vector<Eigen::MatrixXd> M;       // per t, index 0 unused
  PriorShapes prior;

  std::vector<std::vector<int>> obs_rows;  // per t, rows of observed cells
  std::vector<Eigen::MatrixXd> X_obs;      // per t, n_t x p
  std::vector<Eigen::MatrixXd> S_obs;      // per t, n_t x r

  int basis_cache_hits = 0;
  std::vector<std::string> notes;

  // observation binding (fit inputs)
  bool bound = false;
  std::vector<Eigen::VectorXd> z;       // per t, length n_t
  std::vector<Eigen::VectorXd> v_base;  // per t
  std::vector<Eigen::VectorXi> group;   // per t (reweighted mode)

  GibbsModelView view() const;
};

Model assemble_structure(const AdjacencyGraph& graph,
                         const MultivariateSupport& support,
                         const CovariateTable& covariates,
                         const ModelConfig& config);

void bind_observations(Model& model, const ObservationTable& observations);

Model assemble(const AdjacencyGraph& graph, const MultivariateSupport& support,
               const ObservationTable& observations,
               const CovariateTable& covariates, const ModelConfig& config);

struct FitResult {
  std::vector<ChainDraws> chains;
  GibbsConfig mcmc;
  std::vector<std::string> notes;  // model + sampler notes

  int total_kept() const;
};

FitResult fit(const Model& model, GibbsConfig mcmc);

// Posterior prediction over the full prediction support. Cells without an
// observation get a fresh prior draw of xi per retained iteration, so the
// fine-scale term contributes to their MSPE instead of being zeroed out.
struct PredictionCell {
  int variable = 0;  // 0-based
  int time = 0;      // 0-based
  std::string unit;
  double post_mean = 0.0;
  double root_mspe = 0.0;
  double mu_mean = 0.0;
  double basis_mean = 0.0;  // posterior mean of S'eta
  double xi_mean = 0.0;     // posterior mean of xi
};

struct PredictionSet {
  std::vector<PredictionCell> cells;
  std::string to_csv(const Model& model) const;
};

PredictionSet predict(const Model& model, const FitResult& fit);

// Posterior summary of a linear functional of the fixed-effect surface,
// sum w * x'beta over the referenced cells.
struct ContrastWeight {
  int variable = 0;  // 0-based
  int time = 0;      // 0-based
  std::string unit;
  double weight = 0.0;
};

struct ContrastResult {
  double mean = 0.0;
  double variance = 0.0;
  double lower95 = 0.0;
  double upper95 = 0.0;
};

ContrastResult contrast(const Model& model, const FitResult& fit,
                        const std::vector<ContrastWeight>& weights);

}  // namespace mstm
