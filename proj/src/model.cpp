#include "mstm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "mstm/errors.hpp"
#include "mstm/ffbs.hpp"
#include "mstm/io.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

ObservationTable ObservationTable::from_csv(std::istream& in) {
  Csv csv = read_csv(in);
  csv.require_columns({"variable", "time", "unit", "value"}, "observations");
  const int vi = csv.column("variable");
  const int ti = csv.column("time");
  const int ui = csv.column("unit");
  const int zi = csv.column("value");
  const int si = csv.column("variance");

  ObservationTable table;
  table.rows.reserve(csv.rows.size());
  for (std::size_t k = 0; k < csv.rows.size(); ++k) {
    ObservationRow row;
    row.variable = csv.int_at(k, vi) - 1;
    row.time = csv.int_at(k, ti) - 1;
    row.unit = csv.rows[k][static_cast<std::size_t>(ui)];
    row.value = csv.double_at(k, zi);
    if (si >= 0 && !csv.rows[k][static_cast<std::size_t>(si)].empty()) {
      row.variance = csv.double_at(k, si);
      row.has_variance = true;
      if (row.variance <= 0.0)
        throw ConfigError("observations: variance must be > 0 (row " +
                          std::to_string(k + 2) + ")");
    }
    if (row.variable < 0 || row.time < 0)
      throw ConfigError("observations: variable and time must be >= 1 (row " +
                        std::to_string(k + 2) + ")");
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string ObservationTable::to_csv() const {
  std::string out = "variable,time,unit,value,variance\n";
  for (const auto& r : rows) {
    out += std::to_string(r.variable + 1) + "," + std::to_string(r.time + 1) +
           "," + r.unit + "," + format_full(r.value) + ",";
    if (r.has_variance) out += format_full(r.variance);
    out += "\n";
  }
  return out;
}

CovariateTable CovariateTable::from_csv(std::istream& in,
                                        const AdjacencyGraph& graph) {
  Csv csv = read_csv(in);
  csv.require_columns({"variable", "time", "unit"}, "covariates");
  const int vi = csv.column("variable");
  const int ti = csv.column("time");
  const int ui = csv.column("unit");

  CovariateTable table;
  std::vector<int> value_cols;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (static_cast<int>(c) == vi || static_cast<int>(c) == ti ||
        static_cast<int>(c) == ui)
      continue;
    table.names.push_back(csv.header[c]);
    value_cols.push_back(static_cast<int>(c));
  }
  for (std::size_t k = 0; k < csv.rows.size(); ++k) {
    int variable = csv.int_at(k, vi) - 1;
    int time = csv.int_at(k, ti) - 1;
    int unit = graph.unit_index(csv.rows[k][static_cast<std::size_t>(ui)]);
    Eigen::VectorXd vals(static_cast<Eigen::Index>(value_cols.size()));
    for (std::size_t c = 0; c < value_cols.size(); ++c)
      vals(static_cast<Eigen::Index>(c)) = csv.double_at(k, value_cols[c]);
    auto key = std::make_tuple(time, variable, unit);
    if (table.values.count(key))
      throw ConfigError("covariates: duplicate cell (row " +
                        std::to_string(k + 2) + ")");
    table.values.emplace(key, std::move(vals));
  }
  return table;
}

int CovariateSpec::dimension(int L) const {
  int p = intercept ? 1 : 0;
  if (variable_indicators) p += L - 1;
  if (group_interactions) p += L - 1;
  p += static_cast<int>(file_columns.size());
  return p;
}

std::vector<std::string> CovariateSpec::column_names(int L) const {
  std::vector<std::string> names;
  if (intercept) names.push_back("intercept");
  if (variable_indicators)
    for (int l = 2; l <= L; ++l)
      names.push_back("var_" + std::to_string(l));
  if (group_interactions)
    for (int l = 2; l <= L; ++l)
      names.push_back("group1_x_var_" + std::to_string(l));
  for (const auto& c : file_columns) names.push_back(c);
  return names;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t matrix_digest(const Eigen::MatrixXd& m,
                            std::uint64_t h = kFnvOffset) {
  Eigen::Index dims[2] = {m.rows(), m.cols()};
  h = fnv1a(dims, sizeof(dims), h);
  return fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

int design_rank(const Eigen::MatrixXd& X) {
  if (X.cols() == 0) return 0;
  SymmetricEigen gram = sym_eig_sorted(X.transpose() * X);
  const double lmax = gram.values(0);
  if (lmax <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < gram.values.size(); ++i)
    if (gram.values(i) > 1e-10 * lmax) ++rank;
  return rank;
}

Eigen::VectorXd cell_covariates(const CovariateSpec& spec, int L,
                                const CovariateTable& table, int t,
                                const Cell& cell) {
  Eigen::VectorXd x(spec.dimension(L));
  Eigen::Index k = 0;
  if (spec.intercept) x(k++) = 1.0;
  if (spec.variable_indicators)
    for (int l = 1; l < L; ++l) x(k++) = cell.variable == l ? 1.0 : 0.0;
  if (spec.group_interactions) {
    const bool g1 = spec.variable_groups.at(cell.variable) == 1;
    for (int l = 1; l < L; ++l)
      x(k++) = (g1 && cell.variable == l) ? 1.0 : 0.0;
  }
  if (!spec.file_columns.empty()) {
    auto it = table.values.find(std::make_tuple(t, cell.variable, cell.unit));
    if (it == table.values.end())
      throw ConfigError("covariates: no row for cell (variable " +
                        std::to_string(cell.variable + 1) + ", t " +
                        std::to_string(t + 1) + ", unit index " +
                        std::to_string(cell.unit) + ")");
    for (const auto& name : spec.file_columns) {
      auto pos = std::find(table.names.begin(), table.names.end(), name);
      if (pos == table.names.end())
        throw ConfigError("covariates: column '" + name + "' not in file");
      x(k++) = it->second(pos - table.names.begin());
    }
  }
  return x;
}

Eigen::MatrixXd load_target_file(const std::string& path, int n) {
  std::istringstream in(read_text_file(path));
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (static_cast<int>(vals.size()) != n * n)
    throw ConfigError("target precision file " + path + " has " +
                      std::to_string(vals.size()) + " entries, expected " +
                      std::to_string(n) + "x" + std::to_string(n), path);
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) P(i, j) = vals[static_cast<std::size_t>(i) * n + j];
  if ((P - P.transpose()).norm() > 1e-8 * std::max(1.0, P.norm()))
    throw ConfigError("target precision file " + path + " is not symmetric",
                      path);
  return P;
}

}  // namespace

Model assemble_structure(const AdjacencyGraph& graph,
                         const MultivariateSupport& support,
                         const CovariateTable& covariates,
                         const ModelConfig& config) {
  support.validate(graph);
  if (config.covariates.group_interactions &&
      static_cast<int>(config.covariates.variable_groups.size()) != support.L)
    throw ConfigError("covariates: group_interactions needs variable_groups "
                      "of length L");

  Model model;
  model.support = support;
  model.graph = graph;
  model.config = config;
  model.p = config.covariates.dimension(support.L);
  model.covariate_names = config.covariates.column_names(support.L);
  const int T = support.T;

  // designs + feasible rank bound
  model.X_full.resize(T);
  int min_available = 1 << 30;
  std::vector<int> ranks(T);
  for (int t = 0; t < T; ++t) {
    const auto& cells = support.prediction_cells[t];
    Eigen::MatrixXd X(support.N(t), model.p);
    for (std::size_t i = 0; i < cells.size(); ++i)
      X.row(static_cast<Eigen::Index>(i)) =
          cell_covariates(config.covariates, support.L, covariates, t, cells[i])
              .transpose();
    ranks[t] = design_rank(X);
    if (model.p > 0 && ranks[t] < model.p)
      model.notes.push_back("design matrix rank-deficient at t=" +
                            std::to_string(t + 1) + " (rank " +
                            std::to_string(ranks[t]) + " of " +
                            std::to_string(model.p) +
                            "); pseudo-inverse projector in effect");
    min_available = std::min(min_available, support.N(t) - ranks[t]);
    model.X_full[t] = std::move(X);
  }

  if (config.r < 1) throw ConfigError("model: r must be >= 1");
  model.r_effective = std::min(config.r, min_available);
  if (model.r_effective < 1)
    throw ConfigError("model: no basis dimensions available (N_t - rank(X_t) "
                      "= " + std::to_string(min_available) + ")");
  if (model.r_effective < config.r)
    model.notes.push_back("r capped to " + std::to_string(model.r_effective) +
                          " (bound min_t N_t - rank(X_t) = " +
                          std::to_string(min_available) + ")");

  const bool file_target = config.prior_target.rfind("file:", 0) == 0;
  if (!file_target && config.prior_target != "car")
    throw ConfigError("model: prior target must be 'car' or 'file:<path>'");
  Eigen::MatrixXd file_P;
  if (file_target) {
    int n0 = support.N(0);
    for (int t = 1; t < T; ++t)
      if (support.N(t) != n0)
        throw ConfigError("model: file target requires a time-invariant "
                          "prediction support");
    file_P = load_target_file(config.prior_target.substr(5), n0);
  }

  // bases / propagators / prior shapes, deduplicated across identical times
  struct CacheEntry {
    MiBasis basis;
    Eigen::MatrixXd M;
    KStarResult kstar;
  };
  std::map<std::uint64_t, CacheEntry> cache;

  model.basis.resize(T);
  model.M.resize(T);
  model.prior.k_star.resize(T);
  model.prior.w_star.resize(T);
  model.prior.lifted_flags.assign(T, false);
  model.prior.floored_flags.assign(T, false);

  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd A = block_adjacency(graph, support, t, config.coupling);
    Eigen::MatrixXd P = file_target ? file_P : car_target_precision(A);

    std::uint64_t key = matrix_digest(model.X_full[t]);
    key = matrix_digest(A, key);
    key = matrix_digest(P, key);
    key = fnv1a(&model.r_effective, sizeof(model.r_effective), key);

    auto it = cache.find(key);
    if (it == cache.end()) {
      CacheEntry entry;
      entry.basis = mi_basis(model.X_full[t], A, model.r_effective);
      entry.M = mi_propagator_from(entry.basis.S, model.X_full[t],
                                   config.propagator_mode);
      entry.kstar = k_star(entry.basis.S, P);
      it = cache.emplace(key, std::move(entry)).first;
    } else {
      ++model.basis_cache_hits;
    }
    model.basis[t] = it->second.basis;
    model.M[t] = it->second.M;
    model.prior.k_star[t] = it->second.kstar.K;
    model.prior.floored_flags[t] = it->second.kstar.floored;
    if (it->second.kstar.floored)
      model.notes.push_back("k_star eigenvalue floor applied at t=" +
                            std::to_string(t + 1));
  }
  for (int t = 1; t < T; ++t) {
    WStarResult w =
        w_star(model.prior.k_star[t], model.prior.k_star[t - 1], model.M[t]);
    model.prior.w_star[t] = w.W;
    model.prior.lifted_flags[t] = w.lifted;
    if (w.lifted)
      model.notes.push_back("w_star lifted to nearest PSD at t=" +
                            std::to_string(t + 1));
  }
  model.prior.w_star[0] = Eigen::MatrixXd::Zero(model.r_effective,
                                                model.r_effective);

  model.obs_rows.resize(T);
  model.X_obs.resize(T);
  model.S_obs.resize(T);
  for (int t = 0; t < T; ++t) {
    model.obs_rows[t] = support.observed_row_indices(t);
    model.S_obs[t] = basis_rows_for(model.basis[t], model.obs_rows[t]);
    Eigen::MatrixXd Xo(static_cast<Eigen::Index>(model.obs_rows[t].size()),
                       model.p);
    for (std::size_t i = 0; i < model.obs_rows[t].size(); ++i)
      Xo.row(static_cast<Eigen::Index>(i)) =
          model.X_full[t].row(model.obs_rows[t][i]);
    model.X_obs[t] = std::move(Xo);
  }
  return model;
}

void bind_observations(Model& model, const ObservationTable& observations) {
  const int T = model.support.T;
  const bool reweighted = model.config.variance_mode == VarianceMode::reweighted;
  const bool constant = model.config.variance_mode == VarianceMode::constant;
  if (constant && model.config.variance_value <= 0.0)
    throw ConfigError("model: constant variance mode needs variance_value > 0");
  if (reweighted) {
    if (static_cast<int>(model.config.covariates.variable_groups.size()) !=
        model.support.L)
      throw ConfigError("model: reweighted variance mode needs variable_groups "
                        "of length L");
    for (int g : model.config.covariates.variable_groups)
      if (g != 1 && g != 2)
        throw ConfigError("model: variable_groups entries must be 1 or 2");
  }

  model.z.assign(T, {});
  model.v_base.assign(T, {});
  model.group.assign(T, {});
  std::vector<std::vector<bool>> filled(T);
  for (int t = 0; t < T; ++t) {
    const int nt = model.support.n_obs(t);
    model.z[t] = Eigen::VectorXd::Zero(nt);
    model.v_base[t] = Eigen::VectorXd::Zero(nt);
    model.group[t] = Eigen::VectorXi::Zero(nt);
    filled[t].assign(static_cast<std::size_t>(nt), false);
  }

  for (const auto& row : observations.rows) {
    if (row.time < 0 || row.time >= T)
      throw ConfigError("observations: time " + std::to_string(row.time + 1) +
                        " outside support");
    Cell cell{row.variable, model.graph.unit_index(row.unit)};
    const auto& obs_cells = model.support.observed_cells[row.time];
    auto it = std::lower_bound(obs_cells.begin(), obs_cells.end(), cell);
    if (it == obs_cells.end() || !(*it == cell))
      throw ConfigError("observations: (variable " +
                        std::to_string(row.variable + 1) + ", t " +
                        std::to_string(row.time + 1) + ", unit " + row.unit +
                        ") is not an observed cell in the support");
    const int i = static_cast<int>(it - obs_cells.begin());
    if (filled[row.time][static_cast<std::size_t>(i)])
      throw ConfigError("observations: duplicate cell (variable " +
                        std::to_string(row.variable + 1) + ", t " +
                        std::to_string(row.time + 1) + ", unit " + row.unit +
                        ")");
    filled[row.time][static_cast<std::size_t>(i)] = true;
    model.z[row.time](i) = row.value;

    if (constant) {
      model.v_base[row.time](i) = model.config.variance_value;
    } else {
      if (!row.has_variance)
        throw ConfigError("observations: variance required in '" +
                          std::string(reweighted ? "reweighted" : "known") +
                          "' mode (variable " + std::to_string(row.variable + 1) +
                          ", t " + std::to_string(row.time + 1) + ", unit " +
                          row.unit + ")");
      model.v_base[row.time](i) =
          reweighted ? row.variance / std::exp(2.0 * row.value) : row.variance;
    }
    if (reweighted)
      model.group[row.time](i) =
          model.config.covariates.variable_groups[static_cast<std::size_t>(
              row.variable)] - 1;
  }

  for (int t = 0; t < T; ++t)
    for (std::size_t i = 0; i < filled[t].size(); ++i)
      if (!filled[t][i]) {
        const Cell& c = model.support.observed_cells[t][i];
        throw ConfigError("observations: no value for observed cell (variable " +
                          std::to_string(c.variable + 1) + ", t " +
                          std::to_string(t + 1) + ", unit " +
                          model.graph.units()[c.unit].id + ")");
      }
  model.bound = true;
}

Model assemble(const AdjacencyGraph& graph, const MultivariateSupport& support,
               const ObservationTable& observations,
               const CovariateTable& covariates, const ModelConfig& config) {
  Model model = assemble_structure(graph, support, covariates, config);
  bind_observations(model, observations);
  return model;
}

GibbsModelView Model::view() const {
  if (!bound) throw MstmError("model: observations not bound");
  GibbsModelView v;
  v.T = support.T;
  v.r = r_effective;
  v.p = p;
  v.z = z;
  v.X_obs = X_obs;
  v.S_obs = S_obs;
  v.v_base = v_base;
  v.group = group;
  v.K1star = prior.k_star[0];
  v.Wstar = prior.w_star;
  v.M = M;
  return v;
}

int FitResult::total_kept() const {
  int n = 0;
  for (const auto& c : chains) n += c.kept();
  return n;
}

FitResult fit(const Model& model, GibbsConfig mcmc) {
  if (model.config.variance_mode == VarianceMode::reweighted)
    mcmc.variance_mode = VarianceMode::reweighted;
  else
    mcmc.variance_mode = model.config.variance_mode;
  mcmc.beta_mode = model.config.beta_mode;
  mcmc.sigma_beta2 = model.config.sigma_beta2;

  FitResult out;
  out.chains = gibbs_run(model.view(), mcmc);
  out.mcmc = mcmc;
  out.notes = model.notes;
  for (const auto& c : out.chains)
    for (const auto& n : c.notes)
      if (std::find(out.notes.begin(), out.notes.end(), n) == out.notes.end())
        out.notes.push_back(n);
  return out;
}

PredictionSet predict(const Model& model, const FitResult& fit) {
  if (fit.chains.empty() || fit.total_kept() == 0)
    throw MstmError("predict: no retained draws");
  const int T = model.support.T;
  const long n_draws = fit.total_kept();

  RngStream rng(derive_seed(fit.mcmc.seed, 0x7072656469637400ULL));

  struct Acc {
    double mean = 0.0, m2 = 0.0;
    double mu = 0.0, basis = 0.0, xi = 0.0;
    long n = 0;
  };
  std::vector<std::vector<Acc>> acc(T);
  for (int t = 0; t < T; ++t) acc[t].assign(model.support.N(t), {});

  for (const auto& chain : fit.chains) {
    for (int k = 0; k < chain.kept(); ++k) {
      for (int t = 0; t < T; ++t) {
        const Eigen::Index col =
            fit.mcmc.beta_mode == BetaMode::shared ? 0 : t;
        Eigen::VectorXd mu = model.X_full[t] * chain.beta[k].col(col);
        Eigen::VectorXd sb = model.basis[t].S * chain.eta[k].col(t);
        const double sd = std::sqrt(chain.sigma_xi2[k](t));

        const auto& rows = model.obs_rows[t];
        Eigen::VectorXd xi_full = Eigen::VectorXd::Zero(model.support.N(t));
        for (std::size_t i = 0; i < rows.size(); ++i)
          xi_full(rows[i]) =
              chain.xi[k](chain.xi_offsets[t] + static_cast<int>(i));
        std::size_t next_obs = 0;
        for (int i = 0; i < model.support.N(t); ++i) {
          if (next_obs < rows.size() && rows[next_obs] == i) {
            ++next_obs;
            continue;
          }
          xi_full(i) = sd * rng.normal();
        }

        for (int i = 0; i < model.support.N(t); ++i) {
          const double y = mu(i) + sb(i) + xi_full(i);
          Acc& a = acc[t][static_cast<std::size_t>(i)];
          ++a.n;
          const double d = y - a.mean;
          a.mean += d / static_cast<double>(a.n);
          a.m2 += d * (y - a.mean);
          a.mu += mu(i);
          a.basis += sb(i);
          a.xi += xi_full(i);
        }
      }
    }
  }

  PredictionSet out;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < model.support.N(t); ++i) {
      const Cell& c = model.support.prediction_cells[t][static_cast<std::size_t>(i)];
      const Acc& a = acc[t][static_cast<std::size_t>(i)];
      PredictionCell cell;
      cell.variable = c.variable;
      cell.time = t;
      cell.unit = model.graph.units()[c.unit].id;
      cell.post_mean = a.mean;
      cell.root_mspe =
          n_draws > 1 ? std::sqrt(a.m2 / static_cast<double>(n_draws - 1)) : 0.0;
      cell.mu_mean = a.mu / static_cast<double>(n_draws);
      cell.basis_mean = a.basis / static_cast<double>(n_draws);
      cell.xi_mean = a.xi / static_cast<double>(n_draws);
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

std::string PredictionSet::to_csv(const Model&) const {
  std::string out = "variable,time,unit,post_mean,root_mspe,mu_mean\n";
  for (const auto& c : cells) {
    out += std::to_string(c.variable + 1) + "," + std::to_string(c.time + 1) +
           "," + c.unit + "," + format_full(c.post_mean) + "," +
           format_full(c.root_mspe) + "," + format_full(c.mu_mean) + "\n";
  }
  return out;
}

ContrastResult contrast(const Model& model, const FitResult& fit,
                        const std::vector<ContrastWeight>& weights) {
  if (weights.empty()) throw MstmError("contrast: empty weight list");
  if (fit.total_kept() == 0) throw MstmError("contrast: no retained draws");

  // resolve cells up front
  struct Term {
    int t;
    Eigen::VectorXd x;
    double w;
  };
  std::vector<Term> terms;
  for (const auto& w : weights) {
    Cell cell{w.variable, model.graph.unit_index(w.unit)};
    if (w.time < 0 || w.time >= model.support.T)
      throw MstmError("contrast: time " + std::to_string(w.time + 1) +
                      " outside support");
    int row = model.support.row_index(w.time, cell);
    terms.push_back({w.time, model.X_full[w.time].row(row).transpose(), w.weight});
  }

  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(fit.total_kept()));
  for (const auto& chain : fit.chains) {
    for (int k = 0; k < chain.kept(); ++k) {
      double c = 0.0;
      for (const auto& term : terms) {
        const Eigen::Index col =
            fit.mcmc.beta_mode == BetaMode::shared ? 0 : term.t;
        c += term.w * term.x.dot(chain.beta[k].col(col));
      }
      draws.push_back(c);
    }
  }

  ContrastResult res;
  const double n = static_cast<double>(draws.size());
  for (double d : draws) res.mean += d;
  res.mean /= n;
  for (double d : draws) res.variance += (d - res.mean) * (d - res.mean);
  res.variance = draws.size() > 1 ? res.variance / (n - 1.0) : 0.0;

  std::sort(draws.begin(), draws.end());
  auto quantile = [&](double q) {
    const double h = q * (n - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, draws.size() - 1);
    const double frac = h - std::floor(h);
    return draws[lo] * (1.0 - frac) + draws[hi] * frac;
  };
  res.lower95 = quantile(0.025);
  res.upper95 = quantile(0.975);
  return res;
}

}  // namespace mstm
