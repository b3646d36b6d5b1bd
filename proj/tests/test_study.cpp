#include <doctest.h>

#include <cmath>
#include <set>

#include "mstm/errors.hpp"
#include "mstm/study.hpp"
#include "test_support.hpp"

using namespace mstm;

namespace {

StudyConfig tiny_config() {
  StudyConfig c;
  c.replicates = 1;
  c.observed_fraction = 0.65;
  c.lattice_rows = 4;
  c.lattice_cols = 4;
  c.L = 2;
  c.T = 4;
  c.model.r = 6;
  c.model.variance_mode = VarianceMode::known;
  c.generative.beta = Eigen::VectorXd::Constant(1, 7.0);
  c.generative.sigma_xi2 = 0.25;
  c.generative.eta_sd = 0.15;
  c.mcmc.iterations = 400;
  c.mcmc.burn_in = 100;
  c.mcmc.chains = 1;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("simulate with all variances zero reproduces the fixed effects") {
  StudyConfig c = tiny_config();
  Model model = study_structure(c);
  GenerativeConfig gen;
  gen.beta = Eigen::VectorXd::Constant(1, 3.25);
  gen.sigma_k2 = 0.0;
  gen.sigma_xi2 = 0.0;
  gen.measurement_variance = 0.0;
  RngStream rng(1);
  SimulationResult sim = simulate(model, gen, rng);
  for (const auto& row : sim.truth.rows)
    CHECK(row.value == doctest::Approx(3.25));
  CHECK(sim.truth.rows.size() ==
        static_cast<std::size_t>(c.T * model.support.N(0)));
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  StudyConfig c = tiny_config();
  Model model = study_structure(c);
  RngStream rng1(42), rng2(42);
  SimulationResult a = simulate(model, c.generative, rng1);
  SimulationResult b = simulate(model, c.generative, rng2);
  REQUIRE(a.truth.rows.size() == b.truth.rows.size());
  for (std::size_t i = 0; i < a.truth.rows.size(); ++i)
    CHECK(a.truth.rows[i].value == b.truth.rows[i].value);
}

TEST_CASE("simulated measurement noise has the configured variance") {
  StudyConfig c = tiny_config();
  c.lattice_rows = 25;
  c.lattice_cols = 20;  // 500 units x 2 variables x T
  c.L = 2;
  c.T = 10;
  c.model.r = 4;
  Model model = study_structure(c);
  GenerativeConfig gen;
  gen.beta = Eigen::VectorXd::Zero(1);
  gen.sigma_k2 = 0.0;
  gen.sigma_xi2 = 0.0;
  gen.measurement_variance = 0.8;
  RngStream rng(3);
  SimulationResult sim = simulate(model, gen, rng);
  REQUIRE(sim.truth.rows.size() == 10000);
  std::vector<double> values;
  for (const auto& row : sim.truth.rows) values.push_back(row.value);
  CHECK(oracle::var_of(values) == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("simulated field variance matches the implied total variance") {
  StudyConfig c = tiny_config();
  c.lattice_rows = 15;
  c.lattice_cols = 15;
  c.L = 2;
  c.T = 10;
  c.model.r = 20;
  Model model = study_structure(c);
  GenerativeConfig gen;
  gen.beta = Eigen::VectorXd::Constant(1, 4.0);
  gen.sigma_k2 = -1.0;
  gen.eta_sd = 0.6;
  gen.sigma_xi2 = 0.2;
  gen.measurement_variance = 0.25;
  RngStream rng(9);
  SimulationResult sim = simulate(model, gen, rng);
  // basis rows are orthonormal columns, so the average per-cell basis
  // variance is eta_sd^2 * r / N
  const double implied = 0.36 * 20.0 / 450.0 + 0.2 + 0.25;
  std::vector<double> values;
  for (const auto& row : sim.truth.rows) values.push_back(row.value);
  CHECK(oracle::var_of(values) == doctest::Approx(implied).epsilon(0.10));
}

TEST_CASE("perturbation adds noise of the requested size") {
  StudyConfig c = tiny_config();
  c.lattice_rows = 25;
  c.lattice_cols = 20;
  c.T = 10;
  Model model = study_structure(c);
  GenerativeConfig gen;
  gen.beta = Eigen::VectorXd::Constant(1, 2.0);
  gen.sigma_k2 = 0.0;
  gen.sigma_xi2 = 0.0;
  RngStream rng(5);
  SimulationResult sim = simulate(model, gen, rng);

  ObservationTable copy = sim.truth;
  perturb(copy, 0.0, rng);
  for (std::size_t i = 0; i < copy.rows.size(); ++i)
    CHECK(copy.rows[i].value == sim.truth.rows[i].value);

  perturb(copy, 0.36, rng);
  std::vector<double> deltas;
  for (std::size_t i = 0; i < copy.rows.size(); ++i)
    deltas.push_back(copy.rows[i].value - sim.truth.rows[i].value);
  CHECK(oracle::mean_of(deltas) == doctest::Approx(0.0).epsilon(0.05));
  CHECK(oracle::var_of(deltas) == doctest::Approx(0.36).epsilon(0.05));
}

TEST_CASE("masking selects the rounded fraction per variable and time") {
  AdjacencyGraph g = lattice_graph(10, 10);
  MultivariateSupport s = MultivariateSupport::full(g, 2, 3);
  RngStream rng(7);
  mask_observed(s, 0.65, rng);
  for (int t = 0; t < 3; ++t) {
    int per_var[2] = {0, 0};
    for (const Cell& c : s.observed_cells[t]) ++per_var[c.variable];
    CHECK(per_var[0] == 65);
    CHECK(per_var[1] == 65);
    // observed is a subset of prediction; partition is exhaustive
    std::set<Cell> obs(s.observed_cells[t].begin(), s.observed_cells[t].end());
    int missing = 0;
    for (const Cell& c : s.prediction_cells[t])
      if (!obs.count(c)) ++missing;
    CHECK(missing == 200 - 130);
  }

  RngStream rng2(8);
  MultivariateSupport full = MultivariateSupport::full(g, 2, 3);
  mask_observed(full, 1.0, rng2);
  for (int t = 0; t < 3; ++t) CHECK(full.n_obs(t) == 200);

  CHECK_THROWS_AS(mask_observed(full, 0.0, rng2), ConfigError);
  CHECK_THROWS_AS(mask_observed(full, 1.5, rng2), ConfigError);
}

TEST_CASE("single-replicate study produces a complete report") {
  StudyConfig c = tiny_config();
  StudyReport report = run_study(c);
  REQUIRE(report.replicates.size() == 1);
  CHECK(report.failures == 0);
  const auto& m = report.replicates[0];
  CHECK(m.sigma_eps2 > 0.0);
  CHECK(m.stspe_observed > 0.0);
  CHECK(m.stspe_missing > 0.0);
  CHECK(m.mprd_observed > 0.0);
  CHECK(report.stspe_observed_median == doctest::Approx(m.stspe_observed));
}

TEST_CASE("study reports are reproducible for identical config and seed") {
  StudyConfig c = tiny_config();
  c.replicates = 2;
  c.mcmc.iterations = 200;
  c.mcmc.burn_in = 50;
  StudyReport a = run_study(c);
  StudyReport b = run_study(c);
  CHECK(a.replicates_csv() == b.replicates_csv());

  c.threads = 2;  // concurrency must not change the report
  StudyReport parallel = run_study(c);
  CHECK(a.replicates_csv() == parallel.replicates_csv());
}

TEST_CASE("missing cells score worse than observed cells") {
  StudyConfig c = tiny_config();
  c.replicates = 3;
  c.lattice_rows = 6;
  c.lattice_cols = 6;
  c.T = 6;
  c.model.r = 8;
  c.mcmc.iterations = 600;
  c.mcmc.burn_in = 150;
  c.seed = 2024;
  StudyReport report = run_study(c);
  CHECK(report.failures == 0);
  CHECK(report.stspe_missing_median > report.stspe_observed_median);
  CHECK(report.mprd_missing_median > report.mprd_observed_median);
}
