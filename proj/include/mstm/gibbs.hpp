#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mstm/rng.hpp"

namespace mstm {

enum class BetaMode { shared, per_time };
enum class VarianceMode { known, reweighted, constant };

// --- conjugate full conditionals ------------------------------------------

// Fine-scale draw, elementwise: var_i = (1/v_i + 1/sigma_xi2)^{-1},
// mean_i = var_i * (z - x'beta - S'eta)_i / v_i.
Eigen::VectorXd sample_xi(const Eigen::VectorXd& z,
                          const Eigen::VectorXd& x_beta,
                          const Eigen::VectorXd& s_eta,
                          const Eigen::VectorXd& v, double sigma_xi2,
                          RngStream& rng);

// Fixed-effect draw. shared mode sums the per-time information matrices;
// per_time draws each beta_t from its own conditional. Returns p x 1
// (shared) or p x T (per_time).
Eigen::MatrixXd sample_beta(const std::vector<Eigen::VectorXd>& z,
                            const std::vector<Eigen::VectorXd>& xi,
                            const std::vector<Eigen::VectorXd>& s_eta,
                            const std::vector<Eigen::MatrixXd>& X,
                            const std::vector<Eigen::VectorXd>& v,
                            double sigma_beta2, const Eigen::VectorXd& mu_beta,
                            BetaMode mode, RngStream& rng);

// Precomputed spectral inverses of the prior shapes for the sigma_K^2 draw.
// Ranks matter: a lifted W* can be singular (zero in the random-walk case),
// in which case the quadratic form uses the pseudo-inverse and the IG shape
// counts only the innovation dimensions actually present.
struct SigmaKPrecomp {
  Eigen::MatrixXd k1_inv;
  int k1_rank = 0;
  std::vector<Eigen::MatrixXd> w_pinv;  // per t, index 0 unused
  std::vector<int> w_rank;
  int shape_dims = 0;  // k1_rank + sum of w ranks

  static SigmaKPrecomp build(const Eigen::MatrixXd& K1star,
                             const std::vector<Eigen::MatrixXd>& Wstar);
};

// sigma_K^2 | eta ~ IG(shape_dims/2 + 2, 1 + eta_1' K1*^{-1} eta_1 / 2
//                        + sum_t (eta_t - M eta_{t-1})' W*^+ (...) / 2).
double sample_sigma_k(const std::vector<Eigen::VectorXd>& eta,
                      const SigmaKPrecomp& precomp,
                      const std::vector<Eigen::MatrixXd>& M, RngStream& rng);
// Convenience form taking the shapes directly.
double sample_sigma_k(const std::vector<Eigen::VectorXd>& eta,
                      const Eigen::MatrixXd& K1star,
                      const std::vector<Eigen::MatrixXd>& Wstar,
                      const std::vector<Eigen::MatrixXd>& M, RngStream& rng);

// sigma_xi,t^2 | xi_t ~ IG(n_t/2 + 2, 1 + xi_t' xi_t / 2).
double sample_sigma_xi(const Eigen::VectorXd& xi, RngStream& rng);

// Variance reweighting draws: delta_k ~ IG(count_k/2 + 2, 1 + sum_k/2),
// where sum_k aggregates residual^2 / base-variance over group k.
std::pair<double, double> sample_delta(double sum1, double sum2,
                                       long count1, long count2,
                                       RngStream& rng);

// --- Gibbs sampler ----------------------------------------------------------

// Observed-cell view of the assembled model, everything the sampler needs.
// Index 0 of M / Wstar is unused (transitions run into t >= 1).
struct GibbsModelView {
  int T = 0;
  int r = 0;
  int p = 0;
  std::vector<Eigen::VectorXd> z;       // length n_t
  std::vector<Eigen::MatrixXd> X_obs;   // n_t x p
  std::vector<Eigen::MatrixXd> S_obs;   // n_t x r
  std::vector<Eigen::VectorXd> v_base;  // per-observation base variance
  std::vector<Eigen::VectorXi> group;   // per observation: 0 or 1 (reweighted)
  Eigen::MatrixXd K1star;
  std::vector<Eigen::MatrixXd> Wstar;
  std::vector<Eigen::MatrixXd> M;

  int n_total() const;
  void validate() const;
};

struct GibbsConfig {
  int iterations = 10000;
  int burn_in = 1000;
  int chains = 3;
  std::uint64_t seed = 0;
  BetaMode beta_mode = BetaMode::shared;
  VarianceMode variance_mode = VarianceMode::known;
  double sigma_beta2 = 1e15;
  Eigen::VectorXd mu_beta;  // empty means zero
  int threads = 0;          // 0 = one thread per chain
};

// Retained post-burn-in draws for one chain.
struct ChainDraws {
  int chain_id = 0;
  std::uint64_t seed = 0;  // derived chain seed
  int iterations = 0;
  int burn_in = 0;
  std::vector<int> xi_offsets;             // T+1 prefix offsets into xi rows
  std::vector<Eigen::MatrixXd> eta;        // r x T per draw
  std::vector<Eigen::VectorXd> xi;         // stacked length n_total per draw
  std::vector<Eigen::MatrixXd> beta;       // p x 1 or p x T per draw
  std::vector<double> sigma_k2;
  std::vector<Eigen::VectorXd> sigma_xi2;  // length T per draw
  std::vector<std::array<double, 2>> delta;  // present in reweighted mode
  std::vector<std::string> notes;

  int kept() const { return static_cast<int>(sigma_k2.size()); }
};

// Runs `chains` independently seeded chains (concurrently when chains > 1).
// Per (seed, chain) the output is bit-reproducible.
std::vector<ChainDraws> gibbs_run(const GibbsModelView& model,
                                  const GibbsConfig& config);

}  // namespace mstm
