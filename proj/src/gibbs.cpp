#include "mstm/gibbs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <future>
#include <stdexcept>

#include "mstm/errors.hpp"
#include "mstm/ffbs.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

Eigen::VectorXd sample_xi(const Eigen::VectorXd& z,
                          const Eigen::VectorXd& x_beta,
                          const Eigen::VectorXd& s_eta,
                          const Eigen::VectorXd& v, double sigma_xi2,
                          RngStream& rng) {
  const Eigen::Index n = z.size();
  if (x_beta.size() != n || s_eta.size() != n || v.size() != n)
    throw MstmError("sample_xi: vector lengths differ");
  if (sigma_xi2 <= 0.0) throw MstmError("sample_xi: sigma_xi2 must be > 0");
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (v(i) <= 0.0) throw MstmError("sample_xi: nonpositive variance");
    const double var = 1.0 / (1.0 / v(i) + 1.0 / sigma_xi2);
    const double mean = var * (z(i) - x_beta(i) - s_eta(i)) / v(i);
    xi(i) = mean + std::sqrt(var) * rng.normal();
  }
  return xi;
}

namespace {
Eigen::VectorXd draw_gaussian_from_information(const Eigen::MatrixXd& info,
                                               const Eigen::VectorXd& rhs,
                                               RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw MstmError("sample_beta: singular information matrix");
  Eigen::VectorXd mean = llt.solve(rhs);
  // cov = info^{-1} = U^{-1} U^{-T}, so mean + U^{-1} z has the right law
  Eigen::VectorXd noise =
      llt.matrixU().solve(rng.normal_vector(rhs.size()));
  return mean + noise;
}
}  // namespace

Eigen::MatrixXd sample_beta(const std::vector<Eigen::VectorXd>& z,
                            const std::vector<Eigen::VectorXd>& xi,
                            const std::vector<Eigen::VectorXd>& s_eta,
                            const std::vector<Eigen::MatrixXd>& X,
                            const std::vector<Eigen::VectorXd>& v,
                            double sigma_beta2, const Eigen::VectorXd& mu_beta,
                            BetaMode mode, RngStream& rng) {
  const std::size_t T = z.size();
  if (xi.size() != T || s_eta.size() != T || X.size() != T || v.size() != T)
    throw MstmError("sample_beta: per-time input lists have unequal length");
  if (T == 0 || X[0].cols() == 0)
    throw MstmError("sample_beta: empty design");
  if (sigma_beta2 <= 0.0)
    throw MstmError("sample_beta: sigma_beta2 must be > 0");
  const Eigen::Index p = X[0].cols();
  Eigen::VectorXd mu = mu_beta.size() == 0 ? Eigen::VectorXd::Zero(p) : mu_beta;
  if (mu.size() != p) throw MstmError("sample_beta: mu_beta has wrong length");

  const Eigen::MatrixXd prior_info =
      Eigen::MatrixXd::Identity(p, p) / sigma_beta2;
  const Eigen::VectorXd prior_rhs = mu / sigma_beta2;

  auto accumulate = [&](std::size_t t, Eigen::MatrixXd& info,
                        Eigen::VectorXd& rhs) {
    if (z[t].size() == 0) return;
    Eigen::VectorXd w = v[t].cwiseInverse();
    Eigen::MatrixXd Xw = w.asDiagonal() * X[t];
    info.noalias() += X[t].transpose() * Xw;
    rhs.noalias() += Xw.transpose() * (z[t] - xi[t] - s_eta[t]);
  };

  if (mode == BetaMode::shared) {
    Eigen::MatrixXd info = prior_info;
    Eigen::VectorXd rhs = prior_rhs;
    for (std::size_t t = 0; t < T; ++t) accumulate(t, info, rhs);
    return draw_gaussian_from_information(info, rhs, rng);
  }

  Eigen::MatrixXd out(p, static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd info = prior_info;
    Eigen::VectorXd rhs = prior_rhs;
    accumulate(t, info, rhs);
    out.col(static_cast<Eigen::Index>(t)) =
        draw_gaussian_from_information(info, rhs, rng);
  }
  return out;
}

SigmaKPrecomp SigmaKPrecomp::build(const Eigen::MatrixXd& K1star,
                                   const std::vector<Eigen::MatrixXd>& Wstar) {
  SigmaKPrecomp pre;
  pre.k1_inv = sym_pinv(K1star, 1e-12, &pre.k1_rank);
  pre.w_pinv.resize(Wstar.size());
  pre.w_rank.assign(Wstar.size(), 0);
  pre.shape_dims = pre.k1_rank;
  for (std::size_t t = 1; t < Wstar.size(); ++t) {
    pre.w_pinv[t] = sym_pinv(Wstar[t], 1e-12, &pre.w_rank[t]);
    pre.shape_dims += pre.w_rank[t];
  }
  return pre;
}

double sample_sigma_k(const std::vector<Eigen::VectorXd>& eta,
                      const SigmaKPrecomp& precomp,
                      const std::vector<Eigen::MatrixXd>& M, RngStream& rng) {
  const std::size_t T = eta.size();
  if (M.size() != T) throw MstmError("sample_sigma_k: transition list mismatch");
  double quad = eta[0].dot(precomp.k1_inv * eta[0]);
  for (std::size_t t = 1; t < T; ++t) {
    Eigen::VectorXd innov = eta[t] - M[t] * eta[t - 1];
    quad += innov.dot(precomp.w_pinv[t] * innov);
  }
  const double shape = static_cast<double>(precomp.shape_dims) / 2.0 + 2.0;
  return rng.inv_gamma(shape, 1.0 + quad / 2.0);
}

double sample_sigma_k(const std::vector<Eigen::VectorXd>& eta,
                      const Eigen::MatrixXd& K1star,
                      const std::vector<Eigen::MatrixXd>& Wstar,
                      const std::vector<Eigen::MatrixXd>& M, RngStream& rng) {
  return sample_sigma_k(eta, SigmaKPrecomp::build(K1star, Wstar), M, rng);
}

double sample_sigma_xi(const Eigen::VectorXd& xi, RngStream& rng) {
  const double n = static_cast<double>(xi.size());
  return rng.inv_gamma(n / 2.0 + 2.0, 1.0 + xi.squaredNorm() / 2.0);
}

std::pair<double, double> sample_delta(double sum1, double sum2, long count1,
                                       long count2, RngStream& rng) {
  double d1 = rng.inv_gamma(static_cast<double>(count1) / 2.0 + 2.0,
                            1.0 + sum1 / 2.0);
  double d2 = rng.inv_gamma(static_cast<double>(count2) / 2.0 + 2.0,
                            1.0 + sum2 / 2.0);
  return {d1, d2};
}

int GibbsModelView::n_total() const {
  int n = 0;
  for (const auto& zt : z) n += static_cast<int>(zt.size());
  return n;
}

void GibbsModelView::validate() const {
  if (T < 1 || r < 1) throw MstmError("gibbs: T and r must be >= 1");
  auto sz = static_cast<std::size_t>(T);
  if (z.size() != sz || X_obs.size() != sz || S_obs.size() != sz ||
      v_base.size() != sz || Wstar.size() != sz || M.size() != sz)
    throw MstmError("gibbs: per-time lists do not match T");
  if (K1star.rows() != r || K1star.cols() != r)
    throw MstmError("gibbs: K1star dimension mismatch");
  for (int t = 0; t < T; ++t) {
    const Eigen::Index nt = z[t].size();
    if (X_obs[t].rows() != nt || S_obs[t].rows() != nt ||
        v_base[t].size() != nt)
      throw MstmError("gibbs: observed-row dimensions differ at t=" +
                      std::to_string(t + 1));
    if (S_obs[t].cols() != r)
      throw MstmError("gibbs: basis rank mismatch at t=" + std::to_string(t + 1));
    if (nt > 0 && (v_base[t].array() <= 0.0).any())
      throw MstmError("gibbs: nonpositive measurement variance at t=" +
                      std::to_string(t + 1));
    if (t >= 1 && (M[t].rows() != r || M[t].cols() != r ||
                   Wstar[t].rows() != r || Wstar[t].cols() != r))
      throw MstmError("gibbs: transition dimension mismatch at t=" +
                      std::to_string(t + 1));
  }
}

namespace {

ChainDraws run_chain(const GibbsModelView& model, const GibbsConfig& config,
                     const SigmaKPrecomp& precomp, int chain_id) {
  const int T = model.T;
  const int r = model.r;
  const int p = model.p;
  const int kept = config.iterations - config.burn_in;
  const bool reweighted = config.variance_mode == VarianceMode::reweighted;

  ChainDraws out;
  out.chain_id = chain_id;
  out.seed = derive_seed(config.seed, static_cast<std::uint64_t>(chain_id));
  out.iterations = config.iterations;
  out.burn_in = config.burn_in;
  out.xi_offsets.assign(static_cast<std::size_t>(T) + 1, 0);
  for (int t = 0; t < T; ++t)
    out.xi_offsets[t + 1] = out.xi_offsets[t] + static_cast<int>(model.z[t].size());
  out.eta.reserve(kept);
  out.xi.reserve(kept);
  out.beta.reserve(kept);
  out.sigma_k2.reserve(kept);
  out.sigma_xi2.reserve(kept);

  RngStream rng(out.seed);

  // initial state
  Eigen::VectorXd mu_beta = config.mu_beta.size() == 0
                                ? Eigen::VectorXd::Zero(p)
                                : config.mu_beta;
  std::vector<Eigen::VectorXd> eta(T, Eigen::VectorXd::Zero(r));
  std::vector<Eigen::VectorXd> xi(T);
  for (int t = 0; t < T; ++t) xi[t] = Eigen::VectorXd::Zero(model.z[t].size());
  Eigen::MatrixXd beta = mu_beta * Eigen::RowVectorXd::Ones(
                             config.beta_mode == BetaMode::shared ? 1 : T);
  double sigma_k2 = 1.0;
  Eigen::VectorXd sigma_xi2 = Eigen::VectorXd::Ones(T);
  std::array<double, 2> delta = {1.0, 1.0};

  bool pinv_noted = false;
  std::vector<Eigen::VectorXd> v(T), ztilde(T), x_beta(T), s_eta(T);
  std::vector<Eigen::MatrixXd> W(T);

  const char* step = "";
  for (int iter = 0; iter < config.iterations; ++iter) {
    try {
      step = "measurement variances";
      for (int t = 0; t < T; ++t) {
        v[t] = model.v_base[t];
        if (reweighted)
          for (Eigen::Index i = 0; i < v[t].size(); ++i)
            v[t](i) *= delta[static_cast<std::size_t>(model.group[t](i))];
      }

      step = "ffbs (eta)";
      const Eigen::Index bcol = 0;
      for (int t = 0; t < T; ++t) {
        const Eigen::Index col =
            config.beta_mode == BetaMode::shared ? bcol : t;
        x_beta[t] = model.X_obs[t] * beta.col(col);
        ztilde[t] = model.z[t] - x_beta[t] - xi[t];
        if (t >= 1) W[t] = sigma_k2 * model.Wstar[t];
      }
      bool pinv_used = false;
      KalmanMoments moments = kalman_filter(
          ztilde, model.S_obs, v, model.M, W, sigma_k2 * model.K1star);
      eta = backward_sample(moments, model.M, rng, &pinv_used);
      if (pinv_used && !pinv_noted) {
        out.notes.push_back(
            "backward sampler used spectral pseudo-inverse for a singular "
            "predicted covariance");
        pinv_noted = true;
      }

      step = "xi";
      for (int t = 0; t < T; ++t) {
        s_eta[t] = model.S_obs[t] * eta[t];
        if (model.z[t].size() > 0)
          xi[t] = sample_xi(model.z[t], x_beta[t], s_eta[t], v[t],
                            sigma_xi2(t), rng);
      }

      step = "beta";
      beta = sample_beta(model.z, xi, s_eta, model.X_obs, v,
                         config.sigma_beta2, mu_beta, config.beta_mode, rng);

      step = "sigma_xi2";
      for (int t = 0; t < T; ++t) sigma_xi2(t) = sample_sigma_xi(xi[t], rng);

      step = "sigma_k2";
      sigma_k2 = sample_sigma_k(eta, precomp, model.M, rng);

      if (reweighted) {
        step = "delta";
        double sum[2] = {0.0, 0.0};
        long count[2] = {0, 0};
        for (int t = 0; t < T; ++t) {
          const Eigen::Index col =
              config.beta_mode == BetaMode::shared ? bcol : t;
          Eigen::VectorXd resid = model.z[t] - model.X_obs[t] * beta.col(col) -
                                  s_eta[t] - xi[t];
          for (Eigen::Index i = 0; i < resid.size(); ++i) {
            const int g = model.group[t](i);
            sum[g] += resid(i) * resid(i) / model.v_base[t](i);
            ++count[g];
          }
        }
        auto [d1, d2] = sample_delta(sum[0], sum[1], count[0], count[1], rng);
        delta = {d1, d2};
      }
    } catch (const std::exception& e) {
      throw MstmError("gibbs chain " + std::to_string(chain_id) +
                      " aborted at iteration " + std::to_string(iter + 1) +
                      " (" + step + "): " + e.what());
    }

    if (iter >= config.burn_in) {
      Eigen::MatrixXd eta_mat(r, T);
      for (int t = 0; t < T; ++t) eta_mat.col(t) = eta[t];
      out.eta.push_back(std::move(eta_mat));
      Eigen::VectorXd xi_stack(out.xi_offsets[T]);
      for (int t = 0; t < T; ++t)
        xi_stack.segment(out.xi_offsets[t], model.z[t].size()) = xi[t];
      out.xi.push_back(std::move(xi_stack));
      out.beta.push_back(beta);
      out.sigma_k2.push_back(sigma_k2);
      out.sigma_xi2.push_back(sigma_xi2);
      if (reweighted) out.delta.push_back(delta);
    }
  }
  return out;
}

}  // namespace

std::vector<ChainDraws> gibbs_run(const GibbsModelView& model,
                                  const GibbsConfig& config) {
  model.validate();
  if (config.iterations < 1 || config.burn_in < 0 ||
      config.burn_in >= config.iterations)
    throw MstmError("gibbs: need 0 <= burn_in < iterations");
  if (config.chains < 1) throw MstmError("gibbs: chains must be >= 1");
  if (config.variance_mode == VarianceMode::reweighted) {
    if (model.group.size() != static_cast<std::size_t>(model.T))
      throw MstmError("gibbs: reweighted mode requires per-observation groups");
    for (int t = 0; t < model.T; ++t) {
      if (model.group[t].size() != model.z[t].size())
        throw MstmError("gibbs: group assignment length mismatch");
      if (model.z[t].size() > 0 &&
          ((model.group[t].array() < 0) || (model.group[t].array() > 1)).any())
        throw MstmError("gibbs: group ids must be 0 or 1");
    }
  }

  const SigmaKPrecomp precomp = SigmaKPrecomp::build(model.K1star, model.Wstar);
  std::string rank_note;
  if (precomp.shape_dims < model.T * model.r)
    rank_note = "sigma_K^2 conditional uses pseudo-inverse quadratic forms; "
                "innovation dimensions counted: " +
                std::to_string(precomp.shape_dims) + " of " +
                std::to_string(model.T * model.r);

  std::vector<ChainDraws> chains;
  chains.reserve(config.chains);
  if (config.chains == 1) {
    chains.push_back(run_chain(model, config, precomp, 0));
  } else {
    std::vector<std::future<ChainDraws>> futures;
    futures.reserve(config.chains);
    for (int c = 0; c < config.chains; ++c)
      futures.push_back(std::async(std::launch::async, [&, c] {
        return run_chain(model, config, precomp, c);
      }));
    for (auto& f : futures) chains.push_back(f.get());
  }
  if (!rank_note.empty())
    for (auto& c : chains) c.notes.insert(c.notes.begin(), rank_note);
  return chains;
}

}  // namespace mstm
