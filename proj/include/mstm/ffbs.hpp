#pragma once

#include <Eigen/Core>
#include <vector>

#include "mstm/rng.hpp"

namespace mstm {

// Kalman moments for the latent VAR(1) state. All vectors are indexed by t
// (0-based, length T); covariances are re-symmetrized at every step.
struct KalmanMoments {
  std::vector<Eigen::VectorXd> pred_mean;  // eta_{t|t-1} (prior mean at t=0)
  std::vector<Eigen::MatrixXd> pred_cov;   // P_{t|t-1}  (K_1 at t=0)
  std::vector<Eigen::VectorXd> filt_mean;  // eta_{t|t}
  std::vector<Eigen::MatrixXd> filt_cov;   // P_{t|t}
};

// Forward filter for shifted measurements z[t] = S[t] eta_t + e_t,
// e_t ~ N(0, diag(v[t])), with transitions eta_t = M[t] eta_{t-1} + u_t,
// u_t ~ N(0, W[t]) for t >= 1 and prior eta_0 ~ N(0, K1).
//
// M[0] and W[0] are never read. Time points with z[t].size() == 0 skip the
// measurement update. t = 0 is treated as the prior followed by a
// measurement update with z[0].
KalmanMoments kalman_filter(const std::vector<Eigen::VectorXd>& z,
                            const std::vector<Eigen::MatrixXd>& S,
                            const std::vector<Eigen::VectorXd>& v,
                            const std::vector<Eigen::MatrixXd>& M,
                            const std::vector<Eigen::MatrixXd>& W,
                            const Eigen::MatrixXd& K1);

// One joint draw of eta_{0:T-1} from its smoothing distribution. The
// backward gain uses the transition into t+1: J_t = P_{t|t} M[t+1]'
// P_{t+1|t}^{-1}, with a spectral pseudo-inverse when P_{t+1|t} is singular
// (pinv_used reports that, for run metadata).
std::vector<Eigen::VectorXd> backward_sample(const KalmanMoments& moments,
                                             const std::vector<Eigen::MatrixXd>& M,
                                             RngStream& rng,
                                             bool* pinv_used = nullptr);

// Marginal smoothing moments (same gains as backward_sample); the
// deterministic counterpart used for validation.
struct SmootherMoments {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
};
SmootherMoments rts_smoother(const KalmanMoments& moments,
                             const std::vector<Eigen::MatrixXd>& M,
                             bool* pinv_used = nullptr);

// Draw from N(mean, cov) through the spectral square root of cov (negative
// eigenvalues clamped to zero), so PSD-but-singular covariances are fine.
Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& cov, RngStream& rng);

}  // namespace mstm
