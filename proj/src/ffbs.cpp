#include "mstm/ffbs.hpp"

#include <Eigen/Dense>
#include <string>

#include "mstm/errors.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

KalmanMoments kalman_filter(const std::vector<Eigen::VectorXd>& z,
                            const std::vector<Eigen::MatrixXd>& S,
                            const std::vector<Eigen::VectorXd>& v,
                            const std::vector<Eigen::MatrixXd>& M,
                            const std::vector<Eigen::MatrixXd>& W,
                            const Eigen::MatrixXd& K1) {
  const std::size_t T = z.size();
  if (S.size() != T || v.size() != T || M.size() != T || W.size() != T)
    throw MstmError("kalman_filter: per-time input lists have unequal length");
  if (T == 0) throw MstmError("kalman_filter: T must be >= 1");
  const Eigen::Index r = K1.rows();

  KalmanMoments out;
  out.pred_mean.resize(T);
  out.pred_cov.resize(T);
  out.filt_mean.resize(T);
  out.filt_cov.resize(T);

  for (std::size_t t = 0; t < T; ++t) {
    if (t == 0) {
      out.pred_mean[t] = Eigen::VectorXd::Zero(r);
      out.pred_cov[t] = symmetrize(K1);
    } else {
      out.pred_mean[t] = M[t] * out.filt_mean[t - 1];
      out.pred_cov[t] =
          symmetrize(M[t] * out.filt_cov[t - 1] * M[t].transpose() + W[t]);
    }

    const Eigen::Index nt = z[t].size();
    if (nt == 0) {
      out.filt_mean[t] = out.pred_mean[t];
      out.filt_cov[t] = out.pred_cov[t];
      continue;
    }
    if (S[t].rows() != nt || S[t].cols() != r || v[t].size() != nt)
      throw MstmError("kalman_filter: dimension mismatch at t=" +
                      std::to_string(t + 1));

    Eigen::MatrixXd F = symmetrize(S[t] * out.pred_cov[t] * S[t].transpose());
    F.diagonal() += v[t];

    // lambda_min(F) >= min v because S P S' is PSD; an extreme spread means
    // LDLT pivots are rounding noise and the solve must go through the
    // spectrum instead (near-exact observations against a vague prior).
    const double min_v = v[t].minCoeff();
    const double max_f = F.cwiseAbs().maxCoeff();
    bool direct = min_v > 0.0 && max_f < 1e12 * min_v;

    Eigen::MatrixXd gain;
    if (direct) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(F);
      if (ldlt.info() == Eigen::Success &&
          (ldlt.vectorD().array() > 0.0).all()) {
        // gain K = P S' F^{-1}, computed as (F^{-1} (S P))'
        gain = ldlt.solve(S[t] * out.pred_cov[t]).transpose();
      } else {
        direct = false;
      }
    }
    if (!direct) {
      SymmetricEigen fe = sym_eig_sorted(F);
      const double lmax = fe.values(0);
      if (lmax <= 0.0 || fe.values(nt - 1) < -1e-8 * lmax)
        throw MstmError("kalman_filter: innovation covariance not positive "
                        "definite at t=" + std::to_string(t + 1));
      // directions below the cutoff carry no recoverable information: the
      // corresponding exact gain component is zero
      const double cutoff = 1e-14 * lmax;
      Eigen::VectorXd inv = Eigen::VectorXd::Zero(nt);
      for (Eigen::Index i = 0; i < nt; ++i)
        if (fe.values(i) > cutoff) inv(i) = 1.0 / fe.values(i);
      gain = out.pred_cov[t] * S[t].transpose() * fe.vectors *
             inv.asDiagonal() * fe.vectors.transpose();
    }

    out.filt_mean[t] =
        out.pred_mean[t] + gain * (z[t] - S[t] * out.pred_mean[t]);
    if (direct) {
      out.filt_cov[t] = symmetrize(
          (Eigen::MatrixXd::Identity(r, r) - gain * S[t]) * out.pred_cov[t]);
    } else {
      // Joseph form stays PSD under the truncated gain
      Eigen::MatrixXd A = Eigen::MatrixXd::Identity(r, r) - gain * S[t];
      out.filt_cov[t] =
          symmetrize(A * out.pred_cov[t] * A.transpose() +
                     gain * v[t].asDiagonal() * gain.transpose());
    }
  }
  return out;
}

namespace {
// Backward gain J_t = P_{t|t} M[t+1]' P_{t+1|t}^{-1}.
Eigen::MatrixXd backward_gain(const KalmanMoments& m,
                              const std::vector<Eigen::MatrixXd>& M,
                              std::size_t t, bool* pinv_used) {
  int rank = 0;
  const Eigen::MatrixXd pinv = sym_pinv(m.pred_cov[t + 1], 1e-12, &rank);
  if (rank < m.pred_cov[t + 1].rows() && pinv_used) *pinv_used = true;
  return m.filt_cov[t] * M[t + 1].transpose() * pinv;
}
}  // namespace

Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& cov, RngStream& rng) {
  SymmetricEigen eig = sym_eig_sorted(cov);
  Eigen::VectorXd root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return mean + eig.vectors * (root.asDiagonal() * rng.normal_vector(mean.size()));
}

std::vector<Eigen::VectorXd> backward_sample(const KalmanMoments& moments,
                                             const std::vector<Eigen::MatrixXd>& M,
                                             RngStream& rng, bool* pinv_used) {
  const std::size_t T = moments.filt_mean.size();
  if (M.size() != T)
    throw MstmError("backward_sample: transition list length mismatch");
  std::vector<Eigen::VectorXd> draw(T);
  draw[T - 1] = mvn_draw(moments.filt_mean[T - 1], moments.filt_cov[T - 1], rng);
  for (std::size_t ti = T - 1; ti-- > 0;) {
    Eigen::MatrixXd J = backward_gain(moments, M, ti, pinv_used);
    Eigen::VectorXd mean =
        moments.filt_mean[ti] + J * (draw[ti + 1] - moments.pred_mean[ti + 1]);
    Eigen::MatrixXd cov = symmetrize(
        moments.filt_cov[ti] - J * moments.pred_cov[ti + 1] * J.transpose());
    draw[ti] = mvn_draw(mean, cov, rng);
  }
  return draw;
}

SmootherMoments rts_smoother(const KalmanMoments& moments,
                             const std::vector<Eigen::MatrixXd>& M,
                             bool* pinv_used) {
  const std::size_t T = moments.filt_mean.size();
  if (M.size() != T)
    throw MstmError("rts_smoother: transition list length mismatch");
  SmootherMoments out;
  out.mean.resize(T);
  out.cov.resize(T);
  out.mean[T - 1] = moments.filt_mean[T - 1];
  out.cov[T - 1] = moments.filt_cov[T - 1];
  for (std::size_t ti = T - 1; ti-- > 0;) {
    Eigen::MatrixXd J = backward_gain(moments, M, ti, pinv_used);
    out.mean[ti] =
        moments.filt_mean[ti] + J * (out.mean[ti + 1] - moments.pred_mean[ti + 1]);
    out.cov[ti] = symmetrize(
        moments.filt_cov[ti] +
        J * (out.cov[ti + 1] - moments.pred_cov[ti + 1]) * J.transpose());
  }
  return out;
}

}  // namespace mstm
