#pragma once

// Shared test oracles. Everything here is independent of the library's
// filter/sampler code paths: conditioning is done by dense joint-Gaussian
// algebra, and reference CDFs come from closed forms (boost::math for the
// incomplete gamma).

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <vector>

#include "mstm/rng.hpp"

namespace oracle {

// One state-space instance: z[t] = S[t] eta_t + e_t, e_t ~ N(0, diag(v[t])),
// eta_t = M[t] eta_{t-1} + u_t, u_t ~ N(0, W[t]), eta_0 ~ N(0, K1).
struct Ssm {
  std::vector<Eigen::VectorXd> z;
  std::vector<Eigen::MatrixXd> S;
  std::vector<Eigen::VectorXd> v;
  std::vector<Eigen::MatrixXd> M;  // index 0 unused
  std::vector<Eigen::MatrixXd> W;  // index 0 unused
  Eigen::MatrixXd K1;

  int T() const { return static_cast<int>(z.size()); }
  int r() const { return static_cast<int>(K1.rows()); }
};

// E(eta_t | z_{0..upto}) and covariances by brute-force conditioning of the
// stacked joint Gaussian. upto = -1 conditions on nothing.
struct ConditionedMoments {
  std::vector<Eigen::VectorXd> mean;  // per t
  std::vector<Eigen::MatrixXd> cov;   // per t (marginal blocks)
};

inline ConditionedMoments condition_on_prefix(const Ssm& ssm, int upto) {
  const int T = ssm.T();
  const int r = ssm.r();

  // joint covariance of stacked eta
  std::vector<Eigen::MatrixXd> diag_cov(T);
  diag_cov[0] = ssm.K1;
  for (int t = 1; t < T; ++t)
    diag_cov[t] = ssm.M[t] * diag_cov[t - 1] * ssm.M[t].transpose() + ssm.W[t];

  Eigen::MatrixXd Sigma(T * r, T * r);
  for (int s = 0; s < T; ++s) {
    Sigma.block(s * r, s * r, r, r) = diag_cov[s];
    Eigen::MatrixXd cross = diag_cov[s];  // cov(eta_t, eta_s) for t > s
    for (int t = s + 1; t < T; ++t) {
      cross = ssm.M[t] * cross;
      Sigma.block(t * r, s * r, r, r) = cross;
      Sigma.block(s * r, t * r, r, r) = cross.transpose();
    }
  }

  // stacked measurements for t <= upto
  int n = 0;
  for (int t = 0; t <= upto; ++t) n += static_cast<int>(ssm.z[t].size());

  ConditionedMoments out;
  out.mean.assign(T, Eigen::VectorXd::Zero(r));
  out.cov.resize(T);
  if (n == 0) {
    for (int t = 0; t < T; ++t) out.cov[t] = Sigma.block(t * r, t * r, r, r);
    return out;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, T * r);
  Eigen::VectorXd zs(n), vs(n);
  int row = 0;
  for (int t = 0; t <= upto; ++t) {
    const int nt = static_cast<int>(ssm.z[t].size());
    if (nt == 0) continue;
    H.block(row, t * r, nt, r) = ssm.S[t];
    zs.segment(row, nt) = ssm.z[t];
    vs.segment(row, nt) = ssm.v[t];
    row += nt;
  }

  Eigen::MatrixXd Szz = H * Sigma * H.transpose();
  Szz.diagonal() += vs;
  Eigen::MatrixXd Sez = Sigma * H.transpose();
  Eigen::MatrixXd gain = Sez * Szz.inverse();
  Eigen::VectorXd mean_all = gain * zs;
  Eigen::MatrixXd cov_all = Sigma - gain * Sez.transpose();

  for (int t = 0; t < T; ++t) {
    out.mean[t] = mean_all.segment(t * r, r);
    out.cov[t] = cov_all.block(t * r, t * r, r, r);
  }
  return out;
}

// --- random instances -------------------------------------------------------

inline Eigen::MatrixXd random_matrix(int rows, int cols, mstm::RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_pd(int n, mstm::RngStream& rng,
                                 double ridge = 0.5) {
  Eigen::MatrixXd a = random_matrix(n, n, rng);
  return a * a.transpose() / static_cast<double>(n) +
         ridge * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_psd(int n, mstm::RngStream& rng) {
  Eigen::MatrixXd a = random_matrix(n, n, rng);
  return a * a.transpose() / static_cast<double>(n);
}

inline Eigen::MatrixXd random_orthonormal(int n, int r, mstm::RngStream& rng) {
  Eigen::MatrixXd a = random_matrix(n, r, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return Eigen::MatrixXd(qr.householderQ()).leftCols(r);
}

// Erdos-Renyi adjacency, edge probability p, guaranteed symmetric 0/1.
inline Eigen::MatrixXd random_er_adjacency(int n, double p,
                                           mstm::RngStream& rng) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) A(i, j) = A(j, i) = 1.0;
  return A;
}

// --- reference distributions ------------------------------------------------

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// InverseGamma(shape a, scale b): F(x) = Q(a, b/x) (upper regularized gamma).
inline double inv_gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_q(shape, scale / x);
}

// Kolmogorov-Smirnov statistic of draws against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> draws, Cdf cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// alpha = 0.01 asymptotic critical value c(alpha)/sqrt(n), c = 1.62762.
inline double ks_critical_001(std::size_t n) {
  return 1.62762 / std::sqrt(static_cast<double>(n));
}

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double var_of(const std::vector<double>& x) {
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace oracle
