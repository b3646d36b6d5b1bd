#pragma once

#include <Eigen/Core>
#include <vector>

namespace mstm {

struct KStarResult {
  Eigen::MatrixXd K;   // r x r symmetric positive definite
  bool floored = false;  // eigenvalue floor was applied before inversion
};

struct WStarResult {
  Eigen::MatrixXd W;  // r x r symmetric PSD
  bool lifted = false;  // raw innovation shape was indefinite
};

// Frobenius-optimal prior shape: K* = {A+(S' P S)}^{-1}, where A+ is the
// best positive approximant. Eigenvalues of the PSD core below
// 1e-8 * lambda_max are raised to the floor before inversion so K* is always
// an invertible covariance (floor 1e-8 absolute when the core is zero).
KStarResult k_star(const Eigen::MatrixXd& S, const Eigen::MatrixXd& P);

// Multi-target form: the minimizing core averages the projected targets
// (1/K) sum_k S_k' P_k S_k. k_star is the K = 1 special case.
KStarResult k_star_multi(const std::vector<Eigen::MatrixXd>& S,
                         const std::vector<Eigen::MatrixXd>& P);

// Covariance-form minimizer of ||P - S C S'||_F: A+(S' P S).
Eigen::MatrixXd k_star_covariance_form(const Eigen::MatrixXd& S,
                                       const Eigen::MatrixXd& P);

// Innovation shape W* = K*_t - M K*_{t-1} M', replaced by its best positive
// approximant ("lifting") when indefinite.
WStarResult w_star(const Eigen::MatrixXd& K_t, const Eigen::MatrixXd& K_prev,
                   const Eigen::MatrixXd& M);

// Assembled prior shapes across time. The sampler owns the sigma_K^2 scaling:
// K_t = sigma_K^2 K*_t and W_t = sigma_K^2 W*_t are only ever formed there.
struct PriorShapes {
  std::vector<Eigen::MatrixXd> k_star;  // per t (size T)
  std::vector<Eigen::MatrixXd> w_star;  // per t, index 0 unused (size T)
  std::vector<bool> lifted_flags;       // per t, index 0 always false
  std::vector<bool> floored_flags;      // per t
};

}  // namespace mstm
