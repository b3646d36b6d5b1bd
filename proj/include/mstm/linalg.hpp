#pragma once

#include <Eigen/Dense>

namespace mstm {

// Dense symmetric eigendecomposition with a fixed ordering and sign
// convention so bases built from it are bit-stable across runs:
//   - eigenvalues sorted descending (ties keep the solver's order),
//   - each eigenvector's largest-magnitude entry is positive (ties broken
//     by lowest index).
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns aligned with values, orthonormal
};

// Throws if R deviates from symmetry by more than 1e-8 * ||R||_F.
SymmetricEigen sym_eig_sorted(const Eigen::MatrixXd& R);

// Flip eigenvector columns in place so the largest-magnitude entry of each
// column is positive (ties broken by lowest index).
void apply_sign_convention(Eigen::MatrixXd& vectors);

// Frobenius-nearest symmetric positive semidefinite matrix (Higham):
// symmetrize, eigendecompose, clamp negative eigenvalues to zero.
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& R);

// Orthogonal projector onto the column space of X, with the rank obtained
// from the spectral pseudo-inverse of X'X (relative tolerance 1e-10).
// p = 0 gives the zero projector.
struct Projector {
  Eigen::MatrixXd P;
  int rank = 0;
};
Projector column_space_projector(const Eigen::MatrixXd& X);

// Moore-Penrose pseudo-inverse of a symmetric matrix via its spectrum.
// Eigenvalues with |lambda| <= rel_tol * max|lambda| are treated as zero.
// rank_out (optional) receives the numerical rank.
Eigen::MatrixXd sym_pinv(const Eigen::MatrixXd& R, double rel_tol = 1e-12,
                         int* rank_out = nullptr);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& R) {
  return 0.5 * (R + R.transpose());
}

}  // namespace mstm
