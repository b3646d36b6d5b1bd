#pragma once

#include <Eigen/Core>
#include <vector>

namespace mstm {

// Reduced-rank spatial basis from the leading eigenvectors of the Moran
// operator. Rows align with the prediction-support cell ordering; columns
// are orthonormal and exactly orthogonal to the covariate column space, so
// fixed and random effects cannot confound.
struct MiBasis {
  Eigen::MatrixXd S;            // N x r
  Eigen::VectorXd eigenvalues;  // r retained operator eigenvalues, descending
  int r = 0;
  int available = 0;            // N - rank(X): usable basis dimension
  int positive = 0;             // count of positive eigenvalues among available
};

// Moran operator G = (I - P_X) A (I - P_X) with P_X the column-space
// projector of X. p = 0 reduces to A itself.
Eigen::MatrixXd mi_operator(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A);

// First r eigenvectors of the Moran operator by descending algebraic
// eigenvalue, computed inside the orthogonal complement of C(X) so the
// nonconfounding property holds for every retained column (including any
// with zero or negative eigenvalue). Requires 1 <= r <= N - rank(X).
MiBasis mi_basis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A, int r);

// Row subset of the basis (e.g. the observed cells), order preserving.
Eigen::MatrixXd basis_rows_for(const MiBasis& basis,
                               const std::vector<int>& rows);

}  // namespace mstm
