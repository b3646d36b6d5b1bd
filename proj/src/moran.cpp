#include "mstm/moran.hpp"

#include <string>

#include "mstm/errors.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

Eigen::MatrixXd mi_operator(const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw MstmError("mi_operator: A is not square");
  if (X.cols() > 0 && X.rows() != A.rows())
    throw MstmError("mi_operator: X rows (" + std::to_string(X.rows()) +
                    ") do not match A dimension (" + std::to_string(A.rows()) +
                    ")");
  if (X.cols() == 0) return symmetrize(A);
  Eigen::MatrixXd C =
      Eigen::MatrixXd::Identity(A.rows(), A.rows()) - column_space_projector(X).P;
  return symmetrize(C * A * C);
}

MiBasis mi_basis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A, int r) {
  if (A.rows() != A.cols()) throw MstmError("mi_basis: A is not square");
  if (X.cols() > 0 && X.rows() != A.rows())
    throw MstmError("mi_basis: X rows do not match A dimension");
  const int n = static_cast<int>(A.rows());

  Projector proj = column_space_projector(X);
  const int available = n - proj.rank;
  if (r < 1 || r > available)
    throw MstmError("mi_basis: r=" + std::to_string(r) +
                    " outside [1, N - rank(X)] = [1, " +
                    std::to_string(available) + "]");

  // Orthonormal basis U of C(X)^perp from the projector's null space; the
  // operator restricted there is U' A U, and lifting its eigenvectors back
  // keeps every column exactly orthogonal to X (zero eigenvalues included).
  Eigen::MatrixXd U;
  if (proj.rank == 0) {
    U = Eigen::MatrixXd::Identity(n, n);
  } else {
    SymmetricEigen pe = sym_eig_sorted(proj.P);
    U = pe.vectors.rightCols(available);
  }

  SymmetricEigen eig = sym_eig_sorted(symmetrize(U.transpose() * A * U));

  MiBasis out;
  out.r = r;
  out.available = available;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > 0.0) ++out.positive;
  out.eigenvalues = eig.values.head(r);
  out.S = U * eig.vectors.leftCols(r);
  apply_sign_convention(out.S);
  return out;
}

Eigen::MatrixXd basis_rows_for(const MiBasis& basis,
                               const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), basis.S.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= basis.S.rows())
      throw MstmError("basis_rows_for: row " + std::to_string(rows[k]) +
                      " outside basis support");
    out.row(static_cast<Eigen::Index>(k)) = basis.S.row(rows[k]);
  }
  return out;
}

}  // namespace mstm
