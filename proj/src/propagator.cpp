#include "mstm/propagator.hpp"

#include "mstm/errors.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

Eigen::MatrixXd build_B(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X) {
  if (X.cols() > 0 && S.rows() != X.rows())
    throw MstmError("build_B: S and X are not row-aligned");
  const Eigen::Index r = S.cols();
  const Eigen::Index p = X.cols();
  Eigen::MatrixXd B(r, p + r);
  if (p > 0) B.leftCols(p) = S.transpose() * X;
  B.rightCols(r) = Eigen::MatrixXd::Identity(r, r);
  return B;
}

Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& B, PropagatorMode mode) {
  const Eigen::Index r = B.rows();
  if (B.cols() < r) throw MstmError("mi_propagator: B has fewer than r columns");
  const Eigen::Index p = B.cols() - r;

  if (mode == PropagatorMode::paper_literal) {
    Eigen::MatrixXd G =
        Eigen::MatrixXd::Identity(r, r) - column_space_projector(B).P;
    if (G.norm() <= 1e-8 * static_cast<double>(r))
      throw MstmError(
          "G(B_t, I_r) is identically zero; column space of B_t spans R^r");
    return sym_eig_sorted(G).vectors;
  }

  Eigen::MatrixXd C = B.leftCols(p);  // p = 0 gives the empty design
  // Entries below the nonconfounding tolerance are exact zeros by contract;
  // without this an all-noise S'X block would project onto noise directions.
  if (p > 0 && C.cwiseAbs().maxCoeff() <= 1e-8) C.setZero();
  Eigen::MatrixXd G =
      Eigen::MatrixXd::Identity(r, r) - column_space_projector(C).P;
  return sym_eig_sorted(G).vectors;
}

Eigen::MatrixXd mi_propagator_from(const Eigen::MatrixXd& S,
                                   const Eigen::MatrixXd& X,
                                   PropagatorMode mode) {
  return mi_propagator(build_B(S, X), mode);
}

}  // namespace mstm
