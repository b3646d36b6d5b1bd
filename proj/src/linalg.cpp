#include "mstm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mstm/errors.hpp"

namespace mstm {

void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      double a = std::abs(vectors(i, j));
      if (a > best) {  // strict: ties keep the lowest index
        best = a;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

SymmetricEigen sym_eig_sorted(const Eigen::MatrixXd& R) {
  if (R.rows() != R.cols())
    throw MstmError("sym_eig_sorted: matrix is not square");
  const double nrm = R.norm();
  const double asym = (R - R.transpose()).norm();
  if (asym > 1e-8 * nrm)
    throw MstmError("sym_eig_sorted: matrix is asymmetric beyond tolerance");

  const Eigen::Index n = R.rows();
  Eigen::MatrixXd B = symmetrize(R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  double shift = 0.0;
  if (solver.info() != Eigen::Success) {
    // The QL iteration can stall on spectra spanning many orders of
    // magnitude. A diagonal shift keeps the eigenvectors and moves every
    // eigenvalue by exactly the shift, so retrying shifted and subtracting
    // afterwards is the same decomposition along a different numerical path.
    const double scale = std::max(B.cwiseAbs().maxCoeff(), 1.0);
    for (double rel : {1e-14, 1e-12, 1e-10, 1e-8}) {
      shift = rel * scale;
      solver.compute(B + shift * Eigen::MatrixXd::Identity(n, n));
      if (solver.info() == Eigen::Success) break;
    }
    if (solver.info() != Eigen::Success)
      throw MstmError("sym_eig_sorted: eigendecomposition failed");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::VectorXd& ev = solver.eigenvalues();
  // Stable sort on the solver's ascending output keeps tied eigenvalues in
  // their original order (identity stays the identity).
  std::stable_sort(order.begin(), order.end(),
                   [&ev](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = ev(order[static_cast<std::size_t>(j)]) - shift;
    out.vectors.col(j) = solver.eigenvectors().col(order[static_cast<std::size_t>(j)]);
  }
  apply_sign_convention(out.vectors);
  return out;
}

Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& R) {
  if (R.rows() != R.cols())
    throw MstmError("nearest_psd: matrix is not square");
  SymmetricEigen eig = sym_eig_sorted(symmetrize(R));
  Eigen::VectorXd clamped = eig.values.cwiseMax(0.0);
  return symmetrize(eig.vectors * clamped.asDiagonal() * eig.vectors.transpose());
}

Projector column_space_projector(const Eigen::MatrixXd& X) {
  Projector out;
  const Eigen::Index n = X.rows();
  out.P = Eigen::MatrixXd::Zero(n, n);
  if (X.cols() == 0 || n == 0) return out;

  SymmetricEigen gram = sym_eig_sorted(X.transpose() * X);
  const double lmax = gram.values.size() > 0 ? gram.values(0) : 0.0;
  if (lmax <= 0.0) return out;  // X numerically zero
  const double tol = 1e-10 * lmax;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(gram.values.size());
  for (Eigen::Index i = 0; i < gram.values.size(); ++i) {
    if (gram.values(i) > tol) {
      inv(i) = 1.0 / gram.values(i);
      ++out.rank;
    }
  }
  Eigen::MatrixXd gram_pinv =
      gram.vectors * inv.asDiagonal() * gram.vectors.transpose();
  out.P = symmetrize(X * gram_pinv * X.transpose());
  return out;
}

Eigen::MatrixXd sym_pinv(const Eigen::MatrixXd& R, double rel_tol,
                         int* rank_out) {
  SymmetricEigen eig = sym_eig_sorted(R);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    scale = std::max(scale, std::abs(eig.values(i)));
  const double tol = rel_tol * scale;

  int rank = 0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (std::abs(eig.values(i)) > tol) {
      inv(i) = 1.0 / eig.values(i);
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return symmetrize(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
}

}  // namespace mstm
