#include "mstm/prior.hpp"

#include <string>

#include "mstm/errors.hpp"
#include "mstm/linalg.hpp"

namespace mstm {

KStarResult k_star_multi(const std::vector<Eigen::MatrixXd>& S,
                         const std::vector<Eigen::MatrixXd>& P) {
  if (S.empty() || S.size() != P.size())
    throw MstmError("k_star: need matching, nonempty basis/target lists");
  const Eigen::Index r = S[0].cols();
  Eigen::MatrixXd core = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (S[k].cols() != r) throw MstmError("k_star: inconsistent basis ranks");
    if (P[k].rows() != P[k].cols() || P[k].rows() != S[k].rows())
      throw MstmError("k_star: target dimension " + std::to_string(P[k].rows()) +
                      "x" + std::to_string(P[k].cols()) +
                      " does not match basis rows " +
                      std::to_string(S[k].rows()));
    core += S[k].transpose() * P[k] * S[k];
  }
  core = symmetrize(core / static_cast<double>(S.size()));

  SymmetricEigen eig = sym_eig_sorted(core);
  Eigen::VectorXd clamped = eig.values.cwiseMax(0.0);
  const double lmax = clamped.size() > 0 ? clamped(0) : 0.0;
  const double floor = lmax > 0.0 ? 1e-8 * lmax : 1e-8;

  KStarResult out;
  Eigen::VectorXd inv(clamped.size());
  for (Eigen::Index i = 0; i < clamped.size(); ++i) {
    double v = clamped(i);
    if (v < floor) {
      v = floor;
      out.floored = true;
    }
    inv(i) = 1.0 / v;
  }
  out.K = symmetrize(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
  return out;
}

KStarResult k_star(const Eigen::MatrixXd& S, const Eigen::MatrixXd& P) {
  return k_star_multi({S}, {P});
}

Eigen::MatrixXd k_star_covariance_form(const Eigen::MatrixXd& S,
                                       const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() != S.rows())
    throw MstmError("k_star_covariance_form: dimension mismatch");
  return nearest_psd(symmetrize(S.transpose() * P * S));
}

WStarResult w_star(const Eigen::MatrixXd& K_t, const Eigen::MatrixXd& K_prev,
                   const Eigen::MatrixXd& M) {
  Eigen::MatrixXd raw = symmetrize(K_t - M * K_prev * M.transpose());
  SymmetricEigen eig = sym_eig_sorted(raw);
  const Eigen::Index r = raw.rows();
  const double lmax = r > 0 ? eig.values(0) : 0.0;
  const double lmin = r > 0 ? eig.values(r - 1) : 0.0;

  WStarResult out;
  if (lmin < -1e-10 * std::max(lmax, 0.0)) {
    out.lifted = true;
    Eigen::VectorXd clamped = eig.values.cwiseMax(0.0);
    out.W = symmetrize(eig.vectors * clamped.asDiagonal() *
                       eig.vectors.transpose());
  } else {
    out.W = raw;
  }
  return out;
}

}  // namespace mstm
