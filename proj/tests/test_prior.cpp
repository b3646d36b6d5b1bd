#include <doctest.h>

#include <cmath>

#include "mstm/linalg.hpp"
#include "mstm/prior.hpp"
#include "test_support.hpp"

using namespace mstm;

namespace {
double frobenius_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& S,
                           const Eigen::MatrixXd& C) {
  return (P - S * C.inverse() * S.transpose()).norm();
}
}  // namespace

TEST_CASE("k_star recovers the core of a reconstructable target") {
  RngStream rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd S = oracle::random_orthonormal(12, 4, rng);
    Eigen::MatrixXd C0 = oracle::random_pd(4, rng);
    Eigen::MatrixXd P = S * C0.inverse() * S.transpose();
    KStarResult res = k_star(S, P);
    CHECK((res.K - C0).norm() <= 1e-8 * C0.norm());
  }
}

TEST_CASE("k_star inverts a positive-definite projected target directly") {
  RngStream rng(33);
  Eigen::MatrixXd S = oracle::random_orthonormal(10, 3, rng);
  Eigen::MatrixXd P = oracle::random_pd(10, rng);
  Eigen::MatrixXd core = symmetrize(S.transpose() * P * S);
  KStarResult res = k_star(S, P);
  CHECK_FALSE(res.floored);
  CHECK((res.K - core.inverse()).norm() <= 1e-10 * res.K.norm());
}

TEST_CASE("k_star closed form beats random positive-definite candidates") {
  RngStream rng(35);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd S = oracle::random_orthonormal(8, 3, rng);
    Eigen::MatrixXd P = symmetrize(oracle::random_matrix(8, 8, rng));
    KStarResult res = k_star(S, P);
    const double best = frobenius_objective(P, S, res.K);
    for (int c = 0; c < 200; ++c) {
      Eigen::MatrixXd cand = oracle::random_pd(3, rng, 0.05);
      CHECK(best <= frobenius_objective(P, S, cand) + 1e-6);
    }
  }
}

TEST_CASE("k_star output is positive definite even for indefinite targets") {
  RngStream rng(37);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd S = oracle::random_orthonormal(9, 4, rng);
    // strongly indefinite target
    Eigen::MatrixXd P = symmetrize(oracle::random_matrix(9, 9, rng)) -
                        2.0 * Eigen::MatrixXd::Identity(9, 9);
    KStarResult res = k_star(S, P);
    SymmetricEigen eig = sym_eig_sorted(res.K);
    CHECK(eig.values.minCoeff() > 0.0);
    CHECK((res.K - res.K.transpose()).norm() <= 1e-12 * res.K.norm());
  }
}

TEST_CASE("multi-target minimizer averages the projected targets") {
  RngStream rng(39);
  Eigen::MatrixXd S = oracle::random_orthonormal(10, 3, rng);
  Eigen::MatrixXd P = oracle::random_pd(10, rng);
  KStarResult one = k_star(S, P);
  KStarResult three = k_star_multi({S, S, S}, {P, P, P});
  CHECK((one.K - three.K).norm() <= 1e-12 * one.K.norm());

  // distinct targets: core is the average
  Eigen::MatrixXd P2 = oracle::random_pd(10, rng);
  KStarResult mixed = k_star_multi({S, S}, {P, P2});
  Eigen::MatrixXd avg_core =
      symmetrize(S.transpose() * (0.5 * (P + P2)) * S);
  CHECK((mixed.K.inverse() - avg_core).norm() <= 1e-8 * avg_core.norm());
}

TEST_CASE("covariance-form minimizer") {
  RngStream rng(41);
  Eigen::MatrixXd P = symmetrize(oracle::random_matrix(5, 5, rng));
  CHECK((k_star_covariance_form(Eigen::MatrixXd::Identity(5, 5), P) -
         nearest_psd(P)).norm() <= 1e-12);

  Eigen::MatrixXd S = oracle::random_orthonormal(7, 3, rng);
  Eigen::MatrixXd Ppsd = oracle::random_psd(7, rng);
  Eigen::MatrixXd core = symmetrize(S.transpose() * Ppsd * S);
  CHECK((k_star_covariance_form(S, Ppsd) - core).norm() <= 1e-10);

  Eigen::MatrixXd Pind = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(2, 1);
  e1(0, 0) = 1.0;
  Eigen::MatrixXd c = k_star_covariance_form(e1, Pind);
  REQUIRE(c.rows() == 1);
  CHECK(c(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("w_star base cases") {
  RngStream rng(43);
  Eigen::MatrixXd K = oracle::random_pd(3, rng);
  Eigen::MatrixXd Kprev = oracle::random_pd(3, rng);

  WStarResult zero_m = w_star(K, Kprev, Eigen::MatrixXd::Zero(3, 3));
  CHECK_FALSE(zero_m.lifted);
  CHECK((zero_m.W - K).norm() <= 1e-12 * K.norm());

  WStarResult no_innovation = w_star(K, K, Eigen::MatrixXd::Identity(3, 3));
  CHECK_FALSE(no_innovation.lifted);
  CHECK(no_innovation.W.norm() <= 1e-12 * K.norm());
}

TEST_CASE("w_star lifts an indefinite innovation shape") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  WStarResult res = w_star(I, 2.0 * I, I);  // raw = -I
  CHECK(res.lifted);
  CHECK(res.W.norm() == doctest::Approx(0.0));
}

TEST_CASE("lifting flag matches positive semidefiniteness of the raw shape") {
  RngStream rng(45);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd K = oracle::random_pd(4, rng);
    Eigen::MatrixXd Kprev = oracle::random_pd(4, rng);
    Eigen::MatrixXd M = oracle::random_matrix(4, 4, rng) * 0.5;
    Eigen::MatrixXd raw = symmetrize(K - M * Kprev * M.transpose());
    SymmetricEigen eig = sym_eig_sorted(raw);
    WStarResult res = w_star(K, Kprev, M);
    const bool raw_psd =
        eig.values.minCoeff() >= -1e-10 * std::max(eig.values(0), 0.0);
    CHECK(res.lifted == !raw_psd);
    if (raw_psd) CHECK((res.W - raw).norm() == doctest::Approx(0.0));
    SymmetricEigen we = sym_eig_sorted(res.W);
    CHECK(we.values.minCoeff() >= -1e-10 * std::max(we.values(0), 1.0));
  }
}
