#include <doctest.h>

#include <Eigen/Dense>

#include "mstm/errors.hpp"
#include "mstm/linalg.hpp"
#include "test_support.hpp"

using namespace mstm;

TEST_CASE("sym_eig_sorted orders a diagonal matrix descending") {
  Eigen::MatrixXd R = Eigen::Vector3d(1.0, 3.0, 2.0).asDiagonal();
  SymmetricEigen eig = sym_eig_sorted(R);
  CHECK(eig.values(0) == doctest::Approx(3.0));
  CHECK(eig.values(1) == doctest::Approx(2.0));
  CHECK(eig.values(2) == doctest::Approx(1.0));
  // permuted identity columns
  CHECK(eig.vectors(1, 0) == doctest::Approx(1.0));
  CHECK(eig.vectors(2, 1) == doctest::Approx(1.0));
  CHECK(eig.vectors(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig_sorted maps the identity to itself") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  SymmetricEigen eig = sym_eig_sorted(I);
  CHECK((eig.values.array() == 1.0).all());
  CHECK((eig.vectors - I).norm() == doctest::Approx(0.0));
}

TEST_CASE("sym_eig_sorted solves I - A for the triangle graph") {
  Eigen::MatrixXd A(3, 3);
  A << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3) - A;
  SymmetricEigen eig = sym_eig_sorted(R);
  CHECK(eig.values(0) == doctest::Approx(2.0));
  CHECK(eig.values(1) == doctest::Approx(2.0));
  CHECK(eig.values(2) == doctest::Approx(-1.0));
}

TEST_CASE("sym_eig_sorted rejects asymmetric input") {
  Eigen::MatrixXd R(2, 2);
  R << 1, 2, 0, 1;
  CHECK_THROWS_AS(sym_eig_sorted(R), MstmError);
}

TEST_CASE("sym_eig_sorted reconstruction and orthonormality invariants") {
  RngStream rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 2 + rng.uniform_int(10);
    Eigen::MatrixXd R = symmetrize(oracle::random_matrix(n, n, rng));
    SymmetricEigen eig = sym_eig_sorted(R);
    Eigen::MatrixXd rec =
        eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
    CHECK((rec - R).norm() <= 1e-10 * std::max(1.0, R.norm()));
    CHECK((eig.vectors.transpose() * eig.vectors -
           Eigen::MatrixXd::Identity(n, n))
              .norm() <= 1e-10);
    for (int j = 0; j + 1 < n; ++j) CHECK(eig.values(j) >= eig.values(j + 1));
    // sign convention: largest-magnitude entry positive
    for (int j = 0; j < n; ++j) {
      Eigen::Index arg;
      eig.vectors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(eig.vectors(arg, j) > 0.0);
    }
  }
}

TEST_CASE("nearest_psd is the identity on PSD input") {
  RngStream rng(5);
  Eigen::MatrixXd P = oracle::random_psd(5, rng);
  CHECK((nearest_psd(P) - P).norm() <= 1e-12 * std::max(1.0, P.norm()));
}

TEST_CASE("nearest_psd of a skew matrix is zero") {
  Eigen::MatrixXd R(2, 2);
  R << 0, 1, -1, 0;
  CHECK(nearest_psd(R).norm() == doctest::Approx(0.0));
}

TEST_CASE("nearest_psd beats random PSD candidates in Frobenius distance") {
  RngStream rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd R = oracle::random_matrix(4, 4, rng);
    Eigen::MatrixXd best = nearest_psd(R);
    const double d0 = (R - best).norm();
    for (int c = 0; c < 200; ++c) {
      Eigen::MatrixXd cand = oracle::random_psd(4, rng);
      CHECK(d0 <= (R - cand).norm() + 1e-12);
    }
  }
}

TEST_CASE("nearest_psd idempotence and eigenvalue floor") {
  RngStream rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd R = oracle::random_matrix(5, 5, rng);
    Eigen::MatrixXd P = nearest_psd(R);
    CHECK((nearest_psd(P) - P).norm() <= 1e-12 * std::max(1.0, P.norm()));
    SymmetricEigen eig = sym_eig_sorted(P);
    const double lmax = std::max(eig.values(0), 0.0);
    CHECK(eig.values.minCoeff() >= -1e-10 * std::max(lmax, 1.0));
  }
}

TEST_CASE("column_space_projector of the ones vector averages") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Projector proj = column_space_projector(X);
  CHECK(proj.rank == 1);
  CHECK((proj.P - Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0)).norm() <= 1e-12);
}

TEST_CASE("column_space_projector of square full-rank X is the identity") {
  RngStream rng(3);
  Eigen::MatrixXd X = oracle::random_pd(4, rng);
  Projector proj = column_space_projector(X);
  CHECK(proj.rank == 4);
  CHECK((proj.P - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-8);
}

TEST_CASE("column_space_projector ignores duplicated columns") {
  RngStream rng(7);
  Eigen::MatrixXd x = oracle::random_matrix(6, 1, rng);
  Eigen::MatrixXd xx(6, 2);
  xx << x, x;
  Projector single = column_space_projector(x);
  Projector dup = column_space_projector(xx);
  CHECK(dup.rank == 1);
  CHECK((dup.P - single.P).norm() <= 1e-10);
}

TEST_CASE("column_space_projector handles p = 0 and satisfies PX = X") {
  Projector zero = column_space_projector(Eigen::MatrixXd(4, 0));
  CHECK(zero.rank == 0);
  CHECK(zero.P.norm() == doctest::Approx(0.0));

  RngStream rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd X = oracle::random_matrix(8, 3, rng);
    Projector proj = column_space_projector(X);
    CHECK((proj.P * proj.P - proj.P).norm() <= 1e-8);
    CHECK((proj.P - proj.P.transpose()).norm() <= 1e-12);
    CHECK((proj.P * X - X).norm() <= 1e-8 * X.norm());
  }
}

TEST_CASE("projector is invariant under invertible reparameterization") {
  RngStream rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd X = oracle::random_matrix(10, 3, rng);
    Eigen::MatrixXd G = oracle::random_pd(3, rng);  // invertible
    Projector a = column_space_projector(X);
    Projector b = column_space_projector(X * G);
    CHECK((a.P - b.P).norm() <= 1e-8);
  }
}

TEST_CASE("sym_pinv inverts on the nonzero spectrum") {
  RngStream rng(29);
  Eigen::MatrixXd U = oracle::random_orthonormal(5, 2, rng);
  Eigen::MatrixXd R = U * Eigen::Vector2d(2.0, 0.5).asDiagonal() * U.transpose();
  int rank = 0;
  Eigen::MatrixXd Rp = sym_pinv(R, 1e-12, &rank);
  CHECK(rank == 2);
  CHECK((R * Rp * R - R).norm() <= 1e-10);
  CHECK((Rp * R * Rp - Rp).norm() <= 1e-10);
}
