#include <doctest.h>

#include <string>

#include "mstm/errors.hpp"
#include "mstm/graph.hpp"
#include "mstm/linalg.hpp"
#include "mstm/moran.hpp"
#include "test_support.hpp"

using namespace mstm;

TEST_CASE("mi_operator hand computation on two units") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  Eigen::MatrixXd G = mi_operator(X, A);
  Eigen::MatrixXd expected(2, 2);
  expected << -0.5, 0.5, 0.5, -0.5;
  CHECK((G - expected).norm() <= 1e-12);
}

TEST_CASE("mi_operator degenerate cases") {
  RngStream rng(1);
  Eigen::MatrixXd X = oracle::random_matrix(4, 2, rng);
  CHECK(mi_operator(X, Eigen::MatrixXd::Zero(4, 4)).norm() ==
        doctest::Approx(0.0));
  Eigen::MatrixXd A = oracle::random_er_adjacency(4, 0.5, rng);
  CHECK((mi_operator(Eigen::MatrixXd(4, 0), A) - A).norm() ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(mi_operator(oracle::random_matrix(3, 1, rng), A), MstmError);
}

TEST_CASE("mi_basis on the path graph with an intercept") {
  AdjacencyGraph g = AdjacencyGraph::from_edge_list("a b\nb c");
  Eigen::MatrixXd A = g.adjacency_matrix();
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  MiBasis basis = mi_basis(X, A, 1);

  CHECK(basis.r == 1);
  CHECK(basis.available == 2);
  CHECK(basis.S.col(0).norm() == doctest::Approx(1.0));
  CHECK(std::abs(basis.S.col(0).sum()) <= 1e-12);  // orthogonal to ones

  // eigen equation against the operator itself
  Eigen::MatrixXd G = mi_operator(X, A);
  CHECK((G * basis.S.col(0) - basis.eigenvalues(0) * basis.S.col(0)).norm() <=
        1e-10);
  // top eigenvalue: no vector orthogonal to ones does better (Rayleigh)
  SymmetricEigen ge = sym_eig_sorted(G);
  CHECK(basis.eigenvalues(0) == doctest::Approx(ge.values(0)));
}

TEST_CASE("mi_basis nonconfounding and orthonormality over random instances") {
  RngStream rng(42);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 10 + rng.uniform_int(40);
    const int p = 1 + rng.uniform_int(3);
    Eigen::MatrixXd A = oracle::random_er_adjacency(n, 0.15, rng);
    Eigen::MatrixXd X = oracle::random_matrix(n, p, rng);
    X.col(0).setOnes();
    const int r = 1 + rng.uniform_int(n - p);
    MiBasis basis = mi_basis(X, A, r);
    CHECK(basis.S.cols() == r);
    CHECK((basis.S.transpose() * X).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((basis.S.transpose() * basis.S -
           Eigen::MatrixXd::Identity(r, r)).norm() <= 1e-10);
  }
}

TEST_CASE("vectors in C(X) are null vectors of the operator") {
  RngStream rng(7);
  Eigen::MatrixXd A = oracle::random_er_adjacency(12, 0.3, rng);
  Eigen::MatrixXd X = oracle::random_matrix(12, 2, rng);
  Eigen::MatrixXd G = mi_operator(X, A);
  CHECK((G * X).cwiseAbs().maxCoeff() <= 1e-10 * A.norm());
}

TEST_CASE("mi_basis rejects infeasible rank with the bound in the message") {
  AdjacencyGraph g = AdjacencyGraph::from_edge_list("a b\nb c");
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  try {
    mi_basis(X, g.adjacency_matrix(), 3);
    FAIL("expected rank bound rejection");
  } catch (const MstmError& e) {
    CHECK(std::string(e.what()).find("N - rank(X)") != std::string::npos);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("basis construction always uses the full prediction support") {
  // identical inputs give identical bases; a row subset is exactly the
  // corresponding rows of the full-support basis
  AdjacencyGraph g = lattice_graph(4, 5);
  Eigen::MatrixXd A = g.adjacency_matrix();
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(20, 1);
  MiBasis basis = mi_basis(X, A, 6);

  CHECK((basis_rows_for(basis, {0, 1, 2}) - basis.S.topRows(3)).norm() ==
        doctest::Approx(0.0));
  Eigen::MatrixXd empty = basis_rows_for(basis, {});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 6);

  std::vector<int> mask;
  for (int i = 0; i < 20; ++i)
    if (i % 3 != 0) mask.push_back(i);
  Eigen::MatrixXd sub = basis_rows_for(basis, mask);
  for (std::size_t k = 0; k < mask.size(); ++k)
    CHECK((sub.row(static_cast<Eigen::Index>(k)) - basis.S.row(mask[k]))
              .norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(basis_rows_for(basis, {20}), MstmError);
  CHECK_THROWS_AS(basis_rows_for(basis, {-1}), MstmError);
}

TEST_CASE("rank sizing: r = 30 fits when 62 eigenvectors are positive") {
  // spectrum with exactly 62 positive directions available
  Eigen::VectorXd d(130);
  for (int i = 0; i < 130; ++i) d(i) = i < 62 ? 2.0 - 0.01 * i : -0.5 - 0.01 * i;
  Eigen::MatrixXd A = d.asDiagonal();
  MiBasis basis = mi_basis(Eigen::MatrixXd(130, 0), A, 30);
  CHECK(basis.positive == 62);
  CHECK(basis.available == 130);
  CHECK(basis.r == 30);
  // "roughly 50%" of the available positive directions
  CHECK(30.0 / basis.positive > 0.4);
  CHECK(30.0 / basis.positive < 0.6);
}

TEST_CASE("mi_basis is deterministic") {
  RngStream rng(77);
  Eigen::MatrixXd A = oracle::random_er_adjacency(25, 0.2, rng);
  Eigen::MatrixXd X = oracle::random_matrix(25, 2, rng);
  MiBasis a = mi_basis(X, A, 10);
  MiBasis b = mi_basis(X, A, 10);
  CHECK((a.S - b.S).norm() == doctest::Approx(0.0));
  CHECK((a.eigenvalues - b.eigenvalues).norm() == doctest::Approx(0.0));
}
