#pragma once

#include <Eigen/Core>

namespace mstm {

enum class PropagatorMode { reduced, paper_literal };

// State-equation design B = (S'X | I_r), r x (p+r).
Eigen::MatrixXd build_B(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X);

// Orthogonal VAR(1) transition matrix from the Moran construction applied to
// the state-equation design.
//
// reduced (default): deconfound against the only nontrivial block of B,
// C = S'X. M collects all r eigenvectors of I_r - P_C in descending
// eigenvalue order, so the leading r - rank(C) columns span C(C)^perp.
//
// paper_literal: apply the Moran operator to B itself. Because B contains an
// identity block its column space is all of R^r, the operator is identically
// zero, and the construction fails with a diagnostic instead of returning
// numerically arbitrary eigenvectors.
Eigen::MatrixXd mi_propagator(const Eigen::MatrixXd& B, PropagatorMode mode);

Eigen::MatrixXd mi_propagator_from(const Eigen::MatrixXd& S,
                                   const Eigen::MatrixXd& X,
                                   PropagatorMode mode);

}  // namespace mstm
