#pragma once

#include <Eigen/Dense>

// Variational posterior state of the sparse GP (owned conceptually by the
// trainer; defined here so the Gaussian machinery can form predictives
// without a circular include).

namespace igp::svgp {

/// Inducing inputs Z plus the free parameters of q(u) = N(m, S) with
/// S = ls * ls^T; ls is lower triangular with positive diagonal, so S is
/// positive definite by construction.
struct VariationalState {
  Eigen::VectorXd z;
  Eigen::VectorXd vm;
  Eigen::MatrixXd ls;

  int num_inducing() const { return static_cast<int>(z.size()); }
  Eigen::MatrixXd s() const { return ls * ls.transpose(); }
};

}  // namespace igp::svgp
