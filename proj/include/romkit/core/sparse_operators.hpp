#pragma once

#include <Eigen/Sparse>

#include "romkit/core/boundary.hpp"
#include "romkit/core/operators.hpp"

namespace romkit {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// x -> matrix * x + offset. The offset carries the inhomogeneous boundary data.
struct AffineOperator {
  SparseMatrix matrix;
  Eigen::VectorXd offset;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x + offset; }
};

/// Laplacian of component k (acting on n_cells values), matching laplacian().
AffineOperator laplacian_operator(const Mesh& mesh, const BoundaryConditions& bc, int k = 0);

/// Gradient of a scalar: n_cells values -> 2*n_cells interleaved values.
AffineOperator gradient_operator(const Mesh& mesh, const BoundaryConditions& bc);

/// Divergence of a vector: 2*n_cells interleaved values -> n_cells values.
AffineOperator divergence_operator(const Mesh& mesh, const BoundaryConditions& bc);

/// w -> convective_term(u, u_bc, w, w_bc) for a scalar w, with u frozen.
AffineOperator scalar_convection_operator(const Field& u, const BoundaryConditions& u_bc,
                                          const BoundaryConditions& w_bc, ConvectionScheme scheme);

}  // namespace romkit
