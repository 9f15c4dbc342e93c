#pragma once

#include <string_view>

#include "romkit/core/boundary.hpp"
#include "romkit/core/field.hpp"

namespace romkit {

/// Volume-weighted L2(Omega) inner product, summed over components.
double inner_product(const Field& f, const Field& g);
double l2_norm(const Field& f);

/// Gauss cell gradient of a scalar field. Interior faces use the arithmetic
/// mean of the two cells, boundary faces the value given by `bc`.
Field gradient(const Field& f, const BoundaryConditions& bc);

/// Gauss divergence of a vector field with linearly interpolated face values.
Field divergence(const Field& w, const BoundaryConditions& bc);

/// Compact central Laplacian, applied per component. Dirichlet faces use the
/// half-cell distance to the face, zero-gradient faces contribute nothing.
Field laplacian(const Field& f, const BoundaryConditions& bc);

enum class ConvectionScheme { Central, Upwind };
ConvectionScheme parse_scheme(std::string_view name);
std::string_view to_string(ConvectionScheme scheme);

/// div(u (x) w) from face fluxes of u; w may be scalar or vector. The face
/// value of w is the two-cell mean (central) or the donor cell (upwind).
Field convective_term(const Field& u, const BoundaryConditions& u_bc, const Field& w,
                      const BoundaryConditions& w_bc, ConvectionScheme scheme = ConvectionScheme::Central);

/// Transposed-gradient stress divergence div(nu (grad u)^T), component i being
/// sum_j d_j(nu d_i u_j). Face values of the stress are arithmetic means;
/// boundary faces take the adjacent cell value.
Field transpose_stress_divergence(const Field& nu, const Field& u, const BoundaryConditions& u_bc);

/// nu * Laplacian(u), the pointwise-scaled diffusion used by the eddy-viscosity terms.
Field scaled_laplacian(const Field& nu, const Field& u, const BoundaryConditions& u_bc);

/// Velocity gradient tensor per cell: out[c](i, j) = d u_i / d x_j.
std::vector<Eigen::Matrix2d> velocity_gradient(const Field& u, const BoundaryConditions& u_bc);

}  // namespace romkit
