#pragma once

#include <array>
#include <string>
#include <vector>

#include "romkit/core/boundary.hpp"
#include "romkit/core/field.hpp"
#include "romkit/pod.hpp"

namespace romkit {

/// Control function for one parametrized Dirichlet patch. `bc` carries the
/// unit boundary data (`direction` on `patch`, zero on every other Dirichlet
/// patch) so operators can be applied to the lift consistently.
struct LiftingFunction {
  std::string patch;
  std::array<double, 2> direction{1.0, 0.0};
  Field field;
  BoundaryConditions bc;
};

enum class LiftMethod { DiffusionSolve, SnapshotAverage };
LiftMethod parse_lift_method(const std::string& name);
std::string to_string(LiftMethod method);

/// Steady diffusion solve with unit data on `patch` (the value `direction`,
/// per component) and zero on the other Dirichlet patches of `field_bc`.
/// Zero-gradient and outlet patches stay zero-gradient.
LiftingFunction compute_control_function(const MeshPtr& mesh, const BoundaryConditions& field_bc,
                                         const std::string& patch, std::array<double, 2> direction, int components);

/// Alternative recipe: the snapshot average divided by the mean coefficient.
/// `mean_bc` holds the boundary data of the averaged snapshot; it is scaled the
/// same way. The result is unit on `patch` but generally not zero on other
/// inlets, so only the diffusion solve guarantees exact boundary values.
LiftingFunction average_control_function(const SnapshotSet& snapshots, const BoundaryConditions& mean_bc,
                                         const std::string& patch, std::array<double, 2> direction,
                                         const Eigen::VectorXd& coefficients);

/// Column j becomes S_j - sum_p coefficients(p, j) * lift_p.
SnapshotSet homogenize(const SnapshotSet& snapshots, const std::vector<LiftingFunction>& lifts,
                       const Eigen::MatrixXd& coefficients);

/// field + sum_p values[p] * lift_p.
Field reapply(const Field& field, const std::vector<LiftingFunction>& lifts, const std::vector<double>& values);

/// Face values of field - sum_p values[p] * lift_p on every parametrized
/// patch, largest magnitude. Face values come from each field's own boundary
/// conditions; a correctly homogenized snapshot gives zero.
double boundary_residual(const Field& field, const BoundaryConditions& field_bc,
                         const std::vector<LiftingFunction>& lifts, const std::vector<double>& values);

/// The boundary conditions of the full field for given lift coefficients:
/// `template_bc` with every parametrized patch set to values[p] * direction_p.
BoundaryConditions lifted_bc(const BoundaryConditions& template_bc, const std::vector<LiftingFunction>& lifts,
                             const std::vector<double>& values);

}  // namespace romkit
