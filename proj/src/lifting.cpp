#include "romkit/lifting.hpp"

#include <Eigen/SparseLU>

#include "romkit/core/sparse_operators.hpp"
#include "romkit/errors.hpp"

namespace romkit {

LiftMethod parse_lift_method(const std::string& name) {
  if (name == "diffusion") return LiftMethod::DiffusionSolve;
  if (name == "average") return LiftMethod::SnapshotAverage;
  throw ConfigError("unknown lifting method '" + name + "' (expected diffusion|average)");
}

std::string to_string(LiftMethod method) {
  return method == LiftMethod::DiffusionSolve ? "diffusion" : "average";
}

namespace {

BoundaryConditions unit_bc(const BoundaryConditions& field_bc, const std::string& patch,
                           std::array<double, 2> direction) {
  BoundaryConditions bc = field_bc.homogeneous();
  return bc.with_value(patch, direction);
}

}  // namespace

LiftingFunction compute_control_function(const MeshPtr& mesh, const BoundaryConditions& field_bc,
                                         const std::string& patch, std::array<double, 2> direction, int components) {
  const int id = mesh->patch_id(patch);
  if (id < 0) throw ConfigError("lifting: unknown patch '" + patch + "'");
  if (field_bc.at(id).kind != BcKind::Dirichlet)
    throw ConfigError("lifting: patch '" + patch + "' is not a Dirichlet patch");
  if (!field_bc.has_dirichlet()) throw ConfigError("lifting: no Dirichlet anchor, diffusion problem is singular");

  LiftingFunction lift;
  lift.patch = patch;
  lift.direction = direction;
  lift.bc = unit_bc(field_bc, patch, direction);
  lift.field = Field(mesh, components);

  Eigen::SparseLU<SparseMatrix> solver;
  bool factored = false;
  for (int k = 0; k < components; ++k) {
    const AffineOperator lap = laplacian_operator(*mesh, lift.bc, k);
    if (!factored) {
      solver.compute(lap.matrix);
      if (solver.info() != Eigen::Success) throw ConfigError("lifting: diffusion operator is singular");
      factored = true;
    }
    const Eigen::VectorXd x = solver.solve(-lap.offset);
    lift.field.set_component(k, Field(mesh, 1, x));
  }
  return lift;
}

LiftingFunction average_control_function(const SnapshotSet& snapshots, const BoundaryConditions& mean_bc,
                                         const std::string& patch, std::array<double, 2> direction,
                                         const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != snapshots.n_snapshots())
    throw DimensionError("average lifting: one coefficient per snapshot required");
  const double mean_coeff = coefficients.mean();
  if (mean_coeff == 0.0) throw DataError("average lifting: coefficients average to zero");
  LiftingFunction lift;
  lift.patch = patch;
  lift.direction = direction;
  lift.field = Field(snapshots.mesh, snapshots.components, snapshots.matrix.rowwise().mean() / mean_coeff);
  std::vector<BoundaryCondition> scaled = mean_bc.all();
  for (auto& c : scaled) {
    c.value[0] /= mean_coeff;
    c.value[1] /= mean_coeff;
  }
  lift.bc = BoundaryConditions(*snapshots.mesh, scaled);
  return lift;
}

SnapshotSet homogenize(const SnapshotSet& snapshots, const std::vector<LiftingFunction>& lifts,
                       const Eigen::MatrixXd& coefficients) {
  if (coefficients.rows() != static_cast<Eigen::Index>(lifts.size()) ||
      coefficients.cols() != snapshots.n_snapshots())
    throw DimensionError("homogenize: coefficient matrix must be n_lifts x n_snapshots");
  SnapshotSet out = snapshots;
  for (size_t p = 0; p < lifts.size(); ++p) {
    if (lifts[p].field.size() != snapshots.n_dofs()) throw DimensionError("homogenize: lift size mismatch");
    out.matrix.noalias() -= lifts[p].field.values() * coefficients.row(static_cast<Eigen::Index>(p));
  }
  return out;
}

Field reapply(const Field& field, const std::vector<LiftingFunction>& lifts, const std::vector<double>& values) {
  if (values.size() != lifts.size()) throw DimensionError("reapply: one value per lift required");
  Field out = field;
  for (size_t p = 0; p < lifts.size(); ++p) {
    require_compatible(out, lifts[p].field, "reapply");
    out.values() += values[p] * lifts[p].field.values();
  }
  return out;
}

double boundary_residual(const Field& field, const BoundaryConditions& field_bc,
                         const std::vector<LiftingFunction>& lifts, const std::vector<double>& values) {
  if (values.size() != lifts.size()) throw DimensionError("boundary_residual: one value per lift required");
  const Mesh& mesh = field.mesh();
  double worst = 0.0;
  for (const auto& lift : lifts) {
    const int id = mesh.patch_id(lift.patch);
    for (int f : mesh.patches()[id].faces) {
      const auto& face = mesh.boundary_faces()[f];
      for (int k = 0; k < field.components(); ++k) {
        double v = field_bc.face_value(field, face, k);
        for (size_t p = 0; p < lifts.size(); ++p) v -= values[p] * lifts[p].bc.face_value(lifts[p].field, face, k);
        worst = std::max(worst, std::abs(v));
      }
    }
  }
  return worst;
}

BoundaryConditions lifted_bc(const BoundaryConditions& template_bc, const std::vector<LiftingFunction>& lifts,
                             const std::vector<double>& values) {
  if (values.size() != lifts.size()) throw DimensionError("lifted_bc: one value per lift required");
  BoundaryConditions bc = template_bc;
  for (size_t p = 0; p < lifts.size(); ++p)
    bc = bc.with_value(lifts[p].patch, {values[p] * lifts[p].direction[0], values[p] * lifts[p].direction[1]});
  return bc;
}

}  // namespace romkit
