#include "romkit/core/sparse_operators.hpp"

#include <vector>

#include "romkit/errors.hpp"

namespace romkit {

namespace {

using Triplet = Eigen::Triplet<double>;

AffineOperator finish(int rows, int cols, std::vector<Triplet>& triplets, Eigen::VectorXd offset) {
  AffineOperator op;
  op.matrix.resize(rows, cols);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.offset = std::move(offset);
  return op;
}

}  // namespace

AffineOperator laplacian_operator(const Mesh& mesh, const BoundaryConditions& bc, int k) {
  const int n = mesh.n_cells();
  std::vector<Triplet> t;
  t.reserve(5 * static_cast<size_t>(n));
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  for (const auto& face : mesh.interior_faces()) {
    const double a = face.area / face.distance;
    const double vo = 1.0 / mesh.cell_volume(face.owner);
    const double vn = 1.0 / mesh.cell_volume(face.neighbour);
    t.emplace_back(face.owner, face.neighbour, a * vo);
    t.emplace_back(face.owner, face.owner, -a * vo);
    t.emplace_back(face.neighbour, face.owner, a * vn);
    t.emplace_back(face.neighbour, face.neighbour, -a * vn);
  }
  for (const auto& face : mesh.boundary_faces()) {
    const auto& cond = bc.at(face.patch);
    if (cond.kind != BcKind::Dirichlet) continue;
    const double a = face.area / face.distance / mesh.cell_volume(face.cell);
    t.emplace_back(face.cell, face.cell, -a);
    offset[face.cell] += a * cond.value[k];
  }
  return finish(n, n, t, std::move(offset));
}

AffineOperator gradient_operator(const Mesh& mesh, const BoundaryConditions& bc) {
  const int n = mesh.n_cells();
  std::vector<Triplet> t;
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(2 * n);
  for (const auto& face : mesh.interior_faces()) {
    const double a = 0.5 * face.area;
    const int ro = 2 * face.owner + face.axis;
    const int rn = 2 * face.neighbour + face.axis;
    const double vo = 1.0 / mesh.cell_volume(face.owner);
    const double vn = 1.0 / mesh.cell_volume(face.neighbour);
    t.emplace_back(ro, face.owner, a * vo);
    t.emplace_back(ro, face.neighbour, a * vo);
    t.emplace_back(rn, face.owner, -a * vn);
    t.emplace_back(rn, face.neighbour, -a * vn);
  }
  for (const auto& face : mesh.boundary_faces()) {
    const auto& cond = bc.at(face.patch);
    const double v = 1.0 / mesh.cell_volume(face.cell);
    const double nx = face.normal.x * face.area * v;
    const double ny = face.normal.y * face.area * v;
    if (cond.kind == BcKind::Dirichlet) {
      offset[2 * face.cell] += cond.value[0] * nx;
      offset[2 * face.cell + 1] += cond.value[0] * ny;
    } else {
      if (nx != 0.0) t.emplace_back(2 * face.cell, face.cell, nx);
      if (ny != 0.0) t.emplace_back(2 * face.cell + 1, face.cell, ny);
    }
  }
  return finish(2 * n, n, t, std::move(offset));
}

AffineOperator divergence_operator(const Mesh& mesh, const BoundaryConditions& bc) {
  const int n = mesh.n_cells();
  std::vector<Triplet> t;
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  for (const auto& face : mesh.interior_faces()) {
    const double a = 0.5 * face.area;
    const double vo = 1.0 / mesh.cell_volume(face.owner);
    const double vn = 1.0 / mesh.cell_volume(face.neighbour);
    const int co = 2 * face.owner + face.axis;
    const int cn = 2 * face.neighbour + face.axis;
    t.emplace_back(face.owner, co, a * vo);
    t.emplace_back(face.owner, cn, a * vo);
    t.emplace_back(face.neighbour, co, -a * vn);
    t.emplace_back(face.neighbour, cn, -a * vn);
  }
  for (const auto& face : mesh.boundary_faces()) {
    const auto& cond = bc.at(face.patch);
    const double v = 1.0 / mesh.cell_volume(face.cell);
    const double nx = face.normal.x * face.area * v;
    const double ny = face.normal.y * face.area * v;
    if (cond.kind == BcKind::Dirichlet) {
      offset[face.cell] += cond.value[0] * nx + cond.value[1] * ny;
    } else {
      if (nx != 0.0) t.emplace_back(face.cell, 2 * face.cell, nx);
      if (ny != 0.0) t.emplace_back(face.cell, 2 * face.cell + 1, ny);
    }
  }
  return finish(n, 2 * n, t, std::move(offset));
}

AffineOperator scalar_convection_operator(const Field& u, const BoundaryConditions& u_bc,
                                          const BoundaryConditions& w_bc, ConvectionScheme scheme) {
  if (u.components() != 2) throw DimensionError("scalar_convection_operator: u must be a vector field");
  const Mesh& mesh = u.mesh();
  const int n = mesh.n_cells();
  std::vector<Triplet> t;
  t.reserve(5 * static_cast<size_t>(n));
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  for (const auto& face : mesh.interior_faces()) {
    const double flux = 0.5 * (u(face.owner, face.axis) + u(face.neighbour, face.axis)) * face.area;
    const double vo = 1.0 / mesh.cell_volume(face.owner);
    const double vn = 1.0 / mesh.cell_volume(face.neighbour);
    double wo;
    double wn;
    if (scheme == ConvectionScheme::Central) {
      wo = 0.5;
      wn = 0.5;
    } else {
      wo = flux >= 0.0 ? 1.0 : 0.0;
      wn = 1.0 - wo;
    }
    t.emplace_back(face.owner, face.owner, flux * wo * vo);
    t.emplace_back(face.owner, face.neighbour, flux * wn * vo);
    t.emplace_back(face.neighbour, face.owner, -flux * wo * vn);
    t.emplace_back(face.neighbour, face.neighbour, -flux * wn * vn);
  }
  for (const auto& face : mesh.boundary_faces()) {
    const double flux =
        (u_bc.face_value(u, face, 0) * face.normal.x + u_bc.face_value(u, face, 1) * face.normal.y) * face.area /
        mesh.cell_volume(face.cell);
    const auto& cond = w_bc.at(face.patch);
    if (cond.kind == BcKind::Dirichlet)
      offset[face.cell] += flux * cond.value[0];
    else
      t.emplace_back(face.cell, face.cell, flux);
  }
  return finish(n, n, t, std::move(offset));
}

}  // namespace romkit
