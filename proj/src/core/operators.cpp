#include "romkit/core/operators.hpp"

#include <cmath>
#include <string>

#include "romkit/errors.hpp"

namespace romkit {

namespace {

void require_scalar(const Field& f, const char* op) {
  if (!f.mesh_ptr()) throw DimensionError(std::string(op) + ": empty field");
  if (!f.is_scalar()) throw DimensionError(std::string(op) + ": expected a scalar field");
}

void require_vector(const Field& f, const char* op) {
  if (!f.mesh_ptr()) throw DimensionError(std::string(op) + ": empty field");
  if (f.components() != 2) throw DimensionError(std::string(op) + ": expected a vector field");
}

void divide_by_volume(Field& f) {
  const Mesh& mesh = f.mesh();
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int k = 0; k < f.components(); ++k) f(c, k) /= mesh.cell_volume(c);
}

// Gradient of component k of f, written into out (a vector field).
void component_gradient(const Field& f, int k, const BoundaryConditions& bc, Field& out) {
  const Mesh& mesh = f.mesh();
  out.values().setZero();
  for (const auto& face : mesh.interior_faces()) {
    const double value = 0.5 * (f(face.owner, k) + f(face.neighbour, k)) * face.area;
    out(face.owner, face.axis) += value;
    out(face.neighbour, face.axis) -= value;
  }
  for (const auto& face : mesh.boundary_faces()) {
    const double value = bc.face_value(f, face, k) * face.area;
    out(face.cell, 0) += value * face.normal.x;
    out(face.cell, 1) += value * face.normal.y;
  }
  divide_by_volume(out);
}

}  // namespace

double inner_product(const Field& f, const Field& g) {
  require_compatible(f, g, "inner_product");
  const Mesh& mesh = f.mesh();
  const int nc = f.components();
  double sum = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    double local = 0.0;
    for (int k = 0; k < nc; ++k) local += f(c, k) * g(c, k);
    sum += mesh.cell_volume(c) * local;
  }
  return sum;
}

double l2_norm(const Field& f) { return std::sqrt(inner_product(f, f)); }

Field gradient(const Field& f, const BoundaryConditions& bc) {
  require_scalar(f, "gradient");
  Field out(f.mesh_ptr(), 2);
  component_gradient(f, 0, bc, out);
  return out;
}

Field divergence(const Field& w, const BoundaryConditions& bc) {
  require_vector(w, "divergence");
  const Mesh& mesh = w.mesh();
  Field out(w.mesh_ptr(), 1);
  for (const auto& face : mesh.interior_faces()) {
    const double flux = 0.5 * (w(face.owner, face.axis) + w(face.neighbour, face.axis)) * face.area;
    out(face.owner) += flux;
    out(face.neighbour) -= flux;
  }
  for (const auto& face : mesh.boundary_faces()) {
    const double flux =
        (bc.face_value(w, face, 0) * face.normal.x + bc.face_value(w, face, 1) * face.normal.y) * face.area;
    out(face.cell) += flux;
  }
  divide_by_volume(out);
  return out;
}

Field laplacian(const Field& f, const BoundaryConditions& bc) {
  if (!f.mesh_ptr()) throw DimensionError("laplacian: empty field");
  const Mesh& mesh = f.mesh();
  Field out(f.mesh_ptr(), f.components());
  for (int k = 0; k < f.components(); ++k) {
    for (const auto& face : mesh.interior_faces()) {
      const double flux = face.area * (f(face.neighbour, k) - f(face.owner, k)) / face.distance;
      out(face.owner, k) += flux;
      out(face.neighbour, k) -= flux;
    }
    for (const auto& face : mesh.boundary_faces()) {
      const auto& cond = bc.at(face.patch);
      if (cond.kind != BcKind::Dirichlet) continue;
      out(face.cell, k) += face.area * (cond.value[k] - f(face.cell, k)) / face.distance;
    }
  }
  divide_by_volume(out);
  return out;
}

ConvectionScheme parse_scheme(std::string_view name) {
  if (name == "central") return ConvectionScheme::Central;
  if (name == "upwind") return ConvectionScheme::Upwind;
  throw ConfigError("unknown convection scheme '" + std::string(name) + "'");
}

std::string_view to_string(ConvectionScheme scheme) {
  return scheme == ConvectionScheme::Central ? "central" : "upwind";
}

Field convective_term(const Field& u, const BoundaryConditions& u_bc, const Field& w,
                      const BoundaryConditions& w_bc, ConvectionScheme scheme) {
  require_vector(u, "convective_term");
  if (!w.mesh_ptr() || !w.mesh().same_as(u.mesh())) throw DimensionError("convective_term: mesh mismatch");
  const Mesh& mesh = u.mesh();
  const int nc = w.components();
  Field out(w.mesh_ptr(), nc);
  for (const auto& face : mesh.interior_faces()) {
    const double flux = 0.5 * (u(face.owner, face.axis) + u(face.neighbour, face.axis)) * face.area;
    for (int k = 0; k < nc; ++k) {
      double wf;
      if (scheme == ConvectionScheme::Central)
        wf = 0.5 * (w(face.owner, k) + w(face.neighbour, k));
      else
        wf = flux >= 0.0 ? w(face.owner, k) : w(face.neighbour, k);
      out(face.owner, k) += flux * wf;
      out(face.neighbour, k) -= flux * wf;
    }
  }
  for (const auto& face : mesh.boundary_faces()) {
    const double flux =
        (u_bc.face_value(u, face, 0) * face.normal.x + u_bc.face_value(u, face, 1) * face.normal.y) * face.area;
    for (int k = 0; k < nc; ++k) out(face.cell, k) += flux * w_bc.face_value(w, face, k);
  }
  divide_by_volume(out);
  return out;
}

std::vector<Eigen::Matrix2d> velocity_gradient(const Field& u, const BoundaryConditions& u_bc) {
  require_vector(u, "velocity_gradient");
  const Mesh& mesh = u.mesh();
  std::vector<Eigen::Matrix2d> grad(mesh.n_cells(), Eigen::Matrix2d::Zero());
  Field g(u.mesh_ptr(), 2);
  for (int i = 0; i < 2; ++i) {
    component_gradient(u, i, u_bc, g);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      grad[c](i, 0) = g(c, 0);
      grad[c](i, 1) = g(c, 1);
    }
  }
  return grad;
}

Field transpose_stress_divergence(const Field& nu, const Field& u, const BoundaryConditions& u_bc) {
  require_scalar(nu, "transpose_stress_divergence");
  require_vector(u, "transpose_stress_divergence");
  if (!nu.mesh().same_as(u.mesh())) throw DimensionError("transpose_stress_divergence: mesh mismatch");
  const Mesh& mesh = u.mesh();
  const auto grad = velocity_gradient(u, u_bc);
  // stress(c)(i, j) = nu_c * d u_j / d x_i
  std::vector<Eigen::Matrix2d> stress(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) stress[c] = nu(c) * grad[c].transpose();

  Field out(u.mesh_ptr(), 2);
  for (const auto& face : mesh.interior_faces()) {
    for (int i = 0; i < 2; ++i) {
      const double flux = 0.5 * (stress[face.owner](i, face.axis) + stress[face.neighbour](i, face.axis)) * face.area;
      out(face.owner, i) += flux;
      out(face.neighbour, i) -= flux;
    }
  }
  for (const auto& face : mesh.boundary_faces()) {
    const auto& s = stress[face.cell];
    for (int i = 0; i < 2; ++i)
      out(face.cell, i) += (s(i, 0) * face.normal.x + s(i, 1) * face.normal.y) * face.area;
  }
  divide_by_volume(out);
  return out;
}

Field scaled_laplacian(const Field& nu, const Field& u, const BoundaryConditions& u_bc) {
  return pointwise_product(nu, laplacian(u, u_bc));
}

}  // namespace romkit
