#include "romkit/core/field.hpp"

#include <string>

#include "romkit/errors.hpp"

namespace romkit {

Field::Field(MeshPtr mesh, int components) : mesh_(std::move(mesh)), components_(components) {
  if (!mesh_) throw DimensionError("field without mesh");
  if (components_ != 1 && components_ != 2) throw DimensionError("field must have 1 or 2 components");
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->n_cells()) * components_);
}

Field::Field(MeshPtr mesh, int components, Eigen::VectorXd values) : Field(std::move(mesh), components) {
  if (values.size() != values_.size())
    throw DimensionError("field value count " + std::to_string(values.size()) + " != n_cells x components " +
                         std::to_string(values_.size()));
  values_ = std::move(values);
}

Field Field::constant(MeshPtr mesh, double value) {
  Field f(std::move(mesh), 1);
  f.values_.setConstant(value);
  return f;
}

Field Field::constant(MeshPtr mesh, double vx, double vy) {
  Field f(std::move(mesh), 2);
  for (int c = 0; c < f.mesh().n_cells(); ++c) {
    f(c, 0) = vx;
    f(c, 1) = vy;
  }
  return f;
}

Field Field::component(int k) const {
  if (k < 0 || k >= components_) throw DimensionError("component index out of range");
  Field out(mesh_, 1);
  for (int c = 0; c < mesh_->n_cells(); ++c) out(c) = (*this)(c, k);
  return out;
}

void Field::set_component(int k, const Field& scalar) {
  if (k < 0 || k >= components_ || !scalar.is_scalar() || !scalar.mesh().same_as(*mesh_))
    throw DimensionError("set_component: incompatible input");
  for (int c = 0; c < mesh_->n_cells(); ++c) (*this)(c, k) = scalar(c);
}

Field& Field::operator+=(const Field& other) {
  require_compatible(*this, other, "operator+=");
  values_ += other.values_;
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_compatible(*this, other, "operator-=");
  values_ -= other.values_;
  return *this;
}

Field& Field::operator*=(double s) {
  values_ *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field pointwise_product(const Field& scalar, const Field& f) {
  if (!scalar.is_scalar()) throw DimensionError("pointwise_product: first argument must be scalar");
  if (!scalar.mesh().same_as(f.mesh())) throw DimensionError("pointwise_product: mesh mismatch");
  Field out = f;
  for (int c = 0; c < f.mesh().n_cells(); ++c)
    for (int k = 0; k < f.components(); ++k) out(c, k) *= scalar(c);
  return out;
}

void require_compatible(const Field& f, const Field& g, const char* what) {
  if (!f.mesh_ptr() || !g.mesh_ptr()) throw DimensionError(std::string(what) + ": empty field");
  if (!f.mesh().same_as(g.mesh())) throw DimensionError(std::string(what) + ": mesh mismatch");
  if (f.components() != g.components()) throw DimensionError(std::string(what) + ": component mismatch");
}

}  // namespace romkit
