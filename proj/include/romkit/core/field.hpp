#pragma once

#include <Eigen/Dense>
#include <memory>

#include "romkit/core/mesh.hpp"

namespace romkit {

using MeshPtr = std::shared_ptr<const Mesh>;

/// Cell-centred scalar (1 component) or 2D vector (2 components) field.
/// Values are stored cell-major, component-minor: values[cell * components + k].
class Field {
 public:
  Field() = default;
  Field(MeshPtr mesh, int components);
  Field(MeshPtr mesh, int components, Eigen::VectorXd values);

  static Field constant(MeshPtr mesh, double value);
  static Field constant(MeshPtr mesh, double vx, double vy);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int components() const { return components_; }
  bool is_scalar() const { return components_ == 1; }
  Eigen::Index size() const { return values_.size(); }

  double operator()(int cell, int comp = 0) const { return values_[cell * components_ + comp]; }
  double& operator()(int cell, int comp = 0) { return values_[cell * components_ + comp]; }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  /// One component extracted as a scalar field.
  Field component(int k) const;
  void set_component(int k, const Field& scalar);

  bool all_finite() const { return values_.allFinite(); }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  MeshPtr mesh_;
  int components_ = 1;
  Eigen::VectorXd values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Pointwise product of a scalar field with a scalar or vector field.
Field pointwise_product(const Field& scalar, const Field& f);

/// Throws DimensionError unless both fields share a mesh and component count.
void require_compatible(const Field& f, const Field& g, const char* what);

}  // namespace romkit
