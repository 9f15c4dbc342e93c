#pragma once

#include <array>
#include <string>
#include <vector>

#include "romkit/core/field.hpp"

namespace romkit {

/// Outlet behaves like a zero-gradient condition for face extrapolation; it is
/// kept distinct so that lifting and pressure setup can recognise the outflow patch.
enum class BcKind { Dirichlet, NeumannZero, Outlet };

std::string to_string(BcKind kind);
BcKind parse_bc_kind(const std::string& text);

struct BoundaryCondition {
  std::string patch;
  BcKind kind = BcKind::NeumannZero;
  std::array<double, 2> value{0.0, 0.0};  // Dirichlet only
};

/// One condition per mesh patch for one field.
class BoundaryConditions {
 public:
  BoundaryConditions() = default;
  /// Throws ConfigError unless every patch of `mesh` gets exactly one condition.
  BoundaryConditions(const Mesh& mesh, std::vector<BoundaryCondition> conditions);

  /// Every patch gets the same kind (zero value).
  static BoundaryConditions uniform(const Mesh& mesh, BcKind kind);

  const BoundaryCondition& at(int patch_id) const { return by_patch_[patch_id]; }
  const BoundaryCondition& at(const std::string& patch) const;
  const std::vector<BoundaryCondition>& all() const { return by_patch_; }

  /// Same kinds, all Dirichlet values set to zero.
  BoundaryConditions homogeneous() const;
  BoundaryConditions with_value(const std::string& patch, std::array<double, 2> value) const;
  bool has_dirichlet() const;

  /// Face value of component k: the Dirichlet value or the adjacent cell value.
  double face_value(const Field& f, const BoundaryFace& face, int k) const {
    const auto& bc = by_patch_[face.patch];
    return bc.kind == BcKind::Dirichlet ? bc.value[k] : f(face.cell, k);
  }

 private:
  std::vector<BoundaryCondition> by_patch_;
};

}  // namespace romkit
