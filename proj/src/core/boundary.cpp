#include "romkit/core/boundary.hpp"

#include "romkit/errors.hpp"

namespace romkit {

std::string to_string(BcKind kind) {
  switch (kind) {
    case BcKind::Dirichlet:
      return "dirichlet";
    case BcKind::NeumannZero:
      return "neumann";
    case BcKind::Outlet:
      return "outlet";
  }
  return "?";
}

BcKind parse_bc_kind(const std::string& text) {
  if (text == "dirichlet") return BcKind::Dirichlet;
  if (text == "neumann") return BcKind::NeumannZero;
  if (text == "outlet") return BcKind::Outlet;
  throw ConfigError("unknown boundary condition kind '" + text + "'");
}

BoundaryConditions::BoundaryConditions(const Mesh& mesh, std::vector<BoundaryCondition> conditions) {
  by_patch_.resize(mesh.patches().size());
  std::vector<int> seen(mesh.patches().size(), 0);
  for (auto& bc : conditions) {
    const int id = mesh.patch_id(bc.patch);
    if (id < 0) throw ConfigError("boundary condition for unknown patch '" + bc.patch + "'");
    if (seen[id]++) throw ConfigError("patch '" + bc.patch + "' has more than one boundary condition");
    by_patch_[id] = std::move(bc);
  }
  for (size_t p = 0; p < seen.size(); ++p)
    if (!seen[p]) throw ConfigError("patch '" + mesh.patches()[p].name + "' has no boundary condition");
}

BoundaryConditions BoundaryConditions::uniform(const Mesh& mesh, BcKind kind) {
  std::vector<BoundaryCondition> list;
  for (const auto& p : mesh.patches()) list.push_back({p.name, kind, {0.0, 0.0}});
  return BoundaryConditions(mesh, std::move(list));
}

const BoundaryCondition& BoundaryConditions::at(const std::string& patch) const {
  for (const auto& bc : by_patch_)
    if (bc.patch == patch) return bc;
  throw ConfigError("no boundary condition for patch '" + patch + "'");
}

BoundaryConditions BoundaryConditions::homogeneous() const {
  BoundaryConditions out = *this;
  for (auto& bc : out.by_patch_) bc.value = {0.0, 0.0};
  return out;
}

BoundaryConditions BoundaryConditions::with_value(const std::string& patch, std::array<double, 2> value) const {
  BoundaryConditions out = *this;
  for (auto& bc : out.by_patch_) {
    if (bc.patch == patch) {
      bc.value = value;
      return out;
    }
  }
  throw ConfigError("no boundary condition for patch '" + patch + "'");
}

bool BoundaryConditions::has_dirichlet() const {
  for (const auto& bc : by_patch_)
    if (bc.kind == BcKind::Dirichlet) return true;
  return false;
}

}  // namespace romkit
