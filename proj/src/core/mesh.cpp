#include "romkit/core/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "romkit/errors.hpp"

namespace romkit {

std::string to_string(Side side) {
  switch (side) {
    case Side::West:
      return "west";
    case Side::East:
      return "east";
    case Side::South:
      return "south";
    case Side::North:
      return "north";
  }
  return "?";
}

Side parse_side(const std::string& text) {
  if (text == "west") return Side::West;
  if (text == "east") return Side::East;
  if (text == "south") return Side::South;
  if (text == "north") return Side::North;
  throw ConfigError("unknown mesh side '" + text + "'");
}

namespace {

struct SideGeometry {
  int di;
  int dj;
  Vec2 normal;
};

SideGeometry geometry_of(Side side) {
  switch (side) {
    case Side::West:
      return {-1, 0, {-1.0, 0.0}};
    case Side::East:
      return {1, 0, {1.0, 0.0}};
    case Side::South:
      return {0, -1, {0.0, -1.0}};
    case Side::North:
      return {0, 1, {0.0, 1.0}};
  }
  return {0, 0, {}};
}

}  // namespace

Mesh::Mesh(MeshSpec spec) : spec_(std::move(spec)) {
  if (spec_.nx <= 0 || spec_.ny <= 0) throw ConfigError("mesh needs positive nx, ny");
  if (!(spec_.dx > 0.0) || !(spec_.dy > 0.0)) throw ConfigError("mesh needs positive dx, dy");
  if (spec_.blocks.empty()) spec_.blocks.push_back({0, 0, spec_.nx, spec_.ny});

  grid_to_cell_.assign(static_cast<size_t>(spec_.nx) * spec_.ny, -1);
  std::vector<char> active(grid_to_cell_.size(), 0);
  for (const auto& b : spec_.blocks) {
    if (b.i0 < 0 || b.j0 < 0 || b.ni <= 0 || b.nj <= 0 || b.i0 + b.ni > spec_.nx ||
        b.j0 + b.nj > spec_.ny)
      throw ConfigError("mesh block outside the bounding grid");
    for (int j = b.j0; j < b.j0 + b.nj; ++j)
      for (int i = b.i0; i < b.i0 + b.ni; ++i) active[static_cast<size_t>(j) * spec_.nx + i] = 1;
  }
  for (int j = 0; j < spec_.ny; ++j) {
    for (int i = 0; i < spec_.nx; ++i) {
      if (!active[static_cast<size_t>(j) * spec_.nx + i]) continue;
      grid_to_cell_[static_cast<size_t>(j) * spec_.nx + i] = static_cast<int>(cell_i_.size());
      cell_i_.push_back(i);
      cell_j_.push_back(j);
    }
  }
  volumes_.assign(cell_i_.size(), spec_.dx * spec_.dy);

  // Patch table: explicit rules first, the default patch last.
  for (const auto& rule : spec_.patches) {
    if (patch_id(rule.name) < 0) patches_.push_back({rule.name, {}, 0.0});
  }
  // The default patch only exists when some face falls through the rules.
  int default_id = patch_id(spec_.default_patch);

  for (int c = 0; c < n_cells(); ++c) {
    const int i = cell_i_[c];
    const int j = cell_j_[c];
    // Interior faces are created from the owner (west/south) side only.
    if (const int e = cell_at(i + 1, j); e >= 0) interior_.push_back({c, e, 0, spec_.dy, spec_.dx});
    if (const int n = cell_at(i, j + 1); n >= 0) interior_.push_back({c, n, 1, spec_.dx, spec_.dy});

    for (Side side : {Side::West, Side::East, Side::South, Side::North}) {
      const auto g = geometry_of(side);
      if (cell_at(i + g.di, j + g.dj) >= 0) continue;
      BoundaryFace face;
      face.cell = c;
      face.side = side;
      const bool x_normal = (g.di != 0);
      face.area = x_normal ? spec_.dy : spec_.dx;
      face.distance = 0.5 * (x_normal ? spec_.dx : spec_.dy);
      face.normal = g.normal;
      const Vec2 cc = cell_centre(c);
      face.centre = {cc.x + g.normal.x * 0.5 * spec_.dx, cc.y + g.normal.y * 0.5 * spec_.dy};
      face.patch = -1;
      for (const auto& rule : spec_.patches) {
        if (rule.side == side && i >= rule.i0 && i < rule.i1 && j >= rule.j0 && j < rule.j1) {
          face.patch = patch_id(rule.name);
          break;
        }
      }
      if (face.patch < 0) {
        if (default_id < 0) {
          patches_.push_back({spec_.default_patch, {}, 0.0});
          default_id = static_cast<int>(patches_.size()) - 1;
        }
        face.patch = default_id;
      }
      patches_[face.patch].faces.push_back(static_cast<int>(boundary_.size()));
      patches_[face.patch].area += face.area;
      boundary_.push_back(face);
    }
  }
}

double Mesh::total_volume() const { return std::accumulate(volumes_.begin(), volumes_.end(), 0.0); }

Vec2 Mesh::cell_centre(int cell) const {
  return {(cell_i_[cell] + 0.5) * spec_.dx, (cell_j_[cell] + 0.5) * spec_.dy};
}

int Mesh::cell_at(int i, int j) const {
  if (i < 0 || j < 0 || i >= spec_.nx || j >= spec_.ny) return -1;
  return grid_to_cell_[static_cast<size_t>(j) * spec_.nx + i];
}

int Mesh::locate(Vec2 p) const {
  const double fi = p.x / spec_.dx;
  const double fj = p.y / spec_.dy;
  if (!(fi >= 0.0) || !(fj >= 0.0)) return -1;
  // Points on the far edge belong to the last cell.
  int i = static_cast<int>(std::floor(fi));
  int j = static_cast<int>(std::floor(fj));
  if (i == spec_.nx && fi <= spec_.nx + 1e-12) i = spec_.nx - 1;
  if (j == spec_.ny && fj <= spec_.ny + 1e-12) j = spec_.ny - 1;
  return cell_at(i, j);
}

int Mesh::patch_id(const std::string& name) const {
  for (size_t k = 0; k < patches_.size(); ++k)
    if (patches_[k].name == name) return static_cast<int>(k);
  return -1;
}

double Mesh::boundary_measure() const {
  double total = 0.0;
  for (const auto& f : boundary_) total += f.area;
  return total;
}

bool Mesh::same_as(const Mesh& other) const {
  if (this == &other) return true;
  return spec_.nx == other.spec_.nx && spec_.ny == other.spec_.ny && spec_.dx == other.spec_.dx &&
         spec_.dy == other.spec_.dy && n_cells() == other.n_cells() &&
         cell_i_ == other.cell_i_ && cell_j_ == other.cell_j_ &&
         boundary_.size() == other.boundary_.size() && patches_.size() == other.patches_.size();
}

MeshSpec box_spec(int nx, int ny, double lx, double ly) {
  MeshSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.dx = lx / nx;
  spec.dy = ly / ny;
  spec.blocks = {{0, 0, nx, ny}};
  spec.patches = {{"west", Side::West, 0, nx, 0, ny},
                  {"east", Side::East, 0, nx, 0, ny},
                  {"south", Side::South, 0, nx, 0, ny},
                  {"north", Side::North, 0, nx, 0, ny}};
  spec.default_patch = "wall";
  return spec;
}

MeshSpec cavity_spec(int n) {
  MeshSpec spec;
  spec.nx = n;
  spec.ny = n;
  spec.dx = 1.0 / n;
  spec.dy = 1.0 / n;
  spec.blocks = {{0, 0, n, n}};
  spec.patches = {{"lid", Side::North, 0, n, 0, n}};
  spec.default_patch = "wall";
  return spec;
}

MeshSpec tee_spec(const TeeGeometry& g) {
  if (g.branch_offset < 0 || g.branch_offset + g.branch_nx > g.main_nx)
    throw ConfigError("tee branch does not fit on the main channel");
  MeshSpec spec;
  spec.nx = g.main_nx;
  spec.ny = g.main_ny + g.branch_ny;
  spec.dx = g.cell_size;
  spec.dy = g.cell_size;
  spec.blocks = {{0, 0, g.main_nx, g.main_ny}, {g.branch_offset, g.main_ny, g.branch_nx, g.branch_ny}};
  spec.patches = {{"main_inlet", Side::West, 0, 1, 0, g.main_ny},
                  {"outlet", Side::East, g.main_nx - 1, g.main_nx, 0, g.main_ny},
                  {"branch_inlet", Side::North, g.branch_offset, g.branch_offset + g.branch_nx,
                   spec.ny - 1, spec.ny}};
  spec.default_patch = "wall";
  return spec;
}

}  // namespace romkit
