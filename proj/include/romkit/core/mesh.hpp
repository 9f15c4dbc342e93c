#pragma once

#include <string>
#include <vector>

namespace romkit {

enum class Side { West, East, South, North };

std::string to_string(Side side);
Side parse_side(const std::string& text);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Rectangle of active cells in grid indices: [i0, i0+ni) x [j0, j0+nj).
struct CellBlock {
  int i0 = 0;
  int j0 = 0;
  int ni = 0;
  int nj = 0;
};

/// Claims the boundary faces on `side` of every active cell with
/// i in [i0, i1) and j in [j0, j1).
struct PatchRule {
  std::string name;
  Side side = Side::West;
  int i0 = 0;
  int i1 = 0;
  int j0 = 0;
  int j1 = 0;
};

/// Everything needed to rebuild a mesh; this is what the text manifest stores.
struct MeshSpec {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<CellBlock> blocks;
  std::vector<PatchRule> patches;
  std::string default_patch = "wall";
};

/// Face between two active cells. The unit normal points along +axis
/// (axis 0 = x, 1 = y) from `owner` to `neighbour`.
struct InteriorFace {
  int owner = -1;
  int neighbour = -1;
  int axis = 0;
  double area = 0.0;
  double distance = 0.0;
};

struct BoundaryFace {
  int cell = -1;
  Side side = Side::West;
  int patch = -1;
  double area = 0.0;
  double distance = 0.0;  // cell centre to face centre
  Vec2 normal;            // outward unit normal
  Vec2 centre;
};

struct Patch {
  std::string name;
  std::vector<int> faces;  // indices into Mesh::boundary_faces()
  double area = 0.0;
};

/// Structured 2D Cartesian finite-volume mesh. Active cells are the union of
/// rectangular blocks of a bounding nx-by-ny grid, which is enough to
/// describe channels, cavities and tee junctions.
class Mesh {
 public:
  explicit Mesh(MeshSpec spec);

  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }
  double dx() const { return spec_.dx; }
  double dy() const { return spec_.dy; }
  const MeshSpec& spec() const { return spec_; }

  int n_cells() const { return static_cast<int>(cell_i_.size()); }
  double cell_volume(int cell) const { return volumes_[cell]; }
  const std::vector<double>& cell_volumes() const { return volumes_; }
  double total_volume() const;
  Vec2 cell_centre(int cell) const;
  int cell_i(int cell) const { return cell_i_[cell]; }
  int cell_j(int cell) const { return cell_j_[cell]; }
  /// Cell index at grid position (i, j), or -1 when inactive/outside.
  int cell_at(int i, int j) const;
  /// Active cell containing point p, or -1.
  int locate(Vec2 p) const;

  const std::vector<InteriorFace>& interior_faces() const { return interior_; }
  const std::vector<BoundaryFace>& boundary_faces() const { return boundary_; }
  const std::vector<Patch>& patches() const { return patches_; }
  int patch_id(const std::string& name) const;  // -1 when absent
  double boundary_measure() const;

  /// Structural equality: same MeshSpec, hence same cells and faces.
  bool same_as(const Mesh& other) const;

 private:
  MeshSpec spec_;
  std::vector<int> grid_to_cell_;
  std::vector<int> cell_i_;
  std::vector<int> cell_j_;
  std::vector<double> volumes_;
  std::vector<InteriorFace> interior_;
  std::vector<BoundaryFace> boundary_;
  std::vector<Patch> patches_;
};

/// Unit-aspect box [0,lx] x [0,ly] with one patch per side unless overridden.
MeshSpec box_spec(int nx, int ny, double lx, double ly);

/// Lid-driven cavity on the unit square: "lid" on the north side, "wall" elsewhere.
MeshSpec cavity_spec(int n);

/// Geometry of the 2D tee junction used for the mixing problem.
struct TeeGeometry {
  int main_nx = 64;
  int main_ny = 32;
  int branch_nx = 16;
  int branch_ny = 24;
  int branch_offset = 24;  // first branch column, measured from the main inlet
  double cell_size = 1.0 / 32.0;
};

/// Horizontal main channel (inlet "main_inlet" on the west side, "outlet" on
/// the east side) with a vertical branch on top ("branch_inlet" at its north
/// end). Everything else is "wall".
MeshSpec tee_spec(const TeeGeometry& geometry = {});

}  // namespace romkit
