#include "romkit/core/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "romkit/errors.hpp"
#include "romkit/util/manifest.hpp"

namespace romkit {

namespace {

constexpr char kMagic[4] = {'R', 'O', 'M', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
}

void require(std::istream& in, const char* what) {
  if (!in) throw DataError(std::string("truncated or unreadable ") + what);
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  require(in, "u32");
  return to_little(v);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double read_f64(std::istream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), sizeof bits);
  require(in, "float64");
  return std::bit_cast<double>(to_little(bits));
}

void write_f64_array(std::ostream& out, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) write_f64(out, data[i]);
  }
}

void read_f64_array(std::istream& in, double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    require(in, "float64 array");
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(in);
  }
}

void write_field(std::ostream& out, const Field& field) {
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(field.mesh().n_cells()));
  write_u32(out, static_cast<std::uint32_t>(field.components()));
  write_f64_array(out, field.values().data(), static_cast<std::size_t>(field.size()));
}

Field read_field(std::istream& in, MeshPtr mesh) {
  char magic[4];
  in.read(magic, 4);
  require(in, "field header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a ROMF field file");
  const auto version = read_u32(in);
  if (version != kVersion) throw DataError("unsupported ROMF version " + std::to_string(version));
  const auto n_cells = read_u32(in);
  const auto components = read_u32(in);
  if (static_cast<int>(n_cells) != mesh->n_cells())
    throw DimensionError("field has " + std::to_string(n_cells) + " cells, mesh has " +
                         std::to_string(mesh->n_cells()));
  Eigen::VectorXd values(static_cast<Eigen::Index>(n_cells) * components);
  read_f64_array(in, values.data(), static_cast<std::size_t>(values.size()));
  return Field(std::move(mesh), static_cast<int>(components), std::move(values));
}

void write_field(const std::filesystem::path& path, const Field& field) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_field(out, field);
}

Field read_field(const std::filesystem::path& path, MeshPtr mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_field(in, std::move(mesh));
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  const MeshSpec& s = mesh.spec();
  Manifest m;
  m.set("nx", s.nx);
  m.set("ny", s.ny);
  m.set("dx", s.dx);
  m.set("dy", s.dy);
  m.set("n_blocks", static_cast<int>(s.blocks.size()));
  for (size_t b = 0; b < s.blocks.size(); ++b) {
    const auto& blk = s.blocks[b];
    std::ostringstream v;
    v << blk.i0 << ' ' << blk.j0 << ' ' << blk.ni << ' ' << blk.nj;
    m.set("block_" + std::to_string(b), v.str());
  }
  m.set("n_patches", static_cast<int>(s.patches.size()));
  for (size_t p = 0; p < s.patches.size(); ++p) {
    const auto& r = s.patches[p];
    std::ostringstream v;
    v << r.name << ' ' << to_string(r.side) << ' ' << r.i0 << ' ' << r.i1 << ' ' << r.j0 << ' ' << r.j1;
    m.set("patch_" + std::to_string(p), v.str());
  }
  m.set("default_patch", s.default_patch);
  m.write(path);
}

MeshPtr read_mesh(const std::filesystem::path& path) {
  const Manifest m = Manifest::read(path);
  MeshSpec s;
  s.nx = m.get_int("nx");
  s.ny = m.get_int("ny");
  s.dx = m.get_double("dx");
  s.dy = m.get_double("dy");
  const int nb = m.get_int("n_blocks");
  for (int b = 0; b < nb; ++b) {
    std::istringstream in(m.get("block_" + std::to_string(b)));
    CellBlock blk;
    if (!(in >> blk.i0 >> blk.j0 >> blk.ni >> blk.nj)) throw ConfigError("malformed block in " + path.string());
    s.blocks.push_back(blk);
  }
  const int np = m.get_int("n_patches");
  for (int p = 0; p < np; ++p) {
    std::istringstream in(m.get("patch_" + std::to_string(p)));
    PatchRule r;
    std::string side;
    if (!(in >> r.name >> side >> r.i0 >> r.i1 >> r.j0 >> r.j1))
      throw ConfigError("malformed patch in " + path.string());
    r.side = parse_side(side);
    s.patches.push_back(r);
  }
  s.default_patch = m.get("default_patch", "wall");
  return std::make_shared<const Mesh>(std::move(s));
}

}  // namespace romkit
