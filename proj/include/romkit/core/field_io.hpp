#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>

#include "romkit/core/field.hpp"
#include "romkit/core/mesh.hpp"

namespace romkit {

/// Binary field file: "ROMF", u32 version (1), u32 n_cells, u32 components,
/// then n_cells*components little-endian float64 values, cell-major.
void write_field(const std::filesystem::path& path, const Field& field);
Field read_field(const std::filesystem::path& path, MeshPtr mesh);

void write_field(std::ostream& out, const Field& field);
Field read_field(std::istream& in, MeshPtr mesh);

/// Text manifest for a mesh (nx, ny, dx, dy, blocks, patch rules).
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);
MeshPtr read_mesh(const std::filesystem::path& path);

/// Little-endian float64 / u32 helpers shared by the other binary formats.
void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in);
void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);
void write_f64_array(std::ostream& out, const double* data, std::size_t n);
void read_f64_array(std::istream& in, double* data, std::size_t n);

}  // namespace romkit
