#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace romkit {

/// Lower-case hex SHA-256 digests.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of a directory tree: relative paths and file digests, in sorted order.
std::string sha256_tree(const std::filesystem::path& root);

}  // namespace romkit
