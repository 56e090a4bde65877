#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ddvar {

// FIPS 180-4 SHA-256, used to fingerprint run outputs in the manifest.
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace ddvar
