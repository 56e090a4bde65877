#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ddvar {

// Shortest decimal representation that round-trips to the same double.
// Used for every numeric value written to CSV or JSON-adjacent text so that
// outputs are byte-reproducible and lossless.
std::string format_double(double v);

// Writes content to a temporary file in the target directory and renames it
// into place, so no output file is ever observed partially written.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// One CSV row; fields are joined with commas, no quoting (writers never emit
// commas inside fields).
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace ddvar
