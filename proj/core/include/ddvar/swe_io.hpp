#pragma once

#include <filesystem>
#include <string>

#include "ddvar/swe.hpp"

namespace ddvar {

// State snapshot format: one line of JSON (grid dims, model parameters,
// layout tag), then the raw little-endian float64 payload of u, v, h in
// storage order (latitude rows, longitude fastest). The payload is copied
// bit for bit, so a write/read round trip reproduces the state exactly.
std::string state_to_snapshot(const SweState& z, const SweParams& params);

// Throws ProtocolError on a malformed header or a payload size mismatch.
// When params_out is non-null the header's parameters are written there.
SweState state_from_snapshot(const std::string& bytes, SweParams* params_out = nullptr);

void write_state_snapshot(const std::filesystem::path& path, const SweState& z,
                          const SweParams& params);
SweState read_state_snapshot(const std::filesystem::path& path, SweParams* params_out = nullptr);

}  // namespace ddvar
