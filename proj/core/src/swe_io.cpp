#include "ddvar/swe_io.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "ddvar/errors.hpp"
#include "ddvar/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot payload is written as native little-endian doubles");

namespace ddvar {

namespace {

constexpr const char* kMagic = "ddvar-state";

void append_field(std::string& out, const Field2& f) {
    const char* raw = reinterpret_cast<const char*>(f.v.data());
    out.append(raw, f.v.size() * sizeof(double));
}

void read_field(const std::string& bytes, size_t& pos, Field2& f) {
    std::memcpy(f.v.data(), bytes.data() + pos, f.v.size() * sizeof(double));
    pos += f.v.size() * sizeof(double);
}

}  // namespace

std::string state_to_snapshot(const SweState& z, const SweParams& params) {
    nlohmann::ordered_json header;
    header["magic"] = kMagic;
    header["nlon"] = z.nx();
    header["nlat"] = z.ny();
    header["layout"] = "u,v,h float64 little-endian, latitude rows, longitude fastest";
    header["params"] = {
        {"a", params.a},
        {"g", params.g},
        {"omega_rot", params.omega_rot},
        {"alpha_tz", params.alpha_tz},
        {"p_tz", params.p_tz},
        {"q_tz", params.q_tz},
        {"sigma_lon", params.sigma_lon},
        {"sigma_lat", params.sigma_lat},
        {"cfl_limit", params.cfl_limit},
        {"strict_paper_stencils", params.strict_paper_stencils},
    };
    std::string out = header.dump();
    out.push_back('\n');
    append_field(out, z.u);
    append_field(out, z.v);
    append_field(out, z.h);
    return out;
}

SweState state_from_snapshot(const std::string& bytes, SweParams* params_out) {
    size_t nl = bytes.find('\n');
    if (nl == std::string::npos) throw ProtocolError("state snapshot: missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("state snapshot: bad header: ") + e.what());
    }
    if (!header.contains("magic") || header["magic"] != kMagic)
        throw ProtocolError("state snapshot: wrong magic");
    int nlon = header.at("nlon").get<int>();
    int nlat = header.at("nlat").get<int>();
    if (nlon < 1 || nlat < 1) throw ProtocolError("state snapshot: bad dimensions");
    size_t expect = nl + 1 + 3 * static_cast<size_t>(nlon) * nlat * sizeof(double);
    if (bytes.size() != expect)
        throw ProtocolError("state snapshot: payload size " + std::to_string(bytes.size() - nl - 1) +
                            " does not match header dimensions");
    SweState z(nlon, nlat);
    size_t pos = nl + 1;
    read_field(bytes, pos, z.u);
    read_field(bytes, pos, z.v);
    read_field(bytes, pos, z.h);
    if (params_out) {
        const auto& p = header.at("params");
        params_out->a = p.at("a").get<double>();
        params_out->g = p.at("g").get<double>();
        params_out->omega_rot = p.at("omega_rot").get<double>();
        params_out->alpha_tz = p.at("alpha_tz").get<double>();
        params_out->p_tz = p.at("p_tz").get<int>();
        params_out->q_tz = p.at("q_tz").get<int>();
        params_out->sigma_lon = p.at("sigma_lon").get<double>();
        params_out->sigma_lat = p.at("sigma_lat").get<double>();
        params_out->cfl_limit = p.at("cfl_limit").get<double>();
        params_out->strict_paper_stencils = p.at("strict_paper_stencils").get<bool>();
    }
    return z;
}

void write_state_snapshot(const std::filesystem::path& path, const SweState& z,
                          const SweParams& params) {
    atomic_write(path, state_to_snapshot(z, params));
}

SweState read_state_snapshot(const std::filesystem::path& path, SweParams* params_out) {
    return state_from_snapshot(read_file(path), params_out);
}

}  // namespace ddvar
