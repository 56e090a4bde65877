#include <json.hpp>

#include "ddvar/spacetime.hpp"

namespace ddvar {

namespace {

nlohmann::ordered_json span_json(const AxisSpan& s) {
    nlohmann::ordered_json j;
    j["start"] = s.start;
    j["length"] = s.length;
    if (s.period > 0) j["period"] = s.period;
    return j;
}

}  // namespace

std::string decomposition_to_json(const Decomposition& dec) {
    nlohmann::ordered_json j;
    j["q"] = dec.q;
    j["p1"] = dec.p1;
    j["p2"] = dec.p2;
    j["o_x"] = dec.o_x;
    j["o_y"] = dec.o_y;
    j["o_t"] = dec.o_t;
    j["grid"] = {{"nlon", dec.grid.nlon}, {"nlat", dec.grid.nlat}, {"M", dec.grid.M}};
    j["subdomains"] = nlohmann::ordered_json::array();
    for (const Subdomain& s : dec.subdomains) {
        nlohmann::ordered_json sj;
        sj["j"] = s.j;
        sj["i"] = s.i;
        sj["i1"] = s.i1;
        sj["i2"] = s.i2;
        sj["time_range"] = span_json(s.time_range);
        sj["lon_range"] = span_json(s.lon_range);
        sj["lat_range"] = span_json(s.lat_range);
        sj["owned_time_range"] = span_json(s.owned_time_range);
        sj["owned_lon_range"] = span_json(s.owned_lon_range);
        sj["owned_lat_range"] = span_json(s.owned_lat_range);
        j["subdomains"].push_back(sj);
    }
    return j.dump(2);
}

}  // namespace ddvar
