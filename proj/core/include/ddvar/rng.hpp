#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ddvar {

// All randomness in the artifact flows from one master seed through named
// substreams, so adding an experiment stage never shifts the draws of another.
// Substream seeding mixes the master seed with an FNV-1a hash of the name.
//
// Gaussian draws use a hand-rolled Box-Muller transform instead of
// std::normal_distribution, whose output sequence is implementation defined
// and therefore not reproducible across standard libraries.
class Rng {
  public:
    Rng(std::uint64_t master_seed, std::string_view substream);

    std::uint64_t raw() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    // Standard normal deviate; two uniforms consumed per call, none cached.
    double normal();

    static std::uint64_t fnv1a(std::string_view s);

  private:
    std::mt19937_64 engine_;
};

}  // namespace ddvar
