#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace preproc {

// Seedable generator used by every simulation.
//
// Engine: std::mt19937_64 (output sequence fixed by the C++ standard).
// Stream splitting: the engine for (seed, stream) is seeded with
// splitmix64(splitmix64(seed) ^ (stream + 0x9e3779b97f4a7c15)). Replication r of a
// scenario uses stream r. Uniforms take the top 53 bits; normals use the
// Marsaglia polar method; gammas use Marsaglia-Tsang. None of these depend
// on <random> distribution classes, whose output is implementation-defined.
class Rng {
public:
    static constexpr std::string_view kName = "mt19937_64+splitmix64/v1";

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    // Gamma with the given shape and unit rate.
    double gamma(double shape);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace preproc
