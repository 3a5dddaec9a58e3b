#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>

namespace gastream {

struct SmokeOptions {
    std::size_t splats = 20000;
    std::size_t bones = 24;
    std::uint64_t seed = 1;
    int resolution = 256;
    std::size_t frames = 30;
    double rate_hz = 60.0;
    int jpeg_quality = 80;
};

// synth -> in-process server -> replay (in order, then reordered) -> metrics against
// direct renders. Prints each check; true when all pass.
bool run_smoke(const SmokeOptions& options, std::ostream& out);

} // namespace gastream
