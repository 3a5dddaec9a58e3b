#pragma once

#include "gastream/math.hpp"

#include <array>
#include <span>

namespace gastream {

using Rgb = std::array<float, 3>;

// Real spherical-harmonic color for a unit direction: basis up to `degree`, +0.5
// offset, clamped to [0, 1]. `coeffs` is coefficient-major, 3 floats per basis term.
Rgb sh_evaluate(int degree, std::span<const float> coeffs, const Vec3& dir);

} // namespace gastream
