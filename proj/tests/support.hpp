#pragma once

#include "gastream/binocular.hpp"
#include "gastream/raster_pipeline.hpp"
#include "gastream/rasterizer.hpp"
#include "gastream/skinning.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testing {

using namespace gastream;

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Quat random_quat(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    return Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng)
{
    return random_quat(rng).to_matrix();
}

// Random posed splats in front of an identity camera (+Z forward).
inline PosedGaussians random_scene(std::mt19937_64& rng, std::size_t n, int sh_degree, double spread = 0.6)
{
    PosedGaussians p;
    p.sh_degree = sh_degree;
    const int coeffs = sh_coeff_count(sh_degree);
    for (std::size_t i = 0; i < n; ++i) {
        p.positions.emplace_back(uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, 1.5, 4.0));
        const Mat3 R = random_rotation(rng);
        const Vec3 s(uniform(rng, 0.01, 0.12), uniform(rng, 0.01, 0.12), uniform(rng, 0.01, 0.12));
        const Mat3 cov = R * s.cwiseProduct(s).asDiagonal() * R.transpose();
        p.covariances.push_back(pack_upper(cov));
        p.rotations.push_back(random_rotation(rng));
        p.opacities.push_back(static_cast<float>(uniform(rng, 0.05, 1.0)));
        for (int c = 0; c < coeffs * 3; ++c) p.sh.push_back(static_cast<float>(uniform(rng, -0.6, 0.6)));
        p.scale_bound.push_back(s.maxCoeff());
    }
    return p;
}

inline float max_abs_diff(const FrameBuffer& a, const FrameBuffer& b)
{
    float m = 0.0f;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) m = std::max(m, std::abs(a.rgb[i] - b.rgb[i]));
    return m;
}

// Runs fn with a fixed OpenMP thread count, restoring the previous one.
template <typename Fn>
auto with_threads(int n, Fn&& fn)
{
    const int before = omp_get_max_threads();
    omp_set_num_threads(n);
    auto result = fn();
    omp_set_num_threads(before);
    return result;
}

inline std::filesystem::path temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("gastream_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace testing
