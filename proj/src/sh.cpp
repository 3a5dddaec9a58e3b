#include "gastream/sh.hpp"

#include <algorithm>

namespace gastream {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

} // namespace

Rgb sh_evaluate(int degree, std::span<const float> coeffs, const Vec3& dir)
{
    std::array<double, 16> basis{};
    basis[0] = kC0;
    if (degree > 0) {
        const double x = dir.x(), y = dir.y(), z = dir.z();
        basis[1] = -kC1 * y;
        basis[2] = kC1 * z;
        basis[3] = -kC1 * x;
        if (degree > 1) {
            const double xx = x * x, yy = y * y, zz = z * z;
            const double xy = x * y, yz = y * z, xz = x * z;
            basis[4] = kC2[0] * xy;
            basis[5] = kC2[1] * yz;
            basis[6] = kC2[2] * (2.0 * zz - xx - yy);
            basis[7] = kC2[3] * xz;
            basis[8] = kC2[4] * (xx - yy);
            if (degree > 2) {
                basis[9] = kC3[0] * y * (3.0 * xx - yy);
                basis[10] = kC3[1] * xy * z;
                basis[11] = kC3[2] * y * (4.0 * zz - xx - yy);
                basis[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
                basis[13] = kC3[4] * x * (4.0 * zz - xx - yy);
                basis[14] = kC3[5] * z * (xx - yy);
                basis[15] = kC3[6] * x * (xx - 3.0 * yy);
            }
        }
    }
    const int terms = (degree + 1) * (degree + 1);
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int j = 0; j < terms; ++j) acc += basis[j] * coeffs[static_cast<std::size_t>(j * 3 + c)];
        out[c] = static_cast<float>(std::clamp(acc + 0.5, 0.0, 1.0));
    }
    return out;
}

} // namespace gastream
