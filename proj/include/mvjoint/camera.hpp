#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "mvjoint/core.hpp"

namespace mvjoint {

using Mat3 = std::array<double, 9>;  // row-major
using Vec3 = std::array<double, 3>;

inline Vec3 mat3_mul_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline double mat3_det(const Mat3& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

inline Mat3 mat3_inverse(const Mat3& m) {
    double det = mat3_det(m);
    double scale = 0.0;
    for (double x : m) scale = std::max(scale, std::abs(x));
    if (std::abs(det) < 1e-12 * std::max(1.0, scale * scale * scale))
        throw std::invalid_argument("mat3_inverse: matrix is singular or ill-conditioned");
    double inv = 1.0 / det;
    return {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
            (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
            (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
            (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
            (m[0] * m[4] - m[1] * m[3]) * inv};
}

/// Pinhole camera. Pixel coordinates enter the projection as the
/// homogeneous vector [row, col, 1], so the intrinsic matrix must be
/// expressed in that axis order (README documents the JSON layout).
struct CameraParams {
    Mat3 intrinsic = mat3_identity();  // P
    Mat3 rotation = mat3_identity();   // R
    Vec3 translation = {0, 0, 0};      // T

    void validate() const {
        mat3_inverse(intrinsic);
        mat3_inverse(rotation);
    }
};

struct PixelProjection {
    int row = 0;
    int col = 0;
    bool degenerate = false;  // projected depth fell at or behind the camera plane

    bool in_frame(int rows, int cols) const {
        return !degenerate && row >= 0 && row < rows && col >= 0 && col < cols;
    }
};

/// Two-step warp of a pixel through world space: lift (row, col) at the given
/// depth into the source camera frame, then reproject into the destination
/// camera and round to the nearest pixel.
inline PixelProjection project_pixel(int row, int col, double depth,
                                     const CameraParams& cam_src,
                                     const CameraParams& cam_dst) {
    if (!(depth > 0.0))
        throw std::invalid_argument("project_pixel: depth must be positive");
    Vec3 pix = {double(row), double(col), 1.0};
    Vec3 ray = mat3_mul_vec(mat3_inverse(cam_src.intrinsic), pix);
    Vec3 scaled = {ray[0] * depth, ray[1] * depth, ray[2] * depth};
    Vec3 world = mat3_mul_vec(cam_src.rotation, scaled);
    for (int i = 0; i < 3; ++i) world[i] += cam_src.translation[i];

    Vec3 local = {world[0] - cam_dst.translation[0],
                  world[1] - cam_dst.translation[1],
                  world[2] - cam_dst.translation[2]};
    Vec3 cam = mat3_mul_vec(cam_dst.intrinsic,
                            mat3_mul_vec(mat3_inverse(cam_dst.rotation), local));

    PixelProjection out;
    if (cam[2] <= 1e-9) {
        out.degenerate = true;
        return out;
    }
    out.row = static_cast<int>(std::lround(cam[0] / cam[2]));
    out.col = static_cast<int>(std::lround(cam[1] / cam[2]));
    return out;
}

}  // namespace mvjoint
