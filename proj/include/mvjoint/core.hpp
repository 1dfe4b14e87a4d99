#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvjoint {

/// Grayscale raster held in row-major order (left-to-right, then
/// top-to-bottom). Intensities live in [0, 255] as doubles; rounding to
/// 8 bit happens only when a file is written, so iterative solvers can
/// work in continuous space.
struct Image {
    int rows = 0;  // N1
    int cols = 0;  // N2
    std::vector<double> v;

    Image() = default;
    Image(int rows_, int cols_, double fill = 0.0)
        : rows(rows_), cols(cols_) {
        if (rows_ <= 0 || cols_ <= 0)
            throw std::invalid_argument("Image: dimensions must be positive");
        v.assign(static_cast<size_t>(rows_) * cols_, fill);
    }

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool same_dims(const Image& o) const { return rows == o.rows && cols == o.cols; }
    bool in_frame(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
};

/// Flattened image, length N1*N2. reshape()/reshape_inverse() are exact
/// mutual inverses because Image is already stored row-major.
using ImageVector = std::vector<double>;

inline ImageVector reshape(const Image& im) { return im.v; }

inline Image reshape_inverse(const ImageVector& x, int rows, int cols) {
    if (rows <= 0 || cols <= 0 ||
        x.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
        throw std::invalid_argument(
            "reshape_inverse: vector length does not match " +
            std::to_string(rows) + "x" + std::to_string(cols));
    Image im(rows, cols);
    im.v = x;
    return im;
}

/// Integer motion field. dr/dc give the vertical/horizontal displacement of
/// each source pixel; destinations may land out of frame and are kept as-is
/// (never wrapped). valid == 0 marks a degenerate projection; such pixels
/// produce no warp entry.
struct MotionField {
    int rows = 0, cols = 0;
    std::vector<int> dr, dc;
    std::vector<uint8_t> valid;

    MotionField() = default;
    MotionField(int rows_, int cols_) : rows(rows_), cols(cols_) {
        if (rows_ <= 0 || cols_ <= 0)
            throw std::invalid_argument("MotionField: dimensions must be positive");
        size_t n = static_cast<size_t>(rows_) * cols_;
        dr.assign(n, 0);
        dc.assign(n, 0);
        valid.assign(n, 1);
    }

    size_t idx(int r, int c) const { return static_cast<size_t>(r) * cols + c; }
};

/// Discrete depth labeling plus the label-to-value table.
/// Calibrated mode: label_table holds depths (world units) built by uniform
/// sampling of inverse depth. Rectified mode: label_table holds integer
/// disparities (pixels) directly, ascending, which keeps the table monotone
/// in inverse depth.
struct DepthField {
    int rows = 0, cols = 0;
    std::vector<int> labels;
    std::vector<double> label_table;
    bool rectified = false;
    double lambda = 0.0;  // estimation parameters, recorded for the sidecar
    double tau = 0.0;

    int label_count() const { return static_cast<int>(label_table.size()); }
    int label(int r, int c) const { return labels[static_cast<size_t>(r) * cols + c]; }
    double value(int r, int c) const { return label_table[label(r, c)]; }
};

/// Uniformly samples inverse depth in [1/depth_max, 1/depth_min] and
/// returns the corresponding depths, ascending in inverse depth.
inline std::vector<double> make_depth_label_table(int label_count,
                                                  double depth_min,
                                                  double depth_max) {
    if (label_count < 1)
        throw std::invalid_argument("make_depth_label_table: need at least 1 label");
    if (!(depth_min > 0.0) || !(depth_max >= depth_min))
        throw std::invalid_argument("make_depth_label_table: need 0 < depth_min <= depth_max");
    std::vector<double> table(label_count);
    double inv_lo = 1.0 / depth_max, inv_hi = 1.0 / depth_min;
    for (int l = 0; l < label_count; ++l) {
        double t = label_count == 1 ? 0.0 : double(l) / (label_count - 1);
        table[l] = 1.0 / (inv_lo + t * (inv_hi - inv_lo));
    }
    return table;
}

constexpr double kPsnrCapDb = 99.0;  // reported for zero MSE, keeps RD tables finite

inline double psnr(const Image& a, const Image& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("psnr: dimension mismatch");
    double sse = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        double d = a.v[i] - b.v[i];
        sse += d * d;
    }
    double mse = sse / double(a.v.size());
    if (mse <= 0.0)
        return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

inline double mean_psnr(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("mean_psnr: view count mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += psnr(a[i], b[i]);
    return s / double(a.size());
}

inline double clamp_gray(double x) { return std::clamp(x, 0.0, 255.0); }

/// Round-half-up quantization used only at save time.
inline uint8_t quantize_gray(double x) {
    return static_cast<uint8_t>(clamp_gray(std::floor(x + 0.5)));
}

inline Image clamp_image(Image im) {
    for (double& x : im.v) x = clamp_gray(x);
    return im;
}

}  // namespace mvjoint
