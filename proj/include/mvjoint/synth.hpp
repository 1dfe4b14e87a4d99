#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvjoint/core.hpp"

namespace mvjoint {

enum class SceneKind { translated_plane, two_plane_occlusion, textured_ramp };

inline SceneKind scene_kind_from_string(const std::string& s) {
    if (s == "translated-plane") return SceneKind::translated_plane;
    if (s == "two-plane-occlusion") return SceneKind::two_plane_occlusion;
    if (s == "textured-ramp") return SceneKind::textured_ramp;
    throw std::invalid_argument("unknown scene kind: " + s);
}

inline std::string to_string(SceneKind k) {
    switch (k) {
        case SceneKind::translated_plane: return "translated-plane";
        case SceneKind::two_plane_occlusion: return "two-plane-occlusion";
        case SceneKind::textured_ramp: return "textured-ramp";
    }
    return "?";
}

/// Desk-scale stand-in for a captured multi-view set. All shifts are
/// per-view-step disparities in pixels; view j sees the reference content
/// moved left by shift * j.
struct SceneSpec {
    SceneKind kind = SceneKind::translated_plane;
    int rows = 64;
    int cols = 64;
    int views = 2;
    int shift = 2;      // translated-plane disparity; textured-ramp max disparity
    int fg_shift = 4;   // two-plane foreground disparity
    int bg_shift = 1;   // two-plane background disparity
    uint32_t seed = 1;

    void validate() const {
        if (rows < 8 || cols < 8) throw std::invalid_argument("SceneSpec: scene too small");
        if (views < 2) throw std::invalid_argument("SceneSpec: need at least 2 views");
        if (shift < 0 || fg_shift < 0 || bg_shift < 0)
            throw std::invalid_argument("SceneSpec: shifts must be non-negative");
        if (kind == SceneKind::two_plane_occlusion && fg_shift <= bg_shift)
            throw std::invalid_argument("SceneSpec: foreground must be nearer (fg_shift > bg_shift)");
    }

    int max_disparity() const {
        switch (kind) {
            case SceneKind::translated_plane: return shift;
            case SceneKind::two_plane_occlusion: return fg_shift;
            case SceneKind::textured_ramp: return shift;
        }
        return 0;
    }
};

struct SyntheticScene {
    std::vector<Image> views;       // views[0] is the reference
    Image gt_disparity;             // per reference pixel, pixels per view step
    std::vector<Image> hole_masks;  // per non-reference view, 1 = occluded/uncovered
};

namespace detail {

// Piecewise-smooth random texture: a coarse bilinear field overlaid with a
// few constant-offset rectangles (sharp edges give the matcher something to
// lock onto while keeping the total variation low, like natural content).
// Rounded to integer gray levels so originals behave like 8-bit captures.
inline Image make_texture(int rows, int cols, uint32_t seed) {
    std::mt19937 eng(seed);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * (double(eng()) / 4294967296.0);
    };
    const int step = 12;
    const int gr = rows / step + 2, gc = cols / step + 2;
    std::vector<double> grid(size_t(gr) * gc);
    for (double& g : grid) g = uni(25.0, 230.0);
    Image im(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double fr = double(r) / step, fc = double(c) / step;
            int r0 = int(fr), c0 = int(fc);
            double ar = fr - r0, ac = fc - c0;
            double v00 = grid[size_t(r0) * gc + c0], v01 = grid[size_t(r0) * gc + c0 + 1];
            double v10 = grid[size_t(r0 + 1) * gc + c0],
                   v11 = grid[size_t(r0 + 1) * gc + c0 + 1];
            im.at(r, c) = (1 - ar) * ((1 - ac) * v00 + ac * v01) +
                          ar * ((1 - ac) * v10 + ac * v11);
        }
    const int rects = 4 + int(eng() % 4);
    for (int k = 0; k < rects; ++k) {
        int h = 3 + int(eng() % std::max(2, rows / 3));
        int w = 3 + int(eng() % std::max(2, cols / 3));
        int r0 = int(eng() % std::max(1, rows - h));
        int c0 = int(eng() % std::max(1, cols - w));
        double offset = (eng() % 2 ? 1.0 : -1.0) * uni(30.0, 90.0);
        for (int r = r0; r < r0 + h; ++r)
            for (int c = c0; c < c0 + w; ++c) im.at(r, c) += offset;
    }
    for (double& v : im.v) v = std::floor(clamp_gray(v) + 0.5);
    return im;
}

}  // namespace detail

inline SyntheticScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    SyntheticScene scene;
    const int J = spec.views, rows = spec.rows, cols = spec.cols;
    scene.gt_disparity = Image(rows, cols, 0.0);
    scene.hole_masks.assign(J - 1, Image(rows, cols, 0.0));

    if (spec.kind == SceneKind::translated_plane) {
        const int d = spec.shift;
        Image canvas = detail::make_texture(rows, cols + d * (J - 1), spec.seed);
        for (int j = 0; j < J; ++j) {
            Image v(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) v.at(r, c) = canvas.at(r, c + d * j);
            scene.views.push_back(std::move(v));
        }
        for (auto& px : scene.gt_disparity.v) px = double(d);
        // forward warping the reference leaves the rightmost d*j columns unwritten
        for (int j = 1; j < J; ++j)
            for (int r = 0; r < rows; ++r)
                for (int c = cols - d * j; c < cols; ++c)
                    if (c >= 0) scene.hole_masks[j - 1].at(r, c) = 1.0;
        return scene;
    }

    if (spec.kind == SceneKind::two_plane_occlusion) {
        const int fg = spec.fg_shift, bg = spec.bg_shift;
        // foreground square placed so it stays in frame across all views
        const int sq_h = rows / 2, sq_w = cols / 2 - fg * (J - 1) / 2;
        const int r0 = rows / 4, c0 = std::max(fg * (J - 1), cols / 4);
        const int r1 = r0 + sq_h - 1, c1 = std::min(cols - 2, c0 + std::max(4, sq_w) - 1);
        if (c1 <= c0) throw std::invalid_argument("SceneSpec: scene too narrow for the square");

        Image bg_canvas = detail::make_texture(rows, cols + bg * (J - 1), spec.seed);
        Image fg_tex = detail::make_texture(r1 - r0 + 1, c1 - c0 + 1, spec.seed + 101);
        for (double& v : fg_tex.v) v = std::floor(clamp_gray(v * 0.6 + 90.0) + 0.5);
        auto in_square = [&](int r, int c) {
            return r >= r0 && r <= r1 && c >= c0 && c <= c1;
        };

        for (int j = 0; j < J; ++j) {
            Image v(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    int fg_src = c + fg * j;  // view-0 column if this were foreground
                    if (in_square(r, fg_src)) {
                        v.at(r, c) = fg_tex.at(r - r0, fg_src - c0);
                    } else {
                        v.at(r, c) = bg_canvas.at(r, c + bg * j);
                        if (j > 0) {
                            int bg_src = c + bg * j;  // view-0 column of this background pixel
                            if (bg_src >= cols || in_square(r, bg_src))
                                scene.hole_masks[j - 1].at(r, c) = 1.0;
                        }
                    }
                }
            scene.views.push_back(std::move(v));
        }
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                scene.gt_disparity.at(r, c) = in_square(r, c) ? double(fg) : double(bg);
        return scene;
    }

    // textured-ramp: disparity bands increasing left to right, 0..shift
    const int dmax = spec.shift;
    Image canvas = detail::make_texture(rows, cols + dmax * (J - 1), spec.seed);
    const int bands = dmax + 1;
    const int band_w = std::max(1, cols / bands);
    auto disparity_at = [&](int c) { return std::min(dmax, c / band_w); };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            scene.gt_disparity.at(r, c) = double(disparity_at(c));

    for (int j = 0; j < J; ++j) {
        Image v(rows, cols, -1.0);
        if (j == 0) {
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) v.at(r, c) = canvas.at(r, c);
        } else {
            // forward render in raster order; nearer (larger-disparity) content wins
            std::vector<int> writer_d(size_t(rows) * cols, -1);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    int d = disparity_at(c);
                    int dst = c - d * j;
                    if (dst >= 0 && dst < cols) {
                        v.at(r, dst) = canvas.at(r, c);
                        writer_d[size_t(r) * cols + dst] = d;
                    }
                }
            for (int r = 0; r < rows; ++r) {
                int last_d = 0;
                for (int c = 0; c < cols; ++c) {
                    int wd = writer_d[size_t(r) * cols + c];
                    if (wd >= 0) {
                        last_d = wd;
                        continue;
                    }
                    scene.hole_masks[j - 1].at(r, c) = 1.0;
                    int src = c + last_d * j;  // continue the farther surface
                    v.at(r, c) = canvas.at(r, std::min(src, canvas.cols - 1));
                }
            }
        }
        scene.views.push_back(std::move(v));
    }
    return scene;
}

/// Ground-truth disparity as a rectified DepthField over the given label
/// range (labels are disparities disparity_min..disparity_max).
inline DepthField depth_field_from_disparity(const Image& disparity, int disparity_min,
                                             int disparity_max) {
    if (disparity_max < disparity_min)
        throw std::invalid_argument("depth_field_from_disparity: empty range");
    DepthField d;
    d.rows = disparity.rows;
    d.cols = disparity.cols;
    d.rectified = true;
    for (int l = disparity_min; l <= disparity_max; ++l) d.label_table.push_back(double(l));
    d.labels.resize(disparity.size());
    for (size_t i = 0; i < disparity.size(); ++i) {
        int l = int(std::lround(disparity.v[i])) - disparity_min;
        d.labels[i] = std::clamp(l, 0, disparity_max - disparity_min);
    }
    return d;
}

}  // namespace mvjoint
