#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mvjoint/camera.hpp"
#include "mvjoint/core.hpp"

namespace mvjoint {

/// Sparse forward-warping operator: a partial permutation of the flattened
/// image (at most one unit entry per row and per column). col_of_row[r] is
/// the source index feeding destination r, or -1 for a hole row.
struct WarpOperator {
    int n = 0;               // N = N1*N2
    int src_rows = 0, src_cols = 0;
    std::vector<int> col_of_row;
    std::vector<int> hole_rows;  // ascending

    int domain_size() const { return n; }
    int range_size() const { return n; }

    ImageVector apply(const ImageVector& x) const {
        if (x.size() != size_t(n))
            throw std::invalid_argument("WarpOperator::apply: dimension mismatch");
        ImageVector y(n, 0.0);
        for (int r = 0; r < n; ++r)
            if (col_of_row[r] >= 0) y[r] = x[col_of_row[r]];
        return y;
    }

    ImageVector apply_transpose(const ImageVector& y) const {
        if (y.size() != size_t(n))
            throw std::invalid_argument("WarpOperator::apply_transpose: dimension mismatch");
        ImageVector x(n, 0.0);
        for (int r = 0; r < n; ++r)
            if (col_of_row[r] >= 0) x[col_of_row[r]] = y[r];
        return x;
    }

    int entry_count() const {
        int k = 0;
        for (int c : col_of_row) k += (c >= 0);
        return k;
    }
};

/// Diagonal 0/1 mask; zero exactly on the hole rows of its paired operator.
struct OcclusionMask {
    std::vector<double> diag;

    ImageVector apply(const ImageVector& x) const {
        if (x.size() != diag.size())
            throw std::invalid_argument("OcclusionMask::apply: dimension mismatch");
        ImageVector y(x.size());
        for (size_t i = 0; i < x.size(); ++i) y[i] = diag[i] * x[i];
        return y;
    }
};

/// Calibrated mode: per-pixel displacement from reprojecting each reference
/// pixel at its labeled depth into the destination camera. Degenerate
/// projections are flagged and will produce no warp entry.
inline MotionField motion_from_depth(const DepthField& depth,
                                     const CameraParams& cam_src,
                                     const CameraParams& cam_dst) {
    if (depth.rectified)
        throw std::invalid_argument(
            "motion_from_depth: rectified field needs the scale overload");
    MotionField m(depth.rows, depth.cols);
    for (int r = 0; r < depth.rows; ++r)
        for (int c = 0; c < depth.cols; ++c) {
            size_t i = m.idx(r, c);
            PixelProjection p = project_pixel(r, c, depth.value(r, c), cam_src, cam_dst);
            if (p.degenerate) {
                m.valid[i] = 0;
                continue;
            }
            m.dr[i] = p.row - r;
            m.dc[i] = p.col - c;
        }
    return m;
}

/// Rectified mode: disparity d moves a pixel left by d * scale columns
/// (left-to-right camera order), no vertical motion.
inline MotionField motion_from_depth(const DepthField& depth, double scale) {
    if (!depth.rectified)
        throw std::invalid_argument(
            "motion_from_depth: calibrated field needs the camera overload");
    MotionField m(depth.rows, depth.cols);
    for (int r = 0; r < depth.rows; ++r)
        for (int c = 0; c < depth.cols; ++c)
            m.dc[m.idx(r, c)] = -int(std::lround(depth.value(r, c) * scale));
    return m;
}

/// Builds A and M from a motion field. Sources are scanned in raster order
/// and the last writer wins: a later source replaces any earlier entry in
/// the same destination row. Out-of-frame destinations are dropped, never
/// wrapped. Hole rows are the destinations never written; the mask is zero
/// exactly there.
inline std::pair<WarpOperator, OcclusionMask> build_operator(const MotionField& m) {
    WarpOperator op;
    op.src_rows = m.rows;
    op.src_cols = m.cols;
    op.n = m.rows * m.cols;
    op.col_of_row.assign(op.n, -1);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            size_t i = m.idx(r, c);
            if (!m.valid[i]) continue;
            int dst_r = r + m.dr[i];
            int dst_c = c + m.dc[i];
            if (dst_r < 0 || dst_r >= m.rows || dst_c < 0 || dst_c >= m.cols) continue;
            op.col_of_row[dst_r * m.cols + dst_c] = int(i);
        }
    OcclusionMask mask;
    mask.diag.assign(op.n, 1.0);
    for (int r = 0; r < op.n; ++r)
        if (op.col_of_row[r] < 0) {
            op.hole_rows.push_back(r);
            mask.diag[r] = 0.0;
        }
    return {op, mask};
}

/// Text export: "N nnz" header, one "row col" pair per entry line, then the
/// mask diagonal as a single 0/1 line.
inline void save_warp_operator(const WarpOperator& op, const OcclusionMask& mask,
                               const std::string& path) {
    if (mask.diag.size() != size_t(op.n))
        throw std::invalid_argument("save_warp_operator: mask size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << op.n << " " << op.entry_count() << "\n";
    for (int r = 0; r < op.n; ++r)
        if (op.col_of_row[r] >= 0) out << r << " " << op.col_of_row[r] << "\n";
    for (int i = 0; i < op.n; ++i)
        out << int(mask.diag[i]) << (i + 1 == op.n ? "\n" : " ");
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::pair<WarpOperator, OcclusionMask> load_warp_operator(
    const std::string& path, int src_rows = 0, int src_cols = 0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    WarpOperator op;
    int nnz = 0;
    if (!(in >> op.n >> nnz)) throw std::runtime_error("bad operator header: " + path);
    op.src_rows = src_rows;
    op.src_cols = src_cols;
    op.col_of_row.assign(op.n, -1);
    for (int k = 0; k < nnz; ++k) {
        int r, c;
        if (!(in >> r >> c)) throw std::runtime_error("truncated operator file: " + path);
        if (r < 0 || r >= op.n || c < 0 || c >= op.n)
            throw std::runtime_error("operator index out of range: " + path);
        op.col_of_row[r] = c;
    }
    OcclusionMask mask;
    mask.diag.assign(op.n, 1.0);
    for (int i = 0; i < op.n; ++i) {
        int b;
        if (!(in >> b)) throw std::runtime_error("truncated mask line: " + path);
        mask.diag[i] = double(b != 0);
    }
    for (int r = 0; r < op.n; ++r)
        if (op.col_of_row[r] < 0) op.hole_rows.push_back(r);
    return {op, mask};
}

}  // namespace mvjoint
