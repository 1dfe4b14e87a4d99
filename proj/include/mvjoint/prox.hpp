#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvjoint/core.hpp"
#include "mvjoint/linops.hpp"

namespace mvjoint {

/// Chambolle dual-projection parameters. The dual step must stay in
/// (0, 0.25] for the fixed-point iteration to converge.
struct TvConfig {
    int inner_iterations = 30;
    double dual_step = 0.248;

    void validate() const {
        if (inner_iterations < 1)
            throw std::invalid_argument("TvConfig: inner_iterations < 1");
        if (!(dual_step > 0.0) || dual_step > 0.25)
            throw std::invalid_argument("TvConfig: dual_step must be in (0, 0.25]");
    }
};

namespace detail {

// Forward differences with Neumann boundary: zero at the last row/column.
inline void tv_gradient(const std::vector<double>& z, int rows, int cols,
                        std::vector<double>& gx, std::vector<double>& gy) {
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            size_t i = size_t(r) * cols + c;
            gx[i] = c + 1 < cols ? z[i + 1] - z[i] : 0.0;
            gy[i] = r + 1 < rows ? z[i + cols] - z[i] : 0.0;
        }
}

// Negative adjoint of tv_gradient.
inline void tv_divergence(const std::vector<double>& px, const std::vector<double>& py,
                          int rows, int cols, std::vector<double>& div) {
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            size_t i = size_t(r) * cols + c;
            double dx = 0.0, dy = 0.0;
            if (c == 0)
                dx = px[i];
            else if (c < cols - 1)
                dx = px[i] - px[i - 1];
            else
                dx = -px[i - 1];
            if (r == 0)
                dy = py[i];
            else if (r < rows - 1)
                dy = py[i] - py[i - cols];
            else
                dy = -py[i - cols];
            div[i] = dx + dy;
        }
}

}  // namespace detail

/// Isotropic discrete total variation.
inline double tv_norm(const Image& im) {
    double tv = 0.0;
    for (int r = 0; r < im.rows; ++r)
        for (int c = 0; c < im.cols; ++c) {
            double dx = c + 1 < im.cols ? im.at(r, c + 1) - im.at(r, c) : 0.0;
            double dy = r + 1 < im.rows ? im.at(r + 1, c) - im.at(r, c) : 0.0;
            tv += std::sqrt(dx * dx + dy * dy);
        }
    return tv;
}

inline double tv_norm(const ImageVector& x, int rows, int cols) {
    return tv_norm(reshape_inverse(x, rows, cols));
}

/// prox of weight * TV at x via Chambolle's dual projection: iterate the
/// dual field p and return x - weight * div(p).
inline ImageVector prox_tv(const ImageVector& x, int rows, int cols, double weight,
                           const TvConfig& cfg = {}) {
    cfg.validate();
    if (!(weight > 0.0)) throw std::invalid_argument("prox_tv: weight must be positive");
    if (x.size() != size_t(rows) * cols)
        throw std::invalid_argument("prox_tv: dimension mismatch");
    const size_t n = x.size();
    std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), work(n), gx(n), gy(n);
    const double tau = cfg.dual_step;
    for (int it = 0; it < cfg.inner_iterations; ++it) {
        detail::tv_divergence(px, py, rows, cols, div);
        for (size_t i = 0; i < n; ++i) work[i] = div[i] - x[i] / weight;
        detail::tv_gradient(work, rows, cols, gx, gy);
        for (size_t i = 0; i < n; ++i) {
            double mag = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
            double denom = 1.0 + tau * mag;
            px[i] = (px[i] + tau * gx[i]) / denom;
            py[i] = (py[i] + tau * gy[i]) / denom;
        }
    }
    detail::tv_divergence(px, py, rows, cols, div);
    ImageVector out(n);
    for (size_t i = 0; i < n; ++i) out[i] = x[i] - weight * div[i];
    return out;
}

inline Image prox_tv(const Image& im, double weight, const TvConfig& cfg = {}) {
    return reshape_inverse(prox_tv(im.v, im.rows, im.cols, weight, cfg), im.rows,
                           im.cols);
}

/// Euclidean projection onto the l2 ball of the given radius.
inline std::vector<double> project_ball(const std::vector<double>& y, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
    double norm = vec_norm(y);
    if (norm <= radius) return y;
    std::vector<double> out(y.size());
    double s = radius / norm;
    for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] * s;
    return out;
}

/// prox of the indicator of {X : ||S_j X - S_j Y|| <= radius} where S_j
/// selects one of block_count equal blocks of the stacked vector. S_j is a
/// tight frame (S_j S_j* = I), so the composed prox is the closed form
///   X + S_j* (P_ball - I)(S_j X - S_j Y):
/// only the selected block moves.
inline std::vector<double> prox_selector_ball(const std::vector<double>& x,
                                              int block_count, int block,
                                              const std::vector<double>& center,
                                              double radius) {
    if (block_count < 1 || block < 0 || block >= block_count)
        throw std::invalid_argument("prox_selector_ball: bad block index");
    if (x.size() != center.size() || x.size() % size_t(block_count) != 0)
        throw std::invalid_argument("prox_selector_ball: size mismatch");
    const size_t n = x.size() / block_count;
    const size_t off = size_t(block) * n;
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) g[i] = x[off + i] - center[off + i];
    std::vector<double> pg = project_ball(g, radius);
    std::vector<double> out = x;
    for (size_t i = 0; i < n; ++i) out[off + i] = x[off + i] + (pg[i] - g[i]);
    return out;
}

/// Frame constants gamma1 * I <= B B* <= gamma2 * I. gamma1 is reported as 0
/// (the stacked correlation operator always has a kernel through hole
/// coordinates); gamma2 is an inflated power-iteration estimate.
struct FrameBounds {
    double gamma1 = 0.0;
    double gamma2 = 1.0;
};

template <LinearOp Op>
FrameBounds estimate_frame_bounds(const Op& op, int iterations = 100,
                                  uint32_t seed = 0x5eedu) {
    std::vector<double> u = seeded_vector(size_t(op.range_size()), seed);
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> v = op.apply_transpose(u);
        double nu = vec_norm(u);
        if (nu < 1e-300) {
            lambda = 0.0;
            break;
        }
        lambda = vec_dot(v, v) / (nu * nu);
        std::vector<double> w = op.apply(v);
        double nw = vec_norm(w);
        if (nw < 1e-300) {
            lambda = 0.0;
            break;
        }
        for (double& x : w) x /= nw;
        u.swap(w);
    }
    FrameBounds fb;
    fb.gamma1 = 0.0;
    fb.gamma2 = std::max(1.01 * lambda, 1e-12);
    return fb;
}

/// prox of the indicator of {x : ||B x||^2 <= radius_sq} for a non-tight B,
/// via the dual fixed-point iteration
///   u <- mu (I - P_ball)(u/mu + B p),   p <- x - B* u,
/// with mu = 2/(gamma1 + gamma2). u converges linearly; passing u_state
/// warm-starts consecutive calls.
template <LinearOp Op>
std::vector<double> prox_affine_ball(const std::vector<double>& x, const Op& op,
                                     double radius_sq, const FrameBounds& bounds,
                                     int iterations,
                                     std::vector<double>* u_state = nullptr) {
    if (!(radius_sq > 0.0))
        throw std::invalid_argument("prox_affine_ball: radius_sq must be positive");
    if (x.size() != size_t(op.domain_size()))
        throw std::invalid_argument("prox_affine_ball: dimension mismatch");
    const double radius = std::sqrt(radius_sq);
    const double mu = 2.0 / (bounds.gamma1 + bounds.gamma2);

    std::vector<double> u(size_t(op.range_size()), 0.0);
    if (u_state && u_state->size() == size_t(op.range_size())) u = *u_state;

    std::vector<double> p = x;
    if (u_state && !u_state->empty()) {
        std::vector<double> bu = op.apply_transpose(u);
        for (size_t i = 0; i < p.size(); ++i) p[i] = x[i] - bu[i];
    }
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> w = op.apply(p);
        for (size_t i = 0; i < w.size(); ++i) w[i] += u[i] / mu;
        std::vector<double> pw = project_ball(w, radius);
        for (size_t i = 0; i < w.size(); ++i) u[i] = mu * (w[i] - pw[i]);
        std::vector<double> bu = op.apply_transpose(u);
        for (size_t i = 0; i < p.size(); ++i) p[i] = x[i] - bu[i];
    }
    if (u_state) *u_state = u;
    return p;
}

}  // namespace mvjoint
