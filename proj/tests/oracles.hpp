#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check: dense linear algebra with its own eigensolver, exact
// ball/ellipsoid projections via KKT conditions, a scalar forward warper,
// brute-force enumeration for cuts and labelings, and a long-run projected
// subgradient solver for the joint problem.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mvjoint/core.hpp"
#include "mvjoint/solver.hpp"
#include "mvjoint/warp.hpp"

namespace oracle {

using Vec = std::vector<double>;

// --- dense matrices --------------------------------------------------------

struct Dense {
    int rows = 0, cols = 0;
    Vec a;

    Dense() = default;
    Dense(int r, int c) : rows(r), cols(c), a(size_t(r) * c, 0.0) {}
    double& at(int r, int c) { return a[size_t(r) * cols + c]; }
    double at(int r, int c) const { return a[size_t(r) * cols + c]; }

    Vec mul(const Vec& x) const {
        Vec y(rows, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) y[r] += at(r, c) * x[c];
        return y;
    }
    Vec mul_t(const Vec& y) const {
        Vec x(cols, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) x[c] += at(r, c) * y[r];
        return x;
    }
    Dense gram() const {  // A^T A
        Dense g(cols, cols);
        for (int i = 0; i < cols; ++i)
            for (int j = 0; j < cols; ++j) {
                double s = 0;
                for (int r = 0; r < rows; ++r) s += at(r, i) * at(r, j);
                g.at(i, j) = s;
            }
        return g;
    }
};

// Dense snapshot of anything with apply/apply_transpose.
template <class Op>
Dense materialize(const Op& op) {
    Dense d(op.range_size(), op.domain_size());
    Vec e(op.domain_size(), 0.0);
    for (int c = 0; c < op.domain_size(); ++c) {
        e.assign(op.domain_size(), 0.0);
        e[c] = 1.0;
        Vec col = op.apply(e);
        for (int r = 0; r < op.range_size(); ++r) d.at(r, c) = col[r];
    }
    return d;
}

// Cyclic Jacobi eigendecomposition for small symmetric matrices:
// A = Q diag(lambda) Q^T.
inline void jacobi_eigen(const Dense& A, Dense& Q, Vec& lambda) {
    const int n = A.rows;
    if (A.cols != n) throw std::invalid_argument("jacobi_eigen: not square");
    Dense S = A;
    Q = Dense(n, n);
    for (int i = 0; i < n; ++i) Q.at(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += S.at(p, q) * S.at(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = S.at(p, q);
                if (std::abs(apq) < 1e-30) continue;
                double theta = (S.at(q, q) - S.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double skp = S.at(k, p), skq = S.at(k, q);
                    S.at(k, p) = c * skp - s * skq;
                    S.at(k, q) = s * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    double spk = S.at(p, k), sqk = S.at(q, k);
                    S.at(p, k) = c * spk - s * sqk;
                    S.at(q, k) = s * spk + c * sqk;
                }
                for (int k = 0; k < n; ++k) {
                    double qkp = Q.at(k, p), qkq = Q.at(k, q);
                    Q.at(k, p) = c * qkp - s * qkq;
                    Q.at(k, q) = s * qkp + c * qkq;
                }
            }
    }
    lambda.assign(n, 0.0);
    for (int i = 0; i < n; ++i) lambda[i] = S.at(i, i);
}

// --- exact projections -----------------------------------------------------

// Projection of x onto {z : z^T M z <= c} (M = B^T B) via eigendecomposition
// of M and a bisection on the KKT multiplier.
inline Vec project_quadratic_ball_eig(const Dense& B, const Vec& x, double c) {
    Dense M = B.gram();
    Dense Q;
    Vec lambda;
    jacobi_eigen(M, Q, lambda);
    const int n = M.rows;
    Vec xp(n, 0.0);  // Q^T x
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) xp[i] += Q.at(k, i) * x[k];
    auto quad = [&](double nu) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double w = xp[i] / (1.0 + nu * std::max(0.0, lambda[i]));
            s += std::max(0.0, lambda[i]) * w * w;
        }
        return s;
    };
    if (quad(0.0) <= c) return x;
    double lo = 0.0, hi = 1.0;
    while (quad(hi) > c) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (quad(mid) > c ? lo : hi) = mid;
    }
    double nu = 0.5 * (lo + hi);
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = xp[i] / (1.0 + nu * std::max(0.0, lambda[i]));
    Vec z(n, 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) z[k] += Q.at(k, i) * w[i];
    return z;
}

// For J = 2 the stacked correlation operator has mutually orthogonal rows
// (disjoint pixel pairs), so B B^T is diagonal and the projection onto
// {z : ||Bz||^2 <= c} reduces to a scalar root-find. O(N), no eigensolver.
inline Vec project_correlation_pair(const mvjoint::CorrelationOperator& B, const Vec& x,
                                    double c) {
    if (B.blocks() != 1)
        throw std::invalid_argument("project_correlation_pair: J must be 2");
    Vec y = B.apply(x);
    const int n = B.n;
    Vec d(n, 0.0);  // row norms squared of B
    for (int r = 0; r < n; ++r) {
        double m = B.masks[0].diag[r];
        d[r] = m * (1.0 + (B.ops[0].col_of_row[r] >= 0 ? 1.0 : 0.0));
    }
    auto quad = [&](double nu) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) {
            double w = y[r] / (1.0 + nu * d[r]);
            s += w * w;
        }
        return s;
    };
    if (quad(0.0) <= c) return x;
    double lo = 0.0, hi = 1.0;
    while (quad(hi) > c) hi *= 2.0;
    for (int it = 0; it < 120; ++it) {
        double mid = 0.5 * (lo + hi);
        (quad(mid) > c ? lo : hi) = mid;
    }
    double nu = 0.5 * (lo + hi);
    Vec u(n);
    for (int r = 0; r < n; ++r) u[r] = nu * y[r] / (1.0 + nu * d[r]);
    Vec bu = B.apply_transpose(u);
    Vec z(x.size());
    for (size_t i = 0; i < x.size(); ++i) z[i] = x[i] - bu[i];
    return z;
}

// Projected-gradient minimization of 1/2 ||z - x||^2 over a convex set with
// a supplied projector; converges to the projection of x.
inline Vec projected_gradient_project(const Vec& x, const std::function<Vec(const Vec&)>& P,
                                      double step = 0.5, int max_iter = 4000,
                                      double tol = 1e-10) {
    Vec z = P(x);
    for (int it = 0; it < max_iter; ++it) {
        Vec g(z.size());
        for (size_t i = 0; i < z.size(); ++i) g[i] = z[i] - step * (z[i] - x[i]);
        Vec nz = P(g);
        double diff = 0.0;
        for (size_t i = 0; i < z.size(); ++i) diff += (nz[i] - z[i]) * (nz[i] - z[i]);
        z.swap(nz);
        if (diff < tol * tol) break;
    }
    return z;
}

// --- brute force helpers ----------------------------------------------------

// Minimum s-t cut by enumerating all side assignments (x = 1: sink side).
struct BruteGraph {
    int n = 0;
    std::vector<std::pair<double, double>> term;          // (source_cap, sink_cap)
    std::vector<std::tuple<int, int, double, double>> edges;  // u, v, cap, rev

    explicit BruteGraph(int nodes) : n(nodes), term(nodes, {0.0, 0.0}) {}

    double min_cut() const {
        double best = 1e300;
        for (int mask = 0; mask < (1 << n); ++mask) {
            double cut = 0.0;
            for (int i = 0; i < n; ++i)
                cut += (mask >> i & 1) ? term[i].first : term[i].second;
            for (const auto& [u, v, cap, rev] : edges) {
                bool su = !(mask >> u & 1), sv = !(mask >> v & 1);
                if (su && !sv) cut += cap;
                if (sv && !su) cut += rev;
            }
            best = std::min(best, cut);
        }
        return best;
    }
};

// Direct pixel-pushing forward warp in raster order; unwritten destinations
// stay zero.
inline mvjoint::Image forward_warp_reference(const mvjoint::Image& im,
                                             const mvjoint::MotionField& m) {
    mvjoint::Image out(im.rows, im.cols, 0.0);
    for (int r = 0; r < im.rows; ++r)
        for (int c = 0; c < im.cols; ++c) {
            size_t i = m.idx(r, c);
            if (!m.valid[i]) continue;
            int dr = r + m.dr[i], dc = c + m.dc[i];
            if (dr < 0 || dr >= im.rows || dc < 0 || dc >= im.cols) continue;
            out.at(dr, dc) = im.at(r, c);
        }
    return out;
}

// Exhaustive minimum of the labeling energy over all L^n labelings.
inline double brute_force_labeling_energy(const mvjoint::CostVolume& vol, double lambda,
                                          double tau) {
    const int n = vol.rows * vol.cols;
    const int L = vol.labels;
    std::vector<int> labels(n, 0);
    double best = 1e300;
    while (true) {
        double e = 0.0;
        for (int r = 0; r < vol.rows; ++r)
            for (int c = 0; c < vol.cols; ++c) {
                int p = r * vol.cols + c;
                e += vol.at(r, c, labels[p]);
                if (c + 1 < vol.cols)
                    e += lambda * std::min(double(std::abs(labels[p] - labels[p + 1])), tau);
                if (r + 1 < vol.rows)
                    e += lambda *
                         std::min(double(std::abs(labels[p] - labels[p + vol.cols])), tau);
            }
        best = std::min(best, e);
        int k = 0;
        while (k < n && ++labels[k] == L) labels[k++] = 0;
        if (k == n) break;
    }
    return best;
}

// --- long-run solver oracle --------------------------------------------------

// Generic solver for the 2-view joint problem: projected subgradient descent
// on the TV objective with Dykstra projections onto the intersection of the
// two fidelity balls and the correlation set (each projected exactly).
// Returns the best feasible objective seen.
inline double subgradient_joint_oracle(const mvjoint::JointProblem& prob,
                                       long iterations, double step0) {
    using namespace mvjoint;
    if (prob.view_count() != 2)
        throw std::invalid_argument("subgradient_joint_oracle: J must be 2");
    const int rows = prob.decoded[0].rows, cols = prob.decoded[0].cols;
    const size_t n = size_t(rows) * cols;
    const size_t total = 2 * n;
    const double fid_radius = prob.epsilon1 * std::sqrt(double(n));
    const double corr_c = prob.epsilon2 * double(n);
    CorrelationOperator B(prob);

    Vec y(total);
    for (int j = 0; j < 2; ++j)
        std::copy(prob.decoded[j].v.begin(), prob.decoded[j].v.end(),
                  y.begin() + size_t(j) * n);

    auto project_fid = [&](Vec z, int j) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double d = z[j * n + i] - y[j * n + i];
            s += d * d;
        }
        double norm = std::sqrt(s);
        if (norm > fid_radius) {
            double f = fid_radius / norm;
            for (size_t i = 0; i < n; ++i)
                z[j * n + i] = y[j * n + i] + f * (z[j * n + i] - y[j * n + i]);
        }
        return z;
    };
    auto project_corr = [&](const Vec& z) { return project_correlation_pair(B, z, corr_c); };
    auto feasible = [&](const Vec& z, double slack) {
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double d = z[j * n + i] - y[j * n + i];
                s += d * d;
            }
            if (std::sqrt(s) > fid_radius * (1.0 + slack)) return false;
        }
        Vec bz = B.apply(z);
        double s = 0.0;
        for (double v : bz) s += v * v;
        return s <= corr_c * (1.0 + slack);
    };
    auto project_all = [&](Vec z) {  // Dykstra over the three sets
        Vec p1(total, 0.0), p2(total, 0.0), p3(total, 0.0);
        for (int cycle = 0; cycle < 24; ++cycle) {
            Vec w(total);
            for (size_t i = 0; i < total; ++i) w[i] = z[i] + p1[i];
            Vec zn = project_fid(w, 0);
            for (size_t i = 0; i < total; ++i) p1[i] = w[i] - zn[i];
            for (size_t i = 0; i < total; ++i) w[i] = zn[i] + p2[i];
            zn = project_fid(w, 1);
            for (size_t i = 0; i < total; ++i) p2[i] = w[i] - zn[i];
            for (size_t i = 0; i < total; ++i) w[i] = zn[i] + p3[i];
            z = project_corr(w);
            for (size_t i = 0; i < total; ++i) p3[i] = w[i] - z[i];
            if (feasible(z, 1e-9) && cycle >= 2) break;
        }
        return z;
    };
    auto objective = [&](const Vec& z) {
        double o = 0.0;
        for (int j = 0; j < 2; ++j)
            o += mvjoint::tv_norm(Vec(z.begin() + size_t(j) * n,
                                      z.begin() + size_t(j + 1) * n),
                                  rows, cols);
        return o;
    };
    // subgradient of isotropic TV via the dual field of the gradient
    auto subgrad = [&](const Vec& z) {
        Vec g(total, 0.0);
        for (int j = 0; j < 2; ++j) {
            const size_t off = size_t(j) * n;
            std::vector<double> px(n, 0.0), py(n, 0.0);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    size_t i = size_t(r) * cols + c;
                    double dx = c + 1 < cols ? z[off + i + 1] - z[off + i] : 0.0;
                    double dy = r + 1 < rows ? z[off + i + cols] - z[off + i] : 0.0;
                    double mag = std::sqrt(dx * dx + dy * dy);
                    if (mag > 1e-12) {
                        px[i] = dx / mag;
                        py[i] = dy / mag;
                    }
                }
            // g = -div p (adjoint of the forward-difference gradient)
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    size_t i = size_t(r) * cols + c;
                    double dx, dy;
                    if (c == 0) dx = px[i];
                    else if (c < cols - 1) dx = px[i] - px[i - 1];
                    else dx = -px[i - 1];
                    if (r == 0) dy = py[i];
                    else if (r < rows - 1) dy = py[i] - py[i - cols];
                    else dy = -py[i - cols];
                    g[off + i] = -(dx + dy);
                }
        }
        return g;
    };

    Vec x = project_all(y);
    double best = feasible(x, 1e-7) ? objective(x) : 1e300;
    for (long t = 0; t < iterations; ++t) {
        Vec g = subgrad(x);
        double gn = 0.0;
        for (double v : g) gn += v * v;
        gn = std::sqrt(gn);
        if (gn < 1e-14) break;
        double alpha = step0 / std::sqrt(double(t + 1)) / gn;
        for (size_t i = 0; i < total; ++i) x[i] -= alpha * g[i];
        if (!feasible(x, 0.0)) x = project_all(x);
        double o = objective(x);
        if (o < best && feasible(x, 1e-7)) best = o;
    }
    if (best >= 1e300)
        throw std::runtime_error("subgradient_joint_oracle: no feasible point found");
    return best;
}

// --- misc ---------------------------------------------------------------------

inline mvjoint::Image random_image(int rows, int cols, std::mt19937& eng,
                                   double lo = 0.0, double hi = 255.0) {
    mvjoint::Image im(rows, cols);
    for (double& v : im.v) v = lo + (hi - lo) * (double(eng()) / 4294967296.0);
    return im;
}

inline Vec random_vec(size_t n, std::mt19937& eng, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (double& x : v) x = lo + (hi - lo) * (double(eng()) / 4294967296.0);
    return v;
}

}  // namespace oracle
