#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvjoint/camera.hpp"
#include "mvjoint/core.hpp"
#include "mvjoint/log.hpp"
#include "mvjoint/maxflow.hpp"

namespace mvjoint {

/// Dense depth estimation instance. views[0] is the reference view.
/// Exactly one of the two geometry modes must be set: calibrated (cameras,
/// one per view, with a depth range sampled into label_count labels) or
/// rectified (integer disparities disparity_min..disparity_max used directly
/// as labels; baseline_scale gives the per-view disparity multiplier for
/// J > 2, defaulting to 1, 2, ... for a uniformly spaced camera line).
struct DepthProblem {
    std::vector<Image> views;
    std::vector<CameraParams> cameras;
    bool rectified = false;
    int disparity_min = 0;
    int disparity_max = 0;
    std::vector<double> baseline_scale;
    int label_count = 64;
    double depth_min = 1.0;
    double depth_max = 100.0;
    double lambda = 0.0;
    double tau = 1.0;
    int max_sweeps = 4;

    int view_count() const { return static_cast<int>(views.size()); }

    int labels() const {
        return rectified ? disparity_max - disparity_min + 1 : label_count;
    }

    double view_scale(int j) const {  // rectified mode, j >= 1
        if (!baseline_scale.empty()) return baseline_scale[j - 1];
        return double(j);
    }

    void validate() const {
        if (view_count() < 2)
            throw std::invalid_argument("DepthProblem: need at least 2 views");
        for (const auto& v : views)
            if (!v.same_dims(views[0]))
                throw std::invalid_argument("DepthProblem: view dimensions differ");
        bool calibrated = !cameras.empty();
        if (calibrated == rectified)
            throw std::invalid_argument(
                "DepthProblem: exactly one of cameras / rectified range required");
        if (calibrated && cameras.size() != views.size())
            throw std::invalid_argument("DepthProblem: camera count mismatch");
        if (rectified && disparity_max < disparity_min)
            throw std::invalid_argument("DepthProblem: empty disparity range");
        if (rectified && !baseline_scale.empty() &&
            baseline_scale.size() != views.size() - 1)
            throw std::invalid_argument("DepthProblem: baseline_scale size mismatch");
        if (!(lambda >= 0)) throw std::invalid_argument("DepthProblem: lambda < 0");
        if (!(tau > 0)) throw std::invalid_argument("DepthProblem: tau <= 0");
    }

    std::vector<double> make_label_table() const {
        if (rectified) {
            std::vector<double> t(labels());
            for (int l = 0; l < labels(); ++l) t[l] = double(disparity_min + l);
            return t;
        }
        return make_depth_label_table(label_count, depth_min, depth_max);
    }
};

/// Per-pixel per-label data costs, label index fastest.
struct CostVolume {
    int rows = 0, cols = 0, labels = 0;
    std::vector<double> c;

    CostVolume() = default;
    CostVolume(int rows_, int cols_, int labels_)
        : rows(rows_), cols(cols_), labels(labels_),
          c(size_t(rows_) * cols_ * labels_, 0.0) {}

    double& at(int r, int col, int l) {
        return c[(size_t(r) * cols + col) * labels + l];
    }
    double at(int r, int col, int l) const {
        return c[(size_t(r) * cols + col) * labels + l];
    }
};

/// Truncated linear smoothness on label indices: min(|a - b|, tau).
inline double smoothness_cost(int label_a, int label_b, double tau) {
    return std::min(double(std::abs(label_a - label_b)), tau);
}

/// Photo-consistency volume: for each reference pixel and label, the sum
/// over the other views of the squared intensity difference at the label's
/// projection. The comparison evaluates the target view at the projected
/// location of the reference pixel (inverse-lookup form of forward warping,
/// identical cost). Projections that leave the frame, and degenerate ones,
/// contribute a per-pixel occlusion penalty
///   K_occ = tau*lambda + median of that pixel's finite per-view costs.
inline CostVolume build_cost_volume(const DepthProblem& prob) {
    prob.validate();
    const Image& ref = prob.views[0];
    const int L = prob.labels();
    const int J = prob.view_count();
    std::vector<double> table = prob.make_label_table();

    CostVolume vol(ref.rows, ref.cols, L);
    std::vector<double> per_view(size_t(L) * (J - 1));  // < 0 marks a miss
    std::vector<double> finite;
    for (int r = 0; r < ref.rows; ++r)
        for (int c = 0; c < ref.cols; ++c) {
            finite.clear();
            for (int l = 0; l < L; ++l)
                for (int j = 1; j < J; ++j) {
                    int pr, pc;
                    bool ok = true;
                    if (prob.rectified) {
                        pr = r;
                        pc = c - int(std::lround(table[l] * prob.view_scale(j)));
                    } else {
                        PixelProjection p = project_pixel(r, c, table[l],
                                                          prob.cameras[0],
                                                          prob.cameras[j]);
                        ok = !p.degenerate;
                        pr = p.row;
                        pc = p.col;
                    }
                    double& slot = per_view[size_t(l) * (J - 1) + (j - 1)];
                    if (ok && ref.in_frame(pr, pc)) {
                        double d = prob.views[j].at(pr, pc) - ref.at(r, c);
                        slot = d * d;
                        finite.push_back(slot);
                    } else {
                        slot = -1.0;
                    }
                }
            double median = 0.0;
            if (!finite.empty()) {
                size_t mid = finite.size() / 2;
                std::nth_element(finite.begin(), finite.begin() + mid, finite.end());
                median = finite[mid];
            }
            const double k_occ = prob.tau * prob.lambda + median;
            for (int l = 0; l < L; ++l) {
                double total = 0.0;
                for (int j = 1; j < J; ++j) {
                    double pv = per_view[size_t(l) * (J - 1) + (j - 1)];
                    total += pv >= 0.0 ? pv : k_occ;
                }
                vol.at(r, c, l) = total;
            }
        }
    return vol;
}

struct ExpansionTrace {
    std::vector<double> energy;  // after every accepted or rejected move
    int sweeps = 0;
    int moves_accepted = 0;
};

inline double labeling_energy(const CostVolume& vol, const std::vector<int>& labels,
                              double lambda, double tau) {
    double e = 0.0;
    for (int r = 0; r < vol.rows; ++r)
        for (int c = 0; c < vol.cols; ++c) {
            int p = r * vol.cols + c;
            e += vol.at(r, c, labels[p]);
            if (c + 1 < vol.cols)
                e += lambda * smoothness_cost(labels[p], labels[p + 1], tau);
            if (r + 1 < vol.rows)
                e += lambda * smoothness_cost(labels[p], labels[p + vol.cols], tau);
        }
    return e;
}

namespace detail {

// One alpha-expansion move, solved exactly as a min cut. Binary variable
// x_p = 1 means "switch to alpha" and maps to the sink side of the cut; the
// pairwise truncated-linear terms are submodular, so the standard
// decomposition applies. Ties resolve to "keep" via the maximal source set.
inline bool expansion_move(const CostVolume& vol, double lambda, double tau,
                           int alpha, std::vector<int>& labels, double& energy) {
    const int rows = vol.rows, cols = vol.cols;
    const int n = rows * cols;
    MaxFlow g(n);

    auto vcost = [&](int a, int b) { return lambda * smoothness_cost(a, b, tau); };

    std::vector<double> theta(n, 0.0);  // coefficient of x_p
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int p = r * cols + c;
            theta[p] += vol.at(r, c, alpha) - vol.at(r, c, labels[p]);
        }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int p = r * cols + c;
            const int neigh[2] = {c + 1 < cols ? p + 1 : -1,
                                  r + 1 < rows ? p + cols : -1};
            for (int q : neigh) {
                if (q < 0) continue;
                double A = vcost(labels[p], labels[q]);
                double B = vcost(labels[p], alpha);
                double C = vcost(alpha, labels[q]);
                // D = vcost(alpha, alpha) = 0
                theta[p] += C - A;
                theta[q] += 0.0 - C;
                double w = B + C - A;  // >= 0 by the metric property
                if (w > 0) g.add_edge(p, q, w, 0.0);
            }
        }
    for (int p = 0; p < n; ++p) {
        if (theta[p] > 0)
            g.add_terminal(p, theta[p], 0.0);  // pay when switching
        else if (theta[p] < 0)
            g.add_terminal(p, 0.0, -theta[p]);  // pay when keeping
    }
    g.solve();

    std::vector<int> candidate = labels;
    for (int p = 0; p < n; ++p)
        if (g.reaches_sink(p)) candidate[p] = alpha;
    double cand_energy = labeling_energy(vol, candidate, lambda, tau);
    if (cand_energy < energy) {
        labels.swap(candidate);
        energy = cand_energy;
        return true;
    }
    return false;
}

}  // namespace detail

/// Alpha-expansion over all labels, sweeping ascending until a full sweep
/// yields no improvement or max_sweeps is hit. Moves are accepted only on a
/// strict energy decrease, so the energy trace is non-increasing and ties
/// keep the lowest label.
inline std::vector<int> alpha_expansion(const CostVolume& vol, double lambda,
                                        double tau, int max_sweeps = 4,
                                        ExpansionTrace* trace = nullptr) {
    std::vector<int> labels(size_t(vol.rows) * vol.cols, 0);
    if (vol.labels < 2) {
        log_info("alpha_expansion: fewer than 2 labels, returning trivial labeling");
        return labels;
    }
    double energy = labeling_energy(vol, labels, lambda, tau);
    if (trace) trace->energy.push_back(energy);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool improved = false;
        for (int alpha = 0; alpha < vol.labels; ++alpha) {
            if (detail::expansion_move(vol, lambda, tau, alpha, labels, energy)) {
                improved = true;
                if (trace) ++trace->moves_accepted;
            }
            if (trace) trace->energy.push_back(energy);
        }
        if (trace) trace->sweeps = sweep + 1;
        if (!improved) break;
    }
    return labels;
}

inline DepthField estimate_depth(const DepthProblem& prob,
                                 ExpansionTrace* trace = nullptr) {
    prob.validate();
    CostVolume vol = build_cost_volume(prob);
    DepthField out;
    out.rows = vol.rows;
    out.cols = vol.cols;
    out.label_table = prob.make_label_table();
    out.rectified = prob.rectified;
    out.lambda = prob.lambda;
    out.tau = prob.tau;
    out.labels = alpha_expansion(vol, prob.lambda, prob.tau, prob.max_sweeps, trace);
    return out;
}

}  // namespace mvjoint
