#pragma once

#include <chrono>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include "mvjoint/codec.hpp"
#include "mvjoint/core.hpp"
#include "mvjoint/depth.hpp"
#include "mvjoint/linops.hpp"
#include "mvjoint/log.hpp"
#include "mvjoint/prox.hpp"
#include "mvjoint/warp.hpp"

namespace mvjoint {

/// Assembled joint reconstruction instance. decoded[0] is the reference
/// view; ops[k]/masks[k] warp the reference into view k+1. Radii follow the
/// per-pixel convention: the fidelity ball for each view has radius
/// epsilon1 * sqrt(N) and the correlation set is
/// ||H X||^2 <= epsilon2 * (J-1) * N.
struct JointProblem {
    std::vector<Image> decoded;
    std::vector<WarpOperator> ops;
    std::vector<OcclusionMask> masks;
    double epsilon1 = 2.0;
    double epsilon2 = 1.0;

    int view_count() const { return static_cast<int>(decoded.size()); }
    int pixels() const { return decoded.empty() ? 0 : int(decoded[0].size()); }

    void validate() const {
        if (view_count() < 2)
            throw std::invalid_argument("JointProblem: need at least 2 views");
        for (const auto& v : decoded)
            if (!v.same_dims(decoded[0]))
                throw std::invalid_argument("JointProblem: view dimensions differ");
        if (ops.size() != decoded.size() - 1 || masks.size() != ops.size())
            throw std::invalid_argument("JointProblem: operator/mask count mismatch");
        for (size_t k = 0; k < ops.size(); ++k) {
            if (ops[k].n != pixels() || masks[k].diag.size() != size_t(pixels()))
                throw std::invalid_argument("JointProblem: operator size mismatch");
        }
        if (!(epsilon1 > 0.0) || !(epsilon2 > 0.0))
            throw std::invalid_argument("JointProblem: radii must be positive");
    }
};

/// The stacked correlation operator H (B for J = 2): block row k maps the
/// stacked vector to M_k (x_{k+1} - A_k x_0). Applied implicitly; never
/// materialized densely.
struct CorrelationOperator {
    std::vector<WarpOperator> ops;
    std::vector<OcclusionMask> masks;
    int n = 0;

    CorrelationOperator() = default;
    CorrelationOperator(std::vector<WarpOperator> ops_, std::vector<OcclusionMask> masks_)
        : ops(std::move(ops_)), masks(std::move(masks_)) {
        if (ops.empty() || ops.size() != masks.size())
            throw std::invalid_argument("CorrelationOperator: bad operator/mask lists");
        n = ops[0].n;
    }
    explicit CorrelationOperator(const JointProblem& p)
        : CorrelationOperator(p.ops, p.masks) {}

    int blocks() const { return static_cast<int>(ops.size()); }
    int domain_size() const { return (blocks() + 1) * n; }
    int range_size() const { return blocks() * n; }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (x.size() != size_t(domain_size()))
            throw std::invalid_argument("CorrelationOperator::apply: dimension mismatch");
        std::vector<double> y(range_size(), 0.0);
        for (int k = 0; k < blocks(); ++k) {
            const size_t xoff = size_t(k + 1) * n, yoff = size_t(k) * n;
            for (int r = 0; r < n; ++r) {
                int c = ops[k].col_of_row[r];
                double warped = c >= 0 ? x[c] : 0.0;
                y[yoff + r] = masks[k].diag[r] * (x[xoff + r] - warped);
            }
        }
        return y;
    }

    std::vector<double> apply_transpose(const std::vector<double>& y) const {
        if (y.size() != size_t(range_size()))
            throw std::invalid_argument(
                "CorrelationOperator::apply_transpose: dimension mismatch");
        std::vector<double> x(domain_size(), 0.0);
        for (int k = 0; k < blocks(); ++k) {
            const size_t xoff = size_t(k + 1) * n, yoff = size_t(k) * n;
            for (int r = 0; r < n; ++r) {
                double my = masks[k].diag[r] * y[yoff + r];
                x[xoff + r] = my;
                int c = ops[k].col_of_row[r];
                if (c >= 0) x[c] -= my;
            }
        }
        return x;
    }
};

struct SolverConfig {
    int outer_iterations = 100;
    double gamma = 2.0;             // prox scale, gray-level units
    std::vector<double> weights;    // 2J+1 simplex weights; empty = equal
    double relaxation = 1.0;        // in (0, 2)
    int log_every = 1;
    double epsilon1 = 2.0;          // per-pixel RMS fidelity radius
    double epsilon2 = 1.0;          // per-pixel RMS^2 correlation radius
    // When > 0, the pipeline overrides epsilon1 with
    // scale * (largest per-view RMS codec distortion - 1 gray level, floored
    // at 0); the encoder knows the distortion it introduced and can ship it
    // as side information. The 1-gray offset keeps near-transparent inputs
    // pinned to their decoded values.
    double epsilon1_auto_scale = 0.0;
    TvConfig tv;                    // inner Chambolle settings
    int affine_iterations = 50;     // inner iterations of the correlation prox
    double stop_rms = 1e-4;         // early exit on iterate change
    int workers = 1;

    void validate(int func_count) const {
        if (outer_iterations < 1)
            throw std::invalid_argument("SolverConfig: outer_iterations < 1");
        if (!(gamma > 0.0)) throw std::invalid_argument("SolverConfig: gamma <= 0");
        if (!(relaxation > 0.0) || relaxation >= 2.0)
            throw std::invalid_argument("SolverConfig: relaxation must be in (0, 2)");
        if (!weights.empty()) {
            if (int(weights.size()) != func_count)
                throw std::invalid_argument("SolverConfig: weight count mismatch");
            double sum = 0.0;
            for (double w : weights) {
                if (!(w > 0.0)) throw std::invalid_argument("SolverConfig: weights must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("SolverConfig: weights must sum to 1");
        }
        tv.validate();
    }
};

struct SolveReport {
    std::vector<int> logged_iterations;
    std::vector<double> objective;                 // sum of per-view TV
    std::vector<std::vector<double>> fid_residual; // [view][log index]
    std::vector<double> corr_residual;             // ||Hx||^2 per log index
    std::vector<bool> fid_feasible;                // within 1.05 slack at exit
    bool corr_feasible = false;
    int iterations_run = 0;
    std::string stop_reason;
    double wall_seconds = 0.0;

    /// CSV: iteration,objective,residual_fid_1..J,residual_corr
    void save_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write: " + path);
        out << "iteration,objective";
        for (size_t j = 0; j < fid_residual.size(); ++j)
            out << ",residual_fid_" << (j + 1);
        out << ",residual_corr\n";
        out.precision(12);
        for (size_t k = 0; k < logged_iterations.size(); ++k) {
            out << logged_iterations[k] << "," << objective[k];
            for (const auto& fr : fid_residual) out << "," << fr[k];
            out << "," << corr_residual[k] << "\n";
        }
        if (!out) throw std::runtime_error("write failed: " + path);
    }
};

inline JointProblem assemble(const std::vector<Image>& decoded, const DepthField& depth,
                             const std::vector<CameraParams>& cameras, double eps1,
                             double eps2) {
    if (decoded.size() < 2) throw std::invalid_argument("assemble: need at least 2 views");
    if (cameras.size() != decoded.size())
        throw std::invalid_argument("assemble: camera count mismatch");
    if (depth.rows != decoded[0].rows || depth.cols != decoded[0].cols)
        throw std::invalid_argument("assemble: depth/view dimension mismatch");
    JointProblem p;
    p.decoded = decoded;
    p.epsilon1 = eps1;
    p.epsilon2 = eps2;
    for (size_t j = 1; j < decoded.size(); ++j) {
        auto [op, mask] = build_operator(motion_from_depth(depth, cameras[0], cameras[j]));
        p.ops.push_back(std::move(op));
        p.masks.push_back(std::move(mask));
    }
    p.validate();
    return p;
}

inline JointProblem assemble_rectified(const std::vector<Image>& decoded,
                                       const DepthField& depth,
                                       const std::vector<double>& baseline_scale,
                                       double eps1, double eps2) {
    if (decoded.size() < 2) throw std::invalid_argument("assemble: need at least 2 views");
    if (depth.rows != decoded[0].rows || depth.cols != decoded[0].cols)
        throw std::invalid_argument("assemble: depth/view dimension mismatch");
    if (!baseline_scale.empty() && baseline_scale.size() != decoded.size() - 1)
        throw std::invalid_argument("assemble: baseline_scale size mismatch");
    JointProblem p;
    p.decoded = decoded;
    p.epsilon1 = eps1;
    p.epsilon2 = eps2;
    for (size_t j = 1; j < decoded.size(); ++j) {
        double scale = baseline_scale.empty() ? double(j) : baseline_scale[j - 1];
        auto [op, mask] = build_operator(motion_from_depth(depth, scale));
        p.ops.push_back(std::move(op));
        p.masks.push_back(std::move(mask));
    }
    p.validate();
    return p;
}

/// Mask ablation helper: replaces every mask with the identity so the
/// correlation constraint also covers hole rows.
inline JointProblem with_identity_masks(JointProblem p) {
    for (auto& m : p.masks) m.diag.assign(m.diag.size(), 1.0);
    return p;
}

namespace detail {

inline void check_finite_prox(const std::vector<double>& v, const std::string& name) {
    if (!vec_finite(v))
        throw std::runtime_error("solver: non-finite iterate produced by " + name);
}

}  // namespace detail

/// PPXA over the 2J+1 functions of the joint problem: J per-view TV terms,
/// J per-view fidelity balls, and the stacked correlation set. Each
/// iteration evaluates every prox at its auxiliary point (scaled by
/// gamma/omega_i for the TV terms; projections ignore the scale), averages
/// with the weights, and relaxes. The iterate starts at the stacked decoded
/// views and is clamped to [0, 255] only when split into output images.
inline std::pair<std::vector<Image>, SolveReport> solve(const JointProblem& problem,
                                                        const SolverConfig& config) {
    problem.validate();
    const int J = problem.view_count();
    const int func_count = 2 * J + 1;
    config.validate(func_count);

    const int rows = problem.decoded[0].rows, cols = problem.decoded[0].cols;
    const size_t n = size_t(rows) * cols;
    const size_t total = n * J;

    std::vector<double> weights = config.weights;
    if (weights.empty()) weights.assign(func_count, 1.0 / func_count);

    std::vector<double> y_ref(total);  // stacked decoded views (the Y of the balls)
    for (int j = 0; j < J; ++j)
        std::copy(problem.decoded[j].v.begin(), problem.decoded[j].v.end(),
                  y_ref.begin() + size_t(j) * n);

    const double fid_radius = problem.epsilon1 * std::sqrt(double(n));
    const double corr_radius_sq = problem.epsilon2 * double(J - 1) * double(n);

    CorrelationOperator corr(problem);
    FrameBounds bounds = estimate_frame_bounds(corr);
    log_debug("solver: gamma2 estimate %.6f", bounds.gamma2);

    std::vector<std::vector<double>> aux(func_count, y_ref);
    std::vector<double> x = y_ref;
    std::vector<double> u_warm;  // correlation prox dual, kept across iterations

    auto eval_prox = [&](int i, const std::vector<double>& y) -> std::vector<double> {
        if (i < J) {
            double w = config.gamma / weights[i];
            std::vector<double> out = y;
            std::vector<double> block(y.begin() + size_t(i) * n,
                                      y.begin() + size_t(i + 1) * n);
            std::vector<double> pb = prox_tv(block, rows, cols, w, config.tv);
            std::copy(pb.begin(), pb.end(), out.begin() + size_t(i) * n);
            return out;
        }
        if (i < 2 * J)
            return prox_selector_ball(y, J, i - J, y_ref, fid_radius);
        return prox_affine_ball(y, corr, corr_radius_sq, bounds,
                                config.affine_iterations, &u_warm);
    };
    auto prox_name = [&](int i) -> std::string {
        if (i < J) return "prox_tv[view " + std::to_string(i) + "]";
        if (i < 2 * J) return "prox_fidelity[view " + std::to_string(i - J) + "]";
        return "prox_correlation";
    };

    SolveReport report;
    report.fid_residual.assign(J, {});
    const auto t0 = std::chrono::steady_clock::now();
    const double relax = config.relaxation;
    report.stop_reason = "max iterations";

    std::vector<std::vector<double>> prox_out(func_count);
    for (int it = 0; it < config.outer_iterations; ++it) {
        if (config.workers > 1) {
            std::vector<std::future<std::vector<double>>> futs;
            futs.reserve(func_count);
            for (int i = 0; i < func_count; ++i)
                futs.push_back(std::async(std::launch::async,
                                          [&, i] { return eval_prox(i, aux[i]); }));
            for (int i = 0; i < func_count; ++i) prox_out[i] = futs[i].get();
        } else {
            for (int i = 0; i < func_count; ++i) prox_out[i] = eval_prox(i, aux[i]);
        }
        for (int i = 0; i < func_count; ++i)
            detail::check_finite_prox(prox_out[i], prox_name(i));

        std::vector<double> avg(total, 0.0);
        for (int i = 0; i < func_count; ++i) {
            const double w = weights[i];
            const auto& p = prox_out[i];
            for (size_t k = 0; k < total; ++k) avg[k] += w * p[k];
        }
        for (int i = 0; i < func_count; ++i) {
            auto& y = aux[i];
            const auto& p = prox_out[i];
            for (size_t k = 0; k < total; ++k)
                y[k] += relax * (2.0 * avg[k] - x[k] - p[k]);
        }
        double change_sq = 0.0;
        for (size_t k = 0; k < total; ++k) {
            double step = relax * (avg[k] - x[k]);
            change_sq += step * step;
            x[k] += step;
        }
        report.iterations_run = it + 1;

        if ((it + 1) % std::max(1, config.log_every) == 0 ||
            it + 1 == config.outer_iterations) {
            double obj = 0.0;
            for (int j = 0; j < J; ++j)
                obj += tv_norm(std::vector<double>(x.begin() + size_t(j) * n,
                                                   x.begin() + size_t(j + 1) * n),
                               rows, cols);
            report.logged_iterations.push_back(it + 1);
            report.objective.push_back(obj);
            for (int j = 0; j < J; ++j) {
                double s = 0.0;
                for (size_t k = 0; k < n; ++k) {
                    double d = x[size_t(j) * n + k] - y_ref[size_t(j) * n + k];
                    s += d * d;
                }
                report.fid_residual[j].push_back(std::sqrt(s));
            }
            std::vector<double> hx = corr.apply(x);
            report.corr_residual.push_back(vec_dot(hx, hx));
            log_debug("solver: it %d objective %.3f", it + 1, obj);
        }
        if (std::sqrt(change_sq / double(total)) < config.stop_rms) {
            report.stop_reason = "iterate change below threshold";
            break;
        }
    }

    report.fid_feasible.assign(J, false);
    for (int j = 0; j < J; ++j) {
        double s = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double d = x[size_t(j) * n + k] - y_ref[size_t(j) * n + k];
            s += d * d;
        }
        report.fid_feasible[j] = std::sqrt(s) <= 1.05 * fid_radius;
    }
    {
        std::vector<double> hx = corr.apply(x);
        report.corr_feasible = vec_dot(hx, hx) <= 1.05 * corr_radius_sq;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<Image> out;
    out.reserve(J);
    for (int j = 0; j < J; ++j) {
        Image im(rows, cols);
        for (size_t k = 0; k < n; ++k) im.v[k] = clamp_gray(x[size_t(j) * n + k]);
        out.push_back(std::move(im));
    }
    return {out, report};
}

struct PipelineOptions {
    const DepthField* depth_override = nullptr;  // e.g. ground truth
    bool identity_mask = false;                  // mask ablation
};

struct PipelineResult {
    std::vector<double> independent_psnr;  // decoded vs original, per view
    std::vector<double> joint_psnr;        // reconstructed vs original, per view
    double mean_independent = 0.0;
    double mean_joint = 0.0;
    double total_bits = 0.0;
    std::vector<Image> decoded;
    std::vector<Image> reconstructed;
    DepthField depth;
    SolveReport report;
};

/// Full two-step path: compress every view independently at the same
/// quality, estimate depth from the decoded views, assemble the joint
/// problem and run PPXA. PSNRs are measured against the originals.
inline PipelineResult reconstruct_pipeline(const std::vector<Image>& raw_views,
                                           const CodecConfig& codec_cfg,
                                           const DepthProblem& depth_params,
                                           const SolverConfig& solver_cfg,
                                           const PipelineOptions& options = {}) {
    if (raw_views.size() < 2)
        throw std::invalid_argument("reconstruct_pipeline: need at least 2 views");
    PipelineResult res;
    double distortion_rms = 0.0;
    for (const Image& v : raw_views) {
        CompressedImage comp = encode(v, codec_cfg);
        res.total_bits += comp.estimated_bits;
        res.decoded.push_back(decode(comp));
        distortion_rms = std::max(distortion_rms, vec_rms(res.decoded.back().v, v.v));
    }
    DepthProblem dp = depth_params;
    dp.views = res.decoded;
    res.depth = options.depth_override ? *options.depth_override : estimate_depth(dp);

    double eps1 = solver_cfg.epsilon1;
    if (solver_cfg.epsilon1_auto_scale > 0.0)
        eps1 = std::max(1e-6,
                        solver_cfg.epsilon1_auto_scale * (distortion_rms - 1.0));
    JointProblem jp =
        dp.rectified
            ? assemble_rectified(res.decoded, res.depth, dp.baseline_scale, eps1,
                                 solver_cfg.epsilon2)
            : assemble(res.decoded, res.depth, dp.cameras, eps1, solver_cfg.epsilon2);
    if (options.identity_mask) jp = with_identity_masks(std::move(jp));

    auto [recon, report] = solve(jp, solver_cfg);
    res.reconstructed = std::move(recon);
    res.report = std::move(report);

    for (size_t j = 0; j < raw_views.size(); ++j) {
        res.independent_psnr.push_back(psnr(res.decoded[j], raw_views[j]));
        res.joint_psnr.push_back(psnr(res.reconstructed[j], raw_views[j]));
        res.mean_independent += res.independent_psnr.back();
        res.mean_joint += res.joint_psnr.back();
    }
    res.mean_independent /= double(raw_views.size());
    res.mean_joint /= double(raw_views.size());
    return res;
}

}  // namespace mvjoint
