#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvjoint/codec.hpp"
#include "mvjoint/depth.hpp"
#include "mvjoint/log.hpp"
#include "mvjoint/solver.hpp"
#include "mvjoint/synth.hpp"

namespace mvjoint {

/// Raised for malformed or incomplete user configuration; the CLI maps it
/// to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One externally decoded rate point: images already decoded by an outside
/// codec plus the bits the user reports for them.
struct ExternalRate {
    double bits = 0.0;
    std::vector<std::string> views;
};

/// Flat JSON config with codec/depth/solver/eval sections. Every parameter
/// has a default, so a minimal config is just the view paths (or a scene).
struct FullConfig {
    std::vector<std::string> view_paths;
    std::optional<SceneSpec> scene;
    std::vector<std::string> camera_paths;
    std::optional<std::string> gt_disparity_path;
    std::vector<int> qp;
    std::vector<ExternalRate> external_rates;
    DepthProblem depth;       // geometry/params template, views filled later
    SolverConfig solver;
    std::string out_dir = "mvjoint_out";
    uint32_t seed = 1;
    int workers = 1;

    bool calibrated() const { return !camera_paths.empty(); }
};

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: bad value for field \"") + key +
                          "\": " + e.what());
    }
}

inline void warn_unknown(const nlohmann::json& j,
                         std::initializer_list<const char*> known,
                         const char* section) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) log_info("config: ignoring unknown field \"%s\" in %s", it.key().c_str(),
                          section);
    }
}

}  // namespace detail

inline SceneSpec scene_from_json(const nlohmann::json& j) {
    detail::warn_unknown(j, {"kind", "rows", "cols", "views", "shift", "fg_shift",
                             "bg_shift", "seed"}, "scene");
    SceneSpec spec;
    if (!j.contains("kind")) throw ConfigError("config: missing required field \"scene.kind\"");
    spec.kind = scene_kind_from_string(j.at("kind").get<std::string>());
    spec.rows = detail::get_field(j, "rows", spec.rows);
    spec.cols = detail::get_field(j, "cols", spec.cols);
    spec.views = detail::get_field(j, "views", spec.views);
    spec.shift = detail::get_field(j, "shift", spec.shift);
    spec.fg_shift = detail::get_field(j, "fg_shift", spec.fg_shift);
    spec.bg_shift = detail::get_field(j, "bg_shift", spec.bg_shift);
    spec.seed = detail::get_field(j, "seed", spec.seed);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return spec;
}

inline FullConfig parse_full_config(const nlohmann::json& j) {
    detail::warn_unknown(j, {"views", "scene", "cameras", "gt_disparity", "qp",
                             "external_rates", "codec", "depth", "solver", "eval",
                             "out", "seed", "workers"}, "config");
    FullConfig cfg;
    if (j.contains("views"))
        cfg.view_paths = detail::get_field(j, "views", cfg.view_paths);
    if (j.contains("scene")) cfg.scene = scene_from_json(j.at("scene"));
    if (cfg.view_paths.empty() && !cfg.scene)
        throw ConfigError("config: missing required field \"views\" (or \"scene\")");
    if (!cfg.view_paths.empty() && cfg.scene)
        throw ConfigError("config: give either \"views\" or \"scene\", not both");

    cfg.camera_paths = detail::get_field(j, "cameras", cfg.camera_paths);
    if (j.contains("gt_disparity"))
        cfg.gt_disparity_path = j.at("gt_disparity").get<std::string>();
    cfg.qp = detail::get_field(j, "qp", std::vector<int>{40, 32, 24, 16, 8, 2});
    for (int q : cfg.qp)
        if (q < 1 || q > 50)
            throw ConfigError("config: field \"qp\" values must be in [1, 50]");

    if (j.contains("external_rates")) {
        for (const auto& e : j.at("external_rates")) {
            ExternalRate er;
            er.bits = detail::get_field(e, "bits", 0.0);
            er.views = detail::get_field(e, "views", er.views);
            if (er.views.empty() || !(er.bits > 0.0))
                throw ConfigError(
                    "config: each \"external_rates\" entry needs \"views\" and positive \"bits\"");
            cfg.external_rates.push_back(std::move(er));
        }
    }

    if (j.contains("depth")) {
        const auto& d = j.at("depth");
        detail::warn_unknown(d, {"lambda", "tau", "labels", "disparity_min",
                                 "disparity_max", "depth_min", "depth_max",
                                 "max_sweeps", "baseline_scale"}, "depth");
        cfg.depth.lambda = detail::get_field(d, "lambda", cfg.depth.lambda);
        cfg.depth.tau = detail::get_field(d, "tau", cfg.depth.tau);
        cfg.depth.label_count = detail::get_field(d, "labels", cfg.depth.label_count);
        cfg.depth.disparity_min = detail::get_field(d, "disparity_min", 0);
        cfg.depth.disparity_max = detail::get_field(d, "disparity_max", -1);
        cfg.depth.depth_min = detail::get_field(d, "depth_min", cfg.depth.depth_min);
        cfg.depth.depth_max = detail::get_field(d, "depth_max", cfg.depth.depth_max);
        cfg.depth.max_sweeps = detail::get_field(d, "max_sweeps", cfg.depth.max_sweeps);
        cfg.depth.baseline_scale =
            detail::get_field(d, "baseline_scale", cfg.depth.baseline_scale);
    } else {
        cfg.depth.disparity_max = -1;
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::warn_unknown(s, {"epsilon1", "epsilon1_auto_scale", "epsilon2",
                                 "iterations", "gamma", "relaxation", "tv_iterations",
                                 "affine_iterations", "log_every", "stop_rms"},
                             "solver");
        cfg.solver.epsilon1 = detail::get_field(s, "epsilon1", cfg.solver.epsilon1);
        cfg.solver.epsilon1_auto_scale =
            detail::get_field(s, "epsilon1_auto_scale", cfg.solver.epsilon1_auto_scale);
        cfg.solver.epsilon2 = detail::get_field(s, "epsilon2", cfg.solver.epsilon2);
        cfg.solver.outer_iterations =
            detail::get_field(s, "iterations", cfg.solver.outer_iterations);
        cfg.solver.gamma = detail::get_field(s, "gamma", cfg.solver.gamma);
        cfg.solver.relaxation = detail::get_field(s, "relaxation", cfg.solver.relaxation);
        cfg.solver.tv.inner_iterations =
            detail::get_field(s, "tv_iterations", cfg.solver.tv.inner_iterations);
        cfg.solver.affine_iterations =
            detail::get_field(s, "affine_iterations", cfg.solver.affine_iterations);
        cfg.solver.log_every = detail::get_field(s, "log_every", cfg.solver.log_every);
        cfg.solver.stop_rms = detail::get_field(s, "stop_rms", cfg.solver.stop_rms);
    }
    if (j.contains("eval")) detail::warn_unknown(j.at("eval"), {}, "eval");

    cfg.out_dir = detail::get_field(j, "out", cfg.out_dir);
    cfg.seed = detail::get_field(j, "seed", cfg.seed);
    cfg.workers = detail::get_field(j, "workers", cfg.workers);
    cfg.solver.workers = cfg.workers;

    // geometry mode: cameras select calibrated, otherwise rectified
    cfg.depth.rectified = !cfg.calibrated();
    if (!cfg.depth.rectified && cfg.depth.disparity_max < cfg.depth.disparity_min)
        cfg.depth.disparity_max = cfg.depth.disparity_min;  // unused in calibrated mode
    return cfg;
}

inline FullConfig load_full_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    return parse_full_config(j);
}

/// Parameter echo placed at the head of the full-run report.
inline std::string config_summary(const FullConfig& cfg) {
    std::ostringstream out;
    out << "mode=" << (cfg.calibrated() ? "calibrated" : "rectified");
    if (cfg.scene) out << " scene=" << to_string(cfg.scene->kind);
    out << " lambda=" << cfg.depth.lambda << " tau=" << cfg.depth.tau;
    if (cfg.depth.rectified)
        out << " disparity=[" << cfg.depth.disparity_min << ","
            << cfg.depth.disparity_max << "]";
    else
        out << " labels=" << cfg.depth.label_count;
    out << " epsilon1=" << cfg.solver.epsilon1;
    if (cfg.solver.epsilon1_auto_scale > 0)
        out << " epsilon1_auto_scale=" << cfg.solver.epsilon1_auto_scale;
    out << " epsilon2=" << cfg.solver.epsilon2
        << " iterations=" << cfg.solver.outer_iterations
        << " gamma=" << cfg.solver.gamma << " seed=" << cfg.seed;
    return out.str();
}

}  // namespace mvjoint
