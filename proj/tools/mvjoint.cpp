// mvjoint: joint reconstruction of independently compressed multi-view
// images. Subcommands cover the full pipeline plus synthetic-scene
// generation for self-contained experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvjoint/codec.hpp"
#include "mvjoint/config.hpp"
#include "mvjoint/core.hpp"
#include "mvjoint/depth.hpp"
#include "mvjoint/eval.hpp"
#include "mvjoint/io.hpp"
#include "mvjoint/log.hpp"
#include "mvjoint/solver.hpp"
#include "mvjoint/synth.hpp"
#include "mvjoint/warp.hpp"

namespace fs = std::filesystem;
using namespace mvjoint;

namespace {

struct RectRange {
    int min = 0, max = -1;
    bool set() const { return max >= min; }
};

RectRange parse_rectified(const std::string& s) {
    auto sep = s.find(':');
    if (sep == std::string::npos)
        throw ConfigError("--rectified expects MIN:MAX, got '" + s + "'");
    RectRange r;
    try {
        r.min = std::stoi(s.substr(0, sep));
        r.max = std::stoi(s.substr(sep + 1));
    } catch (...) {
        throw ConfigError("--rectified expects integer MIN:MAX, got '" + s + "'");
    }
    if (r.max < r.min) throw ConfigError("--rectified range is empty: " + s);
    return r;
}

std::vector<Image> load_views(const std::vector<std::string>& paths) {
    if (paths.size() < 2) throw ConfigError("need at least 2 view images");
    std::vector<Image> views;
    for (const auto& p : paths) views.push_back(load_image(p));
    for (const auto& v : views)
        if (!v.same_dims(views[0])) throw ConfigError("view dimensions differ: " + paths[0]);
    return views;
}

DepthProblem make_depth_problem(const RectRange& rect,
                                const std::vector<std::string>& camera_paths,
                                double lambda, double tau, int labels,
                                double depth_min, double depth_max, int sweeps) {
    DepthProblem dp;
    dp.lambda = lambda;
    dp.tau = tau;
    dp.max_sweeps = sweeps;
    if (!camera_paths.empty()) {
        for (const auto& p : camera_paths)
            for (auto& cam : load_cameras(p)) dp.cameras.push_back(cam);
        dp.label_count = labels;
        dp.depth_min = depth_min;
        dp.depth_max = depth_max;
    } else {
        if (!rect.set())
            throw ConfigError("rectified mode needs --rectified MIN:MAX (or pass --cameras)");
        dp.rectified = true;
        dp.disparity_min = rect.min;
        dp.disparity_max = rect.max;
    }
    return dp;
}

double disparity_error_percent(const Image& gt, const DepthField& est) {
    if (gt.rows != est.rows || gt.cols != est.cols)
        throw std::invalid_argument("disparity_error_percent: dimension mismatch");
    int bad = 0;
    for (int r = 0; r < gt.rows; ++r)
        for (int c = 0; c < gt.cols; ++c)
            if (std::abs(gt.at(r, c) - est.value(r, c)) > 1.0) ++bad;
    return 100.0 * double(bad) / double(gt.size());
}

int cmd_synth(const SceneSpec& spec, const std::string& out_dir) {
    SyntheticScene scene = generate_scene(spec);
    fs::create_directories(out_dir);
    for (size_t j = 0; j < scene.views.size(); ++j)
        save_pgm(scene.views[j], out_dir + "/view_" + std::to_string(j) + ".pgm");
    save_pgm(scene.gt_disparity, out_dir + "/gt_disparity.pgm");
    for (size_t j = 0; j < scene.hole_masks.size(); ++j) {
        Image mask = scene.hole_masks[j];
        for (double& v : mask.v) v *= 255.0;  // visible in viewers
        save_pgm(mask, out_dir + "/gt_holes_" + std::to_string(j + 1) + ".pgm");
    }
    nlohmann::json meta;
    meta["kind"] = to_string(spec.kind);
    meta["rows"] = spec.rows;
    meta["cols"] = spec.cols;
    meta["views"] = spec.views;
    meta["max_disparity"] = spec.max_disparity();
    meta["seed"] = spec.seed;
    std::ofstream(out_dir + "/scene.json") << meta.dump(2) << "\n";
    std::cout << "wrote " << scene.views.size() << " views to " << out_dir << "\n";
    return 0;
}

int cmd_compress(const std::vector<std::string>& inputs, int qp,
                 const std::string& out_dir) {
    CodecConfig cfg;
    cfg.quality = qp;
    cfg.validate();
    fs::create_directories(out_dir);
    double total_bits = 0.0;
    for (const auto& path : inputs) {
        Image im = load_image(path);
        CompressedImage comp = encode(im, cfg);
        std::string stem = fs::path(path).stem().string() + "_qp" + std::to_string(qp);
        save_compressed(comp, out_dir + "/" + stem + ".mvjc");
        Image dec = decode(comp);
        save_pgm(dec, out_dir + "/" + stem + "_decoded.pgm");
        total_bits += comp.estimated_bits;
        std::cout << path << ": " << comp.estimated_bits << " bits, decode PSNR "
                  << psnr(dec, im) << " dB\n";
    }
    std::cout << "total: " << total_bits << " bits\n";
    return 0;
}

int cmd_depth(const std::vector<std::string>& view_paths, const DepthProblem& params,
              const std::string& out_dir, double disparity_scale) {
    DepthProblem dp = params;
    dp.views = load_views(view_paths);
    DepthField depth = estimate_depth(dp);
    fs::create_directories(out_dir);
    save_depth_field(depth, out_dir + "/depth.pgm");
    save_disparity_pgm(depth, disparity_scale, out_dir + "/disparity.pgm");
    std::cout << "depth labels " << depth.label_count() << ", wrote " << out_dir
              << "/depth.pgm\n";
    return 0;
}

int cmd_reconstruct(const std::vector<std::string>& decoded_paths,
                    const DepthProblem& params, const SolverConfig& solver_cfg,
                    const std::string& depth_path, const std::string& out_dir,
                    const std::vector<std::string>& original_paths, double user_bits) {
    std::vector<Image> decoded = load_views(decoded_paths);
    DepthProblem dp = params;
    dp.views = decoded;
    DepthField depth = depth_path.empty() ? estimate_depth(dp) : load_depth_field(depth_path);

    JointProblem jp = dp.rectified
                          ? assemble_rectified(decoded, depth, dp.baseline_scale,
                                               solver_cfg.epsilon1, solver_cfg.epsilon2)
                          : assemble(decoded, depth, dp.cameras, solver_cfg.epsilon1,
                                     solver_cfg.epsilon2);
    auto [recon, report] = solve(jp, solver_cfg);

    fs::create_directories(out_dir);
    for (size_t j = 0; j < recon.size(); ++j)
        save_pgm(recon[j], out_dir + "/recon_" + std::to_string(j) + ".pgm");
    report.save_csv(out_dir + "/report.csv");
    if (depth_path.empty()) save_depth_field(depth, out_dir + "/depth.pgm");

    nlohmann::json summary;
    summary["iterations"] = report.iterations_run;
    summary["stop_reason"] = report.stop_reason;
    summary["corr_feasible"] = report.corr_feasible;
    if (user_bits > 0) summary["bits"] = user_bits;
    if (!original_paths.empty()) {
        std::vector<Image> originals = load_views(original_paths);
        if (originals.size() != recon.size())
            throw ConfigError("--original count must match the view count");
        summary["independent_psnr"] = nlohmann::json::array();
        summary["joint_psnr"] = nlohmann::json::array();
        for (size_t j = 0; j < recon.size(); ++j) {
            summary["independent_psnr"].push_back(psnr(decoded[j], originals[j]));
            summary["joint_psnr"].push_back(psnr(recon[j], originals[j]));
        }
        summary["mean_independent_psnr"] = mean_psnr(decoded, originals);
        summary["mean_joint_psnr"] = mean_psnr(recon, originals);
        std::cout << "mean PSNR: independent " << mean_psnr(decoded, originals)
                  << " dB, joint " << mean_psnr(recon, originals) << " dB\n";
    }
    std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";
    std::cout << "wrote " << recon.size() << " reconstructions to " << out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& reference_paths,
                 const std::vector<std::string>& test_paths) {
    if (reference_paths.size() != test_paths.size() || reference_paths.empty())
        throw ConfigError("evaluate needs matching --reference and --test lists");
    double mean = 0.0;
    for (size_t i = 0; i < reference_paths.size(); ++i) {
        Image a = load_image(reference_paths[i]);
        Image b = load_image(test_paths[i]);
        double p = psnr(a, b);
        mean += p;
        std::cout << test_paths[i] << ": " << p << " dB\n";
    }
    std::cout << "mean: " << mean / double(reference_paths.size()) << " dB\n";
    return 0;
}

struct FullInputs {
    std::vector<Image> views;                  // originals
    std::optional<Image> gt_disparity;
    DepthProblem depth;
    SolverConfig solver;
    std::vector<int> qp;
    std::vector<ExternalRate> external_rates;
    std::string out_dir;
    int workers = 1;
};

FullInputs resolve_full_config(const FullConfig& cfg) {
    FullInputs in;
    in.depth = cfg.depth;
    in.solver = cfg.solver;
    in.qp = cfg.qp;
    in.external_rates = cfg.external_rates;
    in.out_dir = cfg.out_dir;
    in.workers = cfg.workers;
    if (cfg.scene) {
        SceneSpec spec = *cfg.scene;
        SyntheticScene scene = generate_scene(spec);
        in.views = std::move(scene.views);
        in.gt_disparity = std::move(scene.gt_disparity);
        if (in.depth.rectified && in.depth.disparity_max < in.depth.disparity_min) {
            in.depth.disparity_min = 0;
            in.depth.disparity_max = spec.max_disparity() + 1;
        }
    } else {
        std::vector<std::string> paths = cfg.view_paths;
        in.views = load_views(paths);
        if (cfg.gt_disparity_path) in.gt_disparity = load_image(*cfg.gt_disparity_path);
        if (in.depth.rectified && in.depth.disparity_max < in.depth.disparity_min)
            throw ConfigError(
                "config: rectified mode needs depth.disparity_min/disparity_max");
    }
    if (cfg.calibrated()) {
        for (const auto& p : cfg.camera_paths)
            for (auto& cam : load_cameras(p)) in.depth.cameras.push_back(cam);
        if (in.depth.cameras.size() != in.views.size())
            throw ConfigError("config: camera count must match view count");
    }
    return in;
}

int cmd_full(const FullConfig& cfg) {
    FullInputs in = resolve_full_config(cfg);
    fs::create_directories(in.out_dir);

    std::ofstream rep(in.out_dir + "/report.txt");
    if (!rep) throw std::runtime_error("cannot write report: " + in.out_dir);
    rep << "# mvjoint full run\n# " << config_summary(cfg) << "\n";
    rep << "# columns: rate_label bits mean_independent_db mean_joint_db"
        << " disparity_error_pct\n";

    RdCurve independent{"independent", {}}, joint{"joint", {}};
    auto run_point = [&](const std::string& label, const PipelineResult& run,
                         const DepthField& depth) {
        independent.points.push_back({run.total_bits, run.mean_independent});
        joint.points.push_back({run.total_bits, run.mean_joint});
        std::string dir = in.out_dir + "/" + label;
        fs::create_directories(dir);
        for (size_t j = 0; j < run.reconstructed.size(); ++j) {
            save_pgm(run.reconstructed[j], dir + "/recon_" + std::to_string(j) + ".pgm");
            save_pgm(run.decoded[j], dir + "/decoded_" + std::to_string(j) + ".pgm");
        }
        save_depth_field(depth, dir + "/depth.pgm");
        save_disparity_pgm(depth, 1.0, dir + "/disparity.pgm");
        run.report.save_csv(dir + "/solver.csv");
        rep << label << " " << run.total_bits << " " << run.mean_independent << " "
            << run.mean_joint << " ";
        if (in.gt_disparity && depth.rectified)
            rep << disparity_error_percent(*in.gt_disparity, depth);
        else
            rep << "n/a";
        rep << "\n";
    };

    if (!in.external_rates.empty()) {
        for (size_t k = 0; k < in.external_rates.size(); ++k) {
            const auto& er = in.external_rates[k];
            std::vector<Image> decoded = load_views(er.views);
            if (decoded.size() != in.views.size())
                throw ConfigError("config: external rate view count mismatch");
            DepthProblem dp = in.depth;
            dp.views = decoded;
            DepthField depth = estimate_depth(dp);
            JointProblem jp = dp.rectified
                                  ? assemble_rectified(decoded, depth, dp.baseline_scale,
                                                       in.solver.epsilon1,
                                                       in.solver.epsilon2)
                                  : assemble(decoded, depth, dp.cameras,
                                             in.solver.epsilon1, in.solver.epsilon2);
            auto [recon, report] = solve(jp, in.solver);
            PipelineResult run;
            run.total_bits = er.bits;
            run.decoded = decoded;
            run.reconstructed = recon;
            run.report = report;
            run.mean_independent = mean_psnr(decoded, in.views);
            run.mean_joint = mean_psnr(recon, in.views);
            run_point("rate_" + std::to_string(k), run, depth);
        }
    } else {
        if (in.qp.size() < 4)
            throw ConfigError("config: field \"qp\" needs at least 4 values for RD sweeps");
        RdSweepResult sweep = run_rd_sweep(in.views, in.qp, in.depth, in.solver);
        for (size_t k = 0; k < in.qp.size(); ++k)
            run_point("qp_" + std::to_string(in.qp[k]), sweep.runs[k],
                      sweep.runs[k].depth);
        independent = sweep.independent;
        joint = sweep.joint;
    }

    independent.sort_by_rate();
    joint.sort_by_rate();
    emit_plot({independent, joint}, in.out_dir + "/rd");
    if (independent.points.size() >= 4) {
        double bd = bjontegaard_rate(independent, joint);
        rep << "# bd_rate_joint_vs_independent_pct " << bd << "\n";
        std::cout << "BD-rate (joint vs independent): " << bd << " %\n";
    }
    std::cout << "report: " << in.out_dir << "/report.txt\n";
    return 0;
}

int cmd_rd(const std::vector<std::string>& view_paths, const std::vector<int>& qp,
           const DepthProblem& params, const SolverConfig& solver_cfg,
           const std::string& out_dir) {
    std::vector<Image> views = load_views(view_paths);
    RdSweepResult sweep = run_rd_sweep(views, qp, params, solver_cfg);
    fs::create_directories(out_dir);
    emit_plot({sweep.independent, sweep.joint}, out_dir + "/rd");
    double bd = bjontegaard_rate(sweep.independent, sweep.joint);
    std::cout << "BD-rate (joint vs independent): " << bd << " %\n";
    std::cout << "wrote " << out_dir << "/rd.csv and rd.svg\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint decoding of independently compressed multi-view images"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = "mvjoint_out";
    int workers = 1;
    uint32_t seed = 1;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--workers", workers, "max concurrent workers")->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-view scene");
    std::string kind = "translated-plane";
    SceneSpec spec;
    synth->add_option("--kind", kind, "translated-plane | two-plane-occlusion | textured-ramp")
        ->capture_default_str();
    synth->add_option("--rows", spec.rows)->capture_default_str();
    synth->add_option("--cols", spec.cols)->capture_default_str();
    synth->add_option("--views", spec.views)->capture_default_str();
    synth->add_option("--shift", spec.shift)->capture_default_str();
    synth->add_option("--fg-shift", spec.fg_shift)->capture_default_str();
    synth->add_option("--bg-shift", spec.bg_shift)->capture_default_str();

    // compress
    auto* compress = app.add_subcommand("compress", "encode/decode images with the internal codec");
    std::vector<std::string> comp_inputs;
    int qp_single = 10;
    compress->add_option("inputs", comp_inputs, "input images")->required();
    compress->add_option("--qp", qp_single, "quantization parameter in [1,50]")
        ->capture_default_str();

    // shared depth/geometry flags
    std::vector<std::string> view_inputs, camera_paths, original_paths;
    std::string rectified_arg;
    double lambda = 50.0, tau = 4.0, depth_min = 1.0, depth_max = 100.0;
    int labels = 64, sweeps = 4;
    auto add_geometry = [&](CLI::App* sub) {
        sub->add_option("views", view_inputs, "view images (reference first)")->required();
        sub->add_option("--rectified", rectified_arg, "disparity range MIN:MAX");
        sub->add_option("--cameras", camera_paths, "camera JSON files, one per view")
            ->delimiter(',');
        sub->add_option("--lambda", lambda, "smoothness weight")->capture_default_str();
        sub->add_option("--tau", tau, "smoothness truncation")->capture_default_str();
        sub->add_option("--labels", labels, "label count (calibrated mode)")
            ->capture_default_str();
        sub->add_option("--depth-min", depth_min)->capture_default_str();
        sub->add_option("--depth-max", depth_max)->capture_default_str();
        sub->add_option("--sweeps", sweeps, "max expansion sweeps")->capture_default_str();
    };

    // depth
    auto* depth_cmd = app.add_subcommand("depth", "estimate a dense depth field");
    add_geometry(depth_cmd);
    double disparity_scale = 1.0;
    depth_cmd->add_option("--disparity-scale", disparity_scale,
                          "focal*baseline product for the visualization")
        ->capture_default_str();

    // reconstruct
    auto* recon_cmd = app.add_subcommand("reconstruct", "jointly reconstruct decoded views");
    add_geometry(recon_cmd);
    SolverConfig solver_cfg;
    std::string depth_path;
    double user_bits = 0.0;
    recon_cmd->add_option("--depth", depth_path, "precomputed depth field (16-bit PGM + sidecar)");
    recon_cmd->add_option("--eps1", solver_cfg.epsilon1, "fidelity radius, gray levels RMS")
        ->capture_default_str();
    recon_cmd->add_option("--eps2", solver_cfg.epsilon2, "correlation radius, RMS^2")
        ->capture_default_str();
    recon_cmd->add_option("--iterations", solver_cfg.outer_iterations)->capture_default_str();
    recon_cmd->add_option("--gamma", solver_cfg.gamma)->capture_default_str();
    recon_cmd->add_option("--original", original_paths, "originals for PSNR reporting")
        ->delimiter(',');
    recon_cmd->add_option("--bits", user_bits, "bits figure for externally decoded inputs");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "PSNR of test images against references");
    std::vector<std::string> ref_paths, test_paths;
    eval_cmd->add_option("--reference", ref_paths)->required()->delimiter(',');
    eval_cmd->add_option("--test", test_paths)->required()->delimiter(',');

    // rd
    auto* rd_cmd = app.add_subcommand("rd", "rate-distortion sweep over the internal codec");
    add_geometry(rd_cmd);
    std::vector<int> qp_list;
    rd_cmd->add_option("--qp", qp_list, "QP' sweep list (>= 4 values)")->delimiter(',');
    rd_cmd->add_option("--eps1", solver_cfg.epsilon1)->capture_default_str();
    rd_cmd->add_option("--eps1-auto", solver_cfg.epsilon1_auto_scale,
                       "scale epsilon1 from the measured codec distortion");
    rd_cmd->add_option("--eps2", solver_cfg.epsilon2)->capture_default_str();
    rd_cmd->add_option("--iterations", solver_cfg.outer_iterations)->capture_default_str();
    rd_cmd->add_option("--gamma", solver_cfg.gamma)->capture_default_str();

    // full
    auto* full_cmd = app.add_subcommand("full", "config-driven end-to-end run");
    std::string config_path;
    full_cmd->add_option("--config", config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            spec.kind = scene_kind_from_string(kind);
            spec.seed = seed;
            return cmd_synth(spec, out_dir);
        }
        if (*compress) return cmd_compress(comp_inputs, qp_single, out_dir);

        RectRange rect;
        if (!rectified_arg.empty()) rect = parse_rectified(rectified_arg);
        solver_cfg.workers = workers;

        if (*depth_cmd) {
            DepthProblem dp = make_depth_problem(rect, camera_paths, lambda, tau, labels,
                                                 depth_min, depth_max, sweeps);
            return cmd_depth(view_inputs, dp, out_dir, disparity_scale);
        }
        if (*recon_cmd) {
            DepthProblem dp = make_depth_problem(rect, camera_paths, lambda, tau, labels,
                                                 depth_min, depth_max, sweeps);
            return cmd_reconstruct(view_inputs, dp, solver_cfg, depth_path, out_dir,
                                   original_paths, user_bits);
        }
        if (*eval_cmd) return cmd_evaluate(ref_paths, test_paths);
        if (*rd_cmd) {
            if (qp_list.size() < 4)
                throw ConfigError("rd needs --qp with at least 4 values");
            DepthProblem dp = make_depth_problem(rect, camera_paths, lambda, tau, labels,
                                                 depth_min, depth_max, sweeps);
            return cmd_rd(view_inputs, qp_list, dp, solver_cfg, out_dir);
        }
        if (*full_cmd) {
            FullConfig cfg = load_full_config(config_path);
            if (out_dir != "mvjoint_out") cfg.out_dir = out_dir;
            if (workers != 1) {
                cfg.workers = workers;
                cfg.solver.workers = workers;
            }
            if (seed != 1) cfg.seed = seed;
            return cmd_full(cfg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
