// Command-line front end: synthetic scene generation, tracing, single-frame
// reconstruction, sequence tracking, the tail-shortening simulation and the
// tier evaluation suite. Every subcommand writes its artifacts into --out-dir
// and prints a short human-readable summary to stdout.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <threadtrack/config.hpp>
#include <threadtrack/error.hpp>
#include <threadtrack/eval.hpp>
#include <threadtrack/pipeline.hpp>
#include <threadtrack/reconstruct3d.hpp>
#include <threadtrack/serialize.hpp>
#include <threadtrack/synth.hpp>
#include <threadtrack/tailshorten.hpp>
#include <threadtrack/trace2d.hpp>
#include <threadtrack/track3d.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace threadtrack;

namespace {

constexpr int kExitError = 1;     // any library error
constexpr int kExitRejected = 2;  // --strict and a frame was rejected

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "threadtrack_out";
};

RunConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return RunConfig{};
    return load_run_config(opts.config_path);
}

fs::path ensure_out_dir(const CommonOpts& opts) {
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    return dir;
}

json path_to_json(const std::vector<Pixel>& path) {
    json arr = json::array();
    for (const Pixel& p : path) arr.push_back({p.u, p.v});
    return arr;
}

json polyline_to_json(const PolyLine& poly) {
    json arr = json::array();
    for (int i = 0; i < poly.size(); ++i) {
        json row = json::array();
        for (int c = 0; c < poly.dimension(); ++c) row.push_back(poly.points(i, c));
        arr.push_back(std::move(row));
    }
    return arr;
}

/// Trace overlay: the detection in dim gray, the trace colored from red at
/// its first pixel to orange at its last so the traversal order is visible.
RgbImage trace_overlay(const Mask& detection, const PixelTrace& trace) {
    RgbImage img(detection.width(), detection.height());
    for (int v = 0; v < detection.height(); ++v)
        for (int u = 0; u < detection.width(); ++u)
            if (detection.on(u, v)) img.set(u, v, 80, 80, 80);

    const int n = trace.size();
    for (int i = 0; i < n; ++i) {
        const double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
        const auto g = static_cast<std::uint8_t>(165.0 * f + 0.5);
        const Pixel& p = trace.points[static_cast<std::size_t>(i)];
        if (img.in_bounds(p.u, p.v)) img.set(p.u, p.v, 255, g, 0);
    }
    return img;
}

json frame_log_json(const FrameLog& f) {
    return {{"frame", f.frame},
            {"mean_px", f.mean_px},
            {"max_px", f.max_px},
            {"coverage_pct", f.coverage_pct},
            {"reinit", f.reinit}};
}

json trial_json(const TrialReport& r) {
    return {{"seed", r.seed},
            {"success", r.success},
            {"overshoot", r.overshoot},
            {"gave_up", r.gave_up},
            {"pulls", r.pulls},
            {"frames_rendered", r.frames_rendered},
            {"perception_failures", r.perception_failures},
            {"reinits", r.reinits},
            {"measured_tail_m", r.measured_tail_m},
            {"final_tail_m", r.final_tail_m},
            {"abs_error_m", r.abs_error_m}};
}

NoiseSpec noise_by_name(const std::string& name, const NoiseSpec& from_config) {
    if (name == "none") return NoiseSpec{};
    if (name == "moderate") return moderate_noise();
    if (name == "config") return from_config;
    throw DomainError("unknown noise preset: " + name);
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonOpts& opts, std::uint64_t seed,
              const std::string& family, const std::string& noise) {
    RunConfig cfg = load_config(opts);
    if (seed != 0) cfg.scene.seed = seed;
    if (!family.empty()) cfg.scene.family = family_from_name(family);
    cfg.scene.noise = noise_by_name(noise, cfg.scene.noise);

    const ScenePair scene = generate(cfg.scene);
    const fs::path dir = ensure_out_dir(opts);
    write_pgm(scene.left_gt, dir / "left_gt.pgm");
    write_pgm(scene.right_gt, dir / "right_gt.pgm");
    write_pgm(scene.left_detection, dir / "left_detection.pgm");
    write_pgm(scene.right_detection, dir / "right_detection.pgm");

    write_json_file({{"family", name_of(cfg.scene.family)},
                     {"seed", cfg.scene.seed},
                     {"left_gt_path", path_to_json(scene.left_gt_path)},
                     {"right_gt_path", path_to_json(scene.right_gt_path)},
                     {"curve", polyline_to_json(scene.gt_curve)}},
                    dir / "gt.json");

    std::cout << "scene " << name_of(cfg.scene.family) << " seed "
              << cfg.scene.seed << ": " << scene.left_detection.count_on()
              << " left px, " << scene.right_detection.count_on()
              << " right px -> " << dir.string() << "\n";
    return 0;
}

int cmd_trace(const CommonOpts& opts, const std::string& left_path,
              const std::string& right_path) {
    const RunConfig cfg = load_config(opts);
    const Mask left_mask = read_pgm(left_path);
    const Mask right_mask = read_pgm(right_path);

    PixelTrace left = trace(left_mask, cfg.pipeline.trace);
    PixelTrace right = trace(right_mask, cfg.pipeline.trace);
    std::tie(left, right) = canonical_orientation(left, right, cfg.pipeline.match);
    left.side = ImageSide::left;
    right.side = ImageSide::right;

    const fs::path dir = ensure_out_dir(opts);
    write_json_file(trace_to_json(left), dir / "left_trace.json");
    write_json_file(trace_to_json(right), dir / "right_trace.json");
    write_ppm(trace_overlay(left_mask, left), dir / "left_overlay.ppm");
    write_ppm(trace_overlay(right_mask, right), dir / "right_overlay.ppm");

    for (const PixelTrace* t : {&left, &right}) {
        std::cout << (t->side == ImageSide::left ? "left " : "right") << ": "
                  << t->size() << " px, " << t->bridged.size() << " bridges"
                  << (t->partial ? ", partial" : "") << "\n";
    }
    std::cout << "traces and overlays -> " << dir.string() << "\n";
    return 0;
}

int cmd_reconstruct(const CommonOpts& opts, const std::string& left_path,
                    const std::string& right_path, bool strict) {
    const RunConfig cfg = load_config(opts);
    const Mask left_mask = read_pgm(left_path);
    const Mask right_mask = read_pgm(right_path);
    const fs::path dir = ensure_out_dir(opts);

    PixelTrace left = trace(left_mask, cfg.pipeline.trace);
    PixelTrace right = trace(right_mask, cfg.pipeline.trace);
    std::tie(left, right) = canonical_orientation(left, right, cfg.pipeline.match);

    try {
        const Reconstruction rec =
            reconstruct(left, right, cfg.scene.rig, cfg.pipeline.match);
        write_json_file(spline_to_json(rec.spline3d), dir / "spline3d.json");
        write_json_file({{"rejected", false},
                         {"mean_px", rec.quality_px},
                         {"max_px", rec.max_px},
                         {"n_matches", rec.matches.size()}},
                        dir / "report.json");
        std::cout << "reconstructed: mean " << rec.quality_px << " px, max "
                  << rec.max_px << " px, " << rec.matches.size()
                  << " matches -> " << dir.string() << "\n";
        return 0;
    } catch (const ReconstructionRejectedError& e) {
        write_json_file({{"rejected", true}, {"residual_px", e.residual_px}},
                        dir / "report.json");
        std::cout << "frame rejected: residual " << e.residual_px << " px\n";
        return strict ? kExitRejected : 0;
    }
}

int cmd_track(const CommonOpts& opts, std::uint64_t seed, int frames,
              const std::string& family, const std::string& trajectory,
              const std::string& ablation, const std::string& noise,
              bool strict) {
    RunConfig cfg = load_config(opts);
    if (seed != 0) cfg.scene.seed = seed;
    if (!family.empty()) cfg.scene.family = family_from_name(family);
    cfg.scene.noise = noise_by_name(noise, cfg.scene.noise);

    const Trajectory traj = trajectory_from_name(trajectory);
    const AblationMode mode = ablation_from_name(ablation);
    const Sequence seq = generate_sequence(cfg.scene, traj, frames);

    const SequenceResult res =
        run_tracked(seq, cfg.scene.rig, mode, cfg.pipeline.track,
                    cfg.pipeline.trace, cfg.pipeline.match);

    const fs::path dir = ensure_out_dir(opts);
    std::ofstream lines(dir / "frames.jsonl");
    for (const FrameLog& f : res.frames) {
        lines << frame_log_json(f).dump() << "\n";
        std::cout << "frame " << f.frame << ": mean " << f.mean_px
                  << " px, max " << f.max_px << " px, coverage "
                  << f.coverage_pct << "%" << (f.reinit ? " (reinit)" : "")
                  << "\n";
    }
    write_json_file({{"ablation", name_of(mode)},
                     {"trajectory", name_of(traj)},
                     {"mean_px", res.mean_px},
                     {"max_px", res.max_px},
                     {"mean_coverage_pct", res.mean_coverage_pct},
                     {"reinit_count", res.reinit_count}},
                    dir / "summary.json");
    std::cout << "sequence mean " << res.mean_px << " px, coverage "
              << res.mean_coverage_pct << "%, " << res.reinit_count
              << " reinits -> " << dir.string() << "\n";

    return strict && res.reinit_count > 0 ? kExitRejected : 0;
}

int cmd_simulate(const CommonOpts& opts, std::uint64_t seed_base, int trials,
                 const std::string& noise) {
    const RunConfig cfg = load_config(opts);
    const NoiseSpec noise_spec = noise_by_name(noise, cfg.scene.noise);
    const fs::path dir = ensure_out_dir(opts);

    int successes = 0;
    double error_sum = 0.0;
    json all = json::array();
    for (int k = 0; k < trials; ++k) {
        const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(k);
        SimState state = make_tail_scene(seed, noise_spec);
        const TrialReport rep =
            run_servo(state, cfg.pipeline.tail, cfg.pipeline.trace,
                      cfg.pipeline.match, cfg.pipeline.track);
        successes += rep.success;
        error_sum += rep.abs_error_m;

        const json j = trial_json(rep);
        write_json_file(j, dir / ("trial_" + std::to_string(seed) + ".json"));
        all.push_back(j);
        std::cout << "trial " << seed << ": "
                  << (rep.success ? "success" : "FAILURE") << ", " << rep.pulls
                  << " pulls, tail " << 100.0 * rep.final_tail_m << " cm"
                  << (rep.perception_failures
                          ? ", " + std::to_string(rep.perception_failures) +
                                " perception failures"
                          : "")
                  << "\n";
    }

    write_json_file({{"trials", trials},
                     {"successes", successes},
                     {"mean_abs_error_m", error_sum / trials},
                     {"reports", all}},
                    dir / "summary.json");
    std::cout << successes << "/" << trials << " succeeded, mean error "
              << 100.0 * error_sum / trials << " cm -> " << dir.string()
              << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, bool strict) {
    const RunConfig cfg = load_config(opts);
    const auto specs = tier_suite_specs(cfg.scene.rig);
    const fs::path dir = ensure_out_dir(opts);

    json scenes = json::array();
    struct TierAgg {
        int n = 0, reconstructed = 0;
        double mean_px = 0, coverage = 0, order = 0;
    };
    TierAgg agg[4];

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const TierSceneReport rep =
            evaluate_tier_scene(specs[i], cfg.pipeline.trace, cfg.pipeline.match);
        scenes.push_back({{"tier", rep.tier},
                          {"seed", rep.seed},
                          {"family", name_of(rep.family)},
                          {"reconstructed", rep.reconstructed},
                          {"mean_px", rep.mean_px},
                          {"max_px", rep.max_px},
                          {"coverage_pct", rep.coverage_pct},
                          {"order_ratio_left", rep.order_ratio_left},
                          {"order_ratio_right", rep.order_ratio_right},
                          {"n_matches", rep.n_matches}});
        TierAgg& a = agg[rep.tier - 1];
        ++a.n;
        a.reconstructed += rep.reconstructed;
        if (rep.reconstructed) {
            a.mean_px += rep.mean_px;
            a.coverage += rep.coverage_pct;
        }
        a.order += 0.5 * (rep.order_ratio_left + rep.order_ratio_right);
    }

    json tiers = json::array();
    bool all_reconstructed = true;
    for (int t = 0; t < 4; ++t) {
        const TierAgg& a = agg[t];
        const int ok = a.reconstructed;
        all_reconstructed = all_reconstructed && ok == a.n;
        const double mean_px = ok ? a.mean_px / ok : 0.0;
        const double coverage = ok ? a.coverage / ok : 0.0;
        tiers.push_back({{"tier", t + 1},
                         {"scenes", a.n},
                         {"reconstructed", ok},
                         {"mean_px", mean_px},
                         {"mean_coverage_pct", coverage},
                         {"mean_order_ratio", a.order / a.n}});
        std::cout << "tier " << t + 1 << ": " << ok << "/" << a.n
                  << " reconstructed, mean " << mean_px << " px, coverage "
                  << coverage << "%, order " << a.order / a.n << "\n";
    }

    write_json_file({{"tiers", tiers}, {"scenes", scenes}},
                    dir / "tier_metrics.json");
    std::cout << "tier metrics -> " << dir.string() << "\n";
    return strict && !all_reconstructed ? kExitRejected : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D thread reconstruction and tracking toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--config", opts.config_path,
                   "JSON config file (missing fields keep their defaults)");
    app.add_option("--out-dir", opts.out_dir, "output directory");

    std::uint64_t seed = 0;
    std::string family;
    std::string noise = "config";
    std::string left_path, right_path;
    std::string trajectory = "translate";
    std::string ablation = "none";
    int frames = 10;
    int trials = 20;
    std::uint64_t seed_base = 1;
    bool strict = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a stereo scene");
    synth->add_option("--seed", seed, "scene seed (0 keeps the config seed)");
    synth->add_option("--family", family, "curve family override");
    synth->add_option("--noise", noise, "none, moderate or config");

    CLI::App* tracecmd = app.add_subcommand("trace", "trace detection masks");
    tracecmd->add_option("--left", left_path, "left detection PGM")->required();
    tracecmd->add_option("--right", right_path, "right detection PGM")->required();

    CLI::App* rec = app.add_subcommand("reconstruct",
                                       "reconstruct a 3D spline from masks");
    rec->add_option("--left", left_path, "left detection PGM")->required();
    rec->add_option("--right", right_path, "right detection PGM")->required();
    rec->add_flag("--strict", strict, "exit 2 when the frame is rejected");

    CLI::App* track = app.add_subcommand("track", "track a synthetic sequence");
    track->add_option("--seed", seed, "scene seed (0 keeps the config seed)");
    track->add_option("--frames", frames, "number of frames");
    track->add_option("--family", family, "curve family override");
    track->add_option("--trajectory", trajectory, "hold, translate or loop_morph");
    track->add_option("--ablation", ablation,
                      "none, full, mask_only, trace_only or no_tracking");
    track->add_option("--noise", noise, "none, moderate or config");
    track->add_flag("--strict", strict, "exit 2 when any frame is rejected");

    CLI::App* sim = app.add_subcommand("simulate", "run tail-shortening trials");
    sim->add_option("--seed-base", seed_base, "first trial seed");
    sim->add_option("--trials", trials, "number of trials");
    sim->add_option("--noise", noise, "none, moderate or config");

    CLI::App* eval = app.add_subcommand("eval", "run the 40-scene tier suite");
    eval->add_flag("--strict", strict, "exit 2 unless every scene reconstructs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(opts, seed, family, noise);
        if (tracecmd->parsed()) return cmd_trace(opts, left_path, right_path);
        if (rec->parsed())
            return cmd_reconstruct(opts, left_path, right_path, strict);
        if (track->parsed())
            return cmd_track(opts, seed, frames, family, trajectory, ablation,
                             noise, strict);
        if (sim->parsed()) return cmd_simulate(opts, seed_base, trials, noise);
        if (eval->parsed()) return cmd_eval(opts, strict);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
