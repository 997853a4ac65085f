#include <threadtrack/pipeline.hpp>

#include <limits>

#include <threadtrack/error.hpp>

namespace threadtrack {

std::pair<PixelTrace, PixelTrace> trace_scene(const ScenePair& scene,
                                              const TraceConfig& trace_cfg,
                                              const MatchConfig& match_cfg) {
    const PixelTrace left = trace(scene.left_detection, trace_cfg);
    const PixelTrace right = trace(scene.right_detection, trace_cfg);
    auto [l, r] = canonical_orientation(left, right, match_cfg);
    l.side = ImageSide::left;
    r.side = ImageSide::right;
    return {std::move(l), std::move(r)};
}

Reconstruction reconstruct_scene(const ScenePair& scene, const StereoRig& rig,
                                 const TraceConfig& trace_cfg,
                                 const MatchConfig& match_cfg) {
    const auto [l, r] = trace_scene(scene, trace_cfg, match_cfg);
    return reconstruct(l, r, rig, match_cfg);
}

NoiseSpec moderate_noise() {
    NoiseSpec noise;
    noise.gap_count = 2;
    noise.gap_len_px = 6;
    noise.speckle_count = 20;
    noise.speckle_max_px = 12;
    noise.dropout_prob = 0.02;
    return noise;
}

std::vector<SceneSpec> tier_suite_specs(const StereoRig& rig) {
    constexpr CurveFamily plain[] = {CurveFamily::line, CurveFamily::arc,
                                     CurveFamily::sine};
    constexpr CurveFamily crossing[] = {CurveFamily::loop,
                                        CurveFamily::tangle};

    std::vector<SceneSpec> specs;
    specs.reserve(40);
    for (int tier = 1; tier <= 4; ++tier) {
        const bool self_intersecting = tier == 2 || tier == 4;
        const int speckle = tier <= 2 ? 50 : 90;
        for (int k = 0; k < 10; ++k) {
            SceneSpec spec;
            spec.rig = rig;
            spec.seed = static_cast<std::uint64_t>(1000 * tier + k);
            spec.family = self_intersecting ? crossing[k % 2] : plain[k % 3];
            spec.loop_morph = 1.0;
            spec.noise.gap_count = 3;
            spec.noise.gap_len_px = 8;
            spec.noise.speckle_count = speckle;
            spec.noise.speckle_max_px = 10;
            spec.noise.dropout_prob = 0.0;
            specs.push_back(spec);
        }
    }
    return specs;
}

int tier_of(std::size_t suite_index) {
    return static_cast<int>(suite_index / 10) + 1;
}

TierSceneReport evaluate_tier_scene(const SceneSpec& spec,
                                    const TraceConfig& trace_cfg,
                                    const MatchConfig& match_cfg) {
    TierSceneReport report;
    report.seed = spec.seed;
    report.family = spec.family;

    const ScenePair scene = generate(spec);
    const auto [l, r] = trace_scene(scene, trace_cfg, match_cfg);
    report.order_ratio_left = order_ratio(l, scene.left_gt_path);
    report.order_ratio_right = order_ratio(r, scene.right_gt_path);

    try {
        const Reconstruction rec = reconstruct(l, r, spec.rig, match_cfg);
        const ReprojectionResult err = reprojection_error(
            rec.spline3d, scene.left_gt, scene.right_gt, spec.rig);
        report.reconstructed = true;
        report.mean_px = err.mean_px;
        report.max_px = err.max_px;
        report.coverage_pct = coverage_pct(rec.spline3d, scene.left_gt,
                                           scene.right_gt, spec.rig);
        report.n_matches = rec.matches.size();
    } catch (const ReconstructionRejectedError& e) {
        report.mean_px = e.residual_px;
        report.max_px = e.residual_px;
    } catch (const Error&) {
        report.mean_px = std::numeric_limits<double>::infinity();
        report.max_px = report.mean_px;
    }
    return report;
}

Sequence make_no_loop_sequence(std::uint64_t seed, int n_frames,
                               const StereoRig& rig) {
    SceneSpec spec;
    spec.rig = rig;
    spec.seed = seed;
    spec.family = CurveFamily::sine;
    spec.noise = moderate_noise();
    return generate_sequence(spec, Trajectory::translate, n_frames);
}

Sequence make_one_loop_sequence(std::uint64_t seed, int n_frames,
                                const StereoRig& rig) {
    SceneSpec spec;
    spec.rig = rig;
    spec.seed = seed;
    spec.family = CurveFamily::loop;
    spec.loop_morph = 1.0;
    spec.noise = moderate_noise();
    return generate_sequence(spec, Trajectory::loop_morph, n_frames);
}

SequenceResult run_tracked(const Sequence& seq, const StereoRig& rig,
                           AblationMode mode, const TrackConfig& track_cfg,
                           const TraceConfig& trace_cfg,
                           const MatchConfig& match_cfg) {
    if (seq.frames.empty()) throw DomainError("sequence has no frames");
    const Reconstruction initial =
        reconstruct_scene(seq.frames.front(), rig, trace_cfg, match_cfg);
    return track_sequence(initial, seq, rig, mode, track_cfg, trace_cfg,
                          match_cfg);
}

}  // namespace threadtrack
