#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <threadtrack/eval.hpp>
#include <threadtrack/reconstruct3d.hpp>
#include <threadtrack/synth.hpp>
#include <threadtrack/track3d.hpp>

namespace threadtrack {

/// Traces both detection masks and orients the right trace to match the left.
std::pair<PixelTrace, PixelTrace> trace_scene(const ScenePair& scene,
                                              const TraceConfig& trace_cfg = {},
                                              const MatchConfig& match_cfg = {});

Reconstruction reconstruct_scene(const ScenePair& scene, const StereoRig& rig,
                                 const TraceConfig& trace_cfg = {},
                                 const MatchConfig& match_cfg = {});

/// Default degradation for the noisy presets: short gaps, sparse clutter
/// blobs (some large enough to survive area filtering) and light dropout.
NoiseSpec moderate_noise();

/// 40-scene evaluation suite, ten per tier. Tiers 1 and 3 use curve families
/// without self-intersections, tiers 2 and 4 the self-intersecting ones;
/// tiers 3 and 4 carry heavier clutter. All share the same gap degradation.
std::vector<SceneSpec> tier_suite_specs(const StereoRig& rig = {});

/// Tier (1-4) of a scene index returned by tier_suite_specs.
int tier_of(std::size_t suite_index);

struct TierSceneReport {
    int tier = 0;
    std::uint64_t seed = 0;
    CurveFamily family = CurveFamily::line;
    bool reconstructed = false;
    double mean_px = 0.0;  ///< reprojection error against the clean strokes
    double max_px = 0.0;
    double coverage_pct = 0.0;
    double order_ratio_left = 0.0;
    double order_ratio_right = 0.0;
    std::size_t n_matches = 0;
};

/// Generates, traces and reconstructs one suite scene. A rejected or failed
/// reconstruction is reported honestly: reconstructed=false and an infinite
/// (or carried-over) error instead of a silently dropped scene.
TierSceneReport evaluate_tier_scene(const SceneSpec& spec,
                                    const TraceConfig& trace_cfg = {},
                                    const MatchConfig& match_cfg = {});

/// Straight sideways glide of a plain curve; the easy tracking sequence.
Sequence make_no_loop_sequence(std::uint64_t seed, int n_frames = 10,
                               const StereoRig& rig = {});

/// A curl tightening through a self-intersection; the hard tracking sequence.
Sequence make_one_loop_sequence(std::uint64_t seed, int n_frames = 12,
                                const StereoRig& rig = {});

/// Reconstructs frame 0 and tracks the rest under the given ablation mode.
SequenceResult run_tracked(const Sequence& seq, const StereoRig& rig,
                           AblationMode mode, const TrackConfig& track_cfg = {},
                           const TraceConfig& trace_cfg = {},
                           const MatchConfig& match_cfg = {});

}  // namespace threadtrack
