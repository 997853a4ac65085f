#pragma once

#include <optional>

#include <threadtrack/eval.hpp>
#include <threadtrack/reconstruct3d.hpp>
#include <threadtrack/synth.hpp>

namespace threadtrack {

/// Which correction terms drive the per-frame model update.
enum class TrackTerm { full, mask_only, trace_only };

/// Sequence-level strategy, including the fresh-reconstruction baseline.
enum class AblationMode { full, mask_only, trace_only, no_tracking };

struct TrackConfig {
    int correction_samples = 200;
    double max_correction_px = 30.0;  ///< per-image clamp on correction length
    double lost_threshold_px = 8.0;
    int lost_after_frames = 3;  ///< consecutive bad frames before giving up
    int n_control = 32;
    int degree = 3;
    TrackTerm term = TrackTerm::full;
};

struct TrackerState {
    SplineCurve spline3d;
    int frame_index = 0;
    double quality_px = 0.0;
    int high_error_streak = 0;
    bool trace_fallback = false;  ///< last update ran without a trace spline
};

/// Pull toward the nearest on-pixel of a preprocessed mask, exactly zero when
/// the projected point already sits on the mask, clamped to max_px.
/// Throws TrackingLostError when the mask has no on-pixels.
Eigen::Vector2d mask_correction(const PixelPoint& projected,
                                const FeatureTransform& ft, double max_px);
Eigen::Vector2d mask_correction(const PixelPoint& projected,
                                const Mask& binary_mask, double max_px);

/// Pull from the projected point to the same-parameter point of the newly
/// traced 2D spline, clamped to max_px.
Eigen::Vector2d trace_correction(double t, const PixelPoint& projected,
                                 const SplineCurve& trace2d, double max_px);

TrackerState make_tracker(const Reconstruction& initial);

/// One tracking step: sample the previous model, gather 2D corrections in
/// both images, lift them to 3D displacements, and refit the spline to the
/// corrected samples. Throws TrackingLostError once the post-update residual
/// stays above lost_threshold_px for lost_after_frames consecutive frames.
TrackerState update(const TrackerState& state, const Mask& left_detection,
                    const Mask& right_detection, const PixelTrace& left_trace,
                    const PixelTrace& right_trace, const StereoRig& rig,
                    const TrackConfig& cfg = {},
                    const TraceConfig& trace_cfg = {});

struct FrameLog {
    int frame = 0;
    double mean_px = 0.0;
    double max_px = 0.0;
    double coverage_pct = 0.0;
    bool reinit = false;
};

struct SequenceResult {
    std::vector<FrameLog> frames;
    double mean_px = 0.0;           ///< mean of the per-frame means
    double max_px = 0.0;
    double mean_coverage_pct = 0.0;
    int reinit_count = 0;
};

/// Runs a whole sequence against its ground truth. `initial` must come from
/// frame 0, which is logged as-is; later frames are tracked (or freshly
/// reconstructed under AblationMode::no_tracking, falling back to the
/// previous model on rejected frames, which is logged as a reinit).
SequenceResult track_sequence(const Reconstruction& initial,
                              const Sequence& seq, const StereoRig& rig,
                              AblationMode mode, const TrackConfig& cfg = {},
                              const TraceConfig& trace_cfg = {},
                              const MatchConfig& match_cfg = {});

}  // namespace threadtrack
