#include <threadtrack/track3d.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <threadtrack/error.hpp>

namespace threadtrack {

namespace {

Eigen::Vector2d clamp_norm(Eigen::Vector2d v, double max_len) {
    const double n = v.norm();
    if (n > max_len) v *= max_len / n;
    return v;
}

Eigen::Vector3d point3(const SplineCurve& curve, double t) {
    Eigen::VectorXd p = curve.evaluate(t);
    return Eigen::Vector3d(p(0), p(1), p(2));
}

}  // namespace

Eigen::Vector2d mask_correction(const PixelPoint& projected,
                                const FeatureTransform& ft, double max_px) {
    if (ft.empty)
        throw TrackingLostError("detection mask has no on-pixels",
                                std::numeric_limits<double>::infinity());
    const Pixel nearest = ft.nearest_pixel(projected.u, projected.v);
    const int ru = std::clamp(static_cast<int>(std::lround(projected.u)), 0,
                              ft.width - 1);
    const int rv = std::clamp(static_cast<int>(std::lround(projected.v)), 0,
                              ft.height - 1);
    if (nearest.u == ru && nearest.v == rv) return Eigen::Vector2d::Zero();
    return clamp_norm(Eigen::Vector2d(nearest.u - projected.u,
                                      nearest.v - projected.v),
                      max_px);
}

Eigen::Vector2d mask_correction(const PixelPoint& projected,
                                const Mask& binary_mask, double max_px) {
    return mask_correction(projected, feature_transform(binary_mask), max_px);
}

Eigen::Vector2d trace_correction(double t, const PixelPoint& projected,
                                 const SplineCurve& trace2d, double max_px) {
    if (trace2d.dimension() != 2)
        throw DomainError("trace spline must be 2D");
    const Eigen::VectorXd p = trace2d.evaluate(t);
    return clamp_norm(Eigen::Vector2d(p(0) - projected.u, p(1) - projected.v),
                      max_px);
}

TrackerState make_tracker(const Reconstruction& initial) {
    TrackerState state;
    state.spline3d = initial.spline3d;
    state.quality_px = initial.quality_px;
    return state;
}

namespace {

/// Fits a 2D spline to a freshly traced path and orients it so that its
/// endpoints line up with the projected endpoints of the previous model.
std::optional<SplineCurve> oriented_trace_spline(const PixelTrace& trace,
                                                 const SplineCurve& prev,
                                                 bool left_image,
                                                 const StereoRig& rig,
                                                 const TrackConfig& cfg) {
    if (trace.empty()) return std::nullopt;
    SplineCurve spline;
    try {
        spline = fit_trace_spline(trace, cfg.n_control, cfg.degree);
    } catch (const FitError&) {
        return std::nullopt;
    }
    try {
        const StereoProjection p0 = project(rig, point3(prev, 0.0));
        const StereoProjection p1 = project(rig, point3(prev, 1.0));
        const PixelPoint a = left_image ? p0.left : p0.right;
        const PixelPoint b = left_image ? p1.left : p1.right;
        const Eigen::VectorXd s0 = spline.evaluate(0.0);
        const Eigen::VectorXd s1 = spline.evaluate(1.0);
        const double direct = std::hypot(s0(0) - a.u, s0(1) - a.v) +
                              std::hypot(s1(0) - b.u, s1(1) - b.v);
        const double flipped = std::hypot(s0(0) - b.u, s0(1) - b.v) +
                               std::hypot(s1(0) - a.u, s1(1) - a.v);
        if (flipped < direct) return spline.reversed();
    } catch (const BehindCameraError&) {
        // Previous model endpoint left the frustum; keep the fit as-is.
    }
    return spline;
}

Eigen::Vector3d lifted_displacement(const StereoRig& rig,
                                    const Eigen::Vector3d& base,
                                    const Eigen::Vector2d& d_left,
                                    const Eigen::Vector2d& d_right) {
    try {
        return triangulate_displacement(rig, base, d_left, d_right);
    } catch (const TriangulationError&) {
        return Eigen::Vector3d::Zero();
    } catch (const BehindCameraError&) {
        return Eigen::Vector3d::Zero();
    }
}

}  // namespace

TrackerState update(const TrackerState& state, const Mask& left_detection,
                    const Mask& right_detection, const PixelTrace& left_trace,
                    const PixelTrace& right_trace, const StereoRig& rig,
                    const TrackConfig& cfg, const TraceConfig& trace_cfg) {
    if (!state.spline3d.valid() || state.spline3d.dimension() != 3)
        throw DomainError("tracker needs a valid 3D spline");
    if (cfg.correction_samples < 2)
        throw DomainError("need at least two correction samples");

    const Mask left_bin = preprocess(left_detection, trace_cfg.prob_threshold,
                                     trace_cfg.min_component_area);
    const Mask right_bin = preprocess(right_detection, trace_cfg.prob_threshold,
                                      trace_cfg.min_component_area);
    const FeatureTransform left_ft = feature_transform(left_bin);
    const FeatureTransform right_ft = feature_transform(right_bin);
    if (left_ft.empty || right_ft.empty)
        throw TrackingLostError("detection mask has no on-pixels",
                                std::numeric_limits<double>::infinity());

    const SplineCurve& prev = state.spline3d;
    const bool wants_trace = cfg.term != TrackTerm::mask_only;
    std::optional<SplineCurve> left2d, right2d;
    if (wants_trace) {
        left2d = oriented_trace_spline(left_trace, prev, true, rig, cfg);
        right2d = oriented_trace_spline(right_trace, prev, false, rig, cfg);
    }
    const bool use_trace = wants_trace && left2d && right2d;
    const bool fallback = wants_trace && !use_trace;

    const int n = cfg.correction_samples;
    Eigen::MatrixXd corrected(n, 3);
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / (n - 1);
        const Eigen::Vector3d p = point3(prev, t);
        StereoProjection proj;
        try {
            proj = project(rig, p);
        } catch (const BehindCameraError&) {
            corrected.row(k) = p;
            continue;
        }

        Eigen::Vector3d v_mask = Eigen::Vector3d::Zero();
        if (cfg.term != TrackTerm::trace_only) {
            const Eigen::Vector2d cl =
                mask_correction(proj.left, left_ft, cfg.max_correction_px);
            const Eigen::Vector2d cr =
                mask_correction(proj.right, right_ft, cfg.max_correction_px);
            v_mask = lifted_displacement(rig, p, cl, cr);
        }

        Eigen::Vector3d v_trace = Eigen::Vector3d::Zero();
        if (use_trace) {
            const Eigen::Vector2d cl = trace_correction(
                t, proj.left, *left2d, cfg.max_correction_px);
            const Eigen::Vector2d cr = trace_correction(
                t, proj.right, *right2d, cfg.max_correction_px);
            v_trace = lifted_displacement(rig, p, cl, cr);
        }

        Eigen::Vector3d move;
        switch (cfg.term) {
            case TrackTerm::mask_only: move = v_mask; break;
            case TrackTerm::trace_only: move = v_trace; break;
            case TrackTerm::full:
                move = use_trace ? (0.5 * (v_mask + v_trace)).eval() : v_mask;
                break;
        }
        corrected.row(k) = p + move;
    }

    TrackerState next;
    try {
        next.spline3d = fit_least_squares(PolyLine::from_points(corrected),
                                          cfg.n_control, cfg.degree);
    } catch (const FitError&) {
        throw TrackingLostError("corrected samples no longer fit a spline",
                                std::numeric_limits<double>::infinity());
    }

    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / (n - 1);
        try {
            const StereoProjection proj = project(rig, point3(next.spline3d, t));
            sum += left_ft.distance(proj.left.u, proj.left.v);
            sum += right_ft.distance(proj.right.u, proj.right.v);
        } catch (const BehindCameraError&) {
            sum += 2e6;
        }
    }
    next.quality_px = sum / (2.0 * n);
    next.frame_index = state.frame_index + 1;
    next.trace_fallback = fallback;
    next.high_error_streak = next.quality_px > cfg.lost_threshold_px
                                 ? state.high_error_streak + 1
                                 : 0;
    if (next.high_error_streak >= cfg.lost_after_frames)
        throw TrackingLostError("residual stayed above the lost threshold",
                                next.quality_px);
    return next;
}

namespace {

std::pair<PixelTrace, PixelTrace> traced_frame(const ScenePair& frame,
                                               const TraceConfig& trace_cfg,
                                               const MatchConfig& match_cfg) {
    PixelTrace left = trace(frame.left_detection, trace_cfg);
    PixelTrace right = trace(frame.right_detection, trace_cfg);
    auto [l, r] = canonical_orientation(left, right, match_cfg);
    l.side = ImageSide::left;
    r.side = ImageSide::right;
    return {std::move(l), std::move(r)};
}

}  // namespace

SequenceResult track_sequence(const Reconstruction& initial,
                              const Sequence& seq, const StereoRig& rig,
                              AblationMode mode, const TrackConfig& cfg,
                              const TraceConfig& trace_cfg,
                              const MatchConfig& match_cfg) {
    if (seq.frames.empty()) throw DomainError("sequence has no frames");

    TrackConfig step_cfg = cfg;
    switch (mode) {
        case AblationMode::full: step_cfg.term = TrackTerm::full; break;
        case AblationMode::mask_only:
            step_cfg.term = TrackTerm::mask_only;
            break;
        case AblationMode::trace_only:
            step_cfg.term = TrackTerm::trace_only;
            break;
        case AblationMode::no_tracking: break;
    }

    SequenceResult out;
    TrackerState state = make_tracker(initial);
    SplineCurve current = initial.spline3d;

    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const ScenePair& frame = seq.frames[i];
        bool reinit = false;
        if (i > 0) {
            if (mode == AblationMode::no_tracking) {
                try {
                    auto [l, r] = traced_frame(frame, trace_cfg, match_cfg);
                    current = reconstruct(l, r, rig, match_cfg).spline3d;
                } catch (const Error&) {
                    reinit = true;  // keep the previous frame's model
                }
            } else {
                PixelTrace l, r;
                try {
                    std::tie(l, r) = traced_frame(frame, trace_cfg, match_cfg);
                } catch (const TraceError&) {
                    l = {};
                    r = {};
                }
                try {
                    state = update(state, frame.left_detection,
                                   frame.right_detection, l, r, rig, step_cfg,
                                   trace_cfg);
                    current = state.spline3d;
                } catch (const TrackingLostError&) {
                    reinit = true;
                    try {
                        if (l.empty() || r.empty())
                            std::tie(l, r) =
                                traced_frame(frame, trace_cfg, match_cfg);
                        const Reconstruction rec =
                            reconstruct(l, r, rig, match_cfg);
                        state = make_tracker(rec);
                        state.frame_index = static_cast<int>(i);
                        current = rec.spline3d;
                    } catch (const Error&) {
                        // Keep the previous model and let the next frame retry
                        // from a clean slate instead of failing immediately.
                        state.high_error_streak = 0;
                    }
                }
            }
        }

        const ReprojectionResult rep =
            reprojection_error(current, frame.left_gt, frame.right_gt, rig);
        const double cov =
            coverage_pct(current, frame.left_gt, frame.right_gt, rig);
        out.frames.push_back({static_cast<int>(i), rep.mean_px, rep.max_px,
                              cov, reinit});
    }

    for (const FrameLog& log : out.frames) {
        out.mean_px += log.mean_px;
        out.max_px = std::max(out.max_px, log.max_px);
        out.mean_coverage_pct += log.coverage_pct;
        if (log.reinit) ++out.reinit_count;
    }
    out.mean_px /= static_cast<double>(out.frames.size());
    out.mean_coverage_pct /= static_cast<double>(out.frames.size());
    return out;
}

}  // namespace threadtrack
