#pragma once

#include <utility>
#include <vector>

#include <threadtrack/geometry.hpp>
#include <threadtrack/stereo.hpp>
#include <threadtrack/trace2d.hpp>

namespace threadtrack {

struct MatchConfig {
    int n_samples = 200;             ///< samples taken along each 2D spline
    double vertical_tolerance_px = 5.0;
    double max_param_offset = 0.05;  ///< |t_right - t_left| bound per pair
    int min_matches = 50;            ///< fewer consistent pairs fails the frame
    double reject_threshold_px = 4.0;
    int n_control = 32;
    int degree = 3;
};

struct MatchedPair {
    double t_left = 0.0;
    double t_right = 0.0;
    PixelPoint left;
    PixelPoint right;
};

struct Reconstruction {
    SplineCurve spline3d;
    std::vector<MatchedPair> matches;
    double quality_px = 0.0;  ///< mean reprojection residual against the traces
    double max_px = 0.0;      ///< worst single-sample residual
};

/// Least-squares 2D spline through the trace pixels (consecutive duplicates
/// dropped first). Throws FitError when the trace is shorter than n_control.
SplineCurve fit_trace_spline(const PixelTrace& trace, int n_control = 32,
                             int degree = 3);

/// Greedy left-to-right correspondence between two 2D splines sampled at
/// n_samples parameters. Every returned pair satisfies, in order: row
/// difference within the vertical tolerance, non-negative disparity, strictly
/// increasing right parameter, and parameter offset within max_param_offset;
/// among the right samples passing all four the closest parameter wins.
/// Throws MatchingFailedError below min_matches pairs.
std::vector<MatchedPair> match_stereo(const SplineCurve& left2d,
                                      const SplineCurve& right2d,
                                      const MatchConfig& cfg = {});

/// Flips the right trace when the flipped direction pairs better with the
/// left trace under a coarse version of the matcher. Ties keep the input.
std::pair<PixelTrace, PixelTrace> canonical_orientation(
    const PixelTrace& left, const PixelTrace& right,
    const MatchConfig& cfg = {});

/// Mean and max distance from the projections of n samples of a 3D curve to
/// the nearest pixel of the respective trace.
struct TraceResidual {
    double mean_px = 0.0;
    double max_px = 0.0;
};
TraceResidual residual_against_traces(const SplineCurve& spline3d,
                                      const PixelTrace& left,
                                      const PixelTrace& right,
                                      const StereoRig& rig, int n_samples = 200);

/// Full per-frame reconstruction: fit both 2D splines, match, triangulate,
/// fit the 3D spline, then verify the reprojection residual against the
/// input traces. Throws ReconstructionRejectedError above the threshold.
Reconstruction reconstruct(const PixelTrace& left, const PixelTrace& right,
                           const StereoRig& rig, const MatchConfig& cfg = {});

}  // namespace threadtrack
