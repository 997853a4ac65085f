#pragma once

#include <vector>

#include <threadtrack/geometry.hpp>
#include <threadtrack/image.hpp>
#include <threadtrack/stereo.hpp>
#include <threadtrack/trace2d.hpp>

namespace threadtrack {

struct ReprojectionResult {
    double mean_px = 0.0;
    double max_px = 0.0;
};

/// Distance from the projections of n samples of the 3D curve to the nearest
/// on-pixel of the respective reference mask, averaged over both images.
ReprojectionResult reprojection_error(const SplineCurve& spline3d,
                                      const Mask& left_ref,
                                      const Mask& right_ref,
                                      const StereoRig& rig,
                                      int n_samples = 200);

/// Fraction of reference on-pixels lying within radius_px of the projected
/// curve polyline, averaged over both images. Returns a percentage.
double coverage_pct(const SplineCurve& spline3d, const Mask& left_ref,
                    const Mask& right_ref, const StereoRig& rig,
                    double radius_px = 3.0, int n_samples = 200);

struct MaskMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double iou = 0.0;
};

/// Pixelwise detection quality of `predicted` against `reference`.
MaskMetrics mask_metrics(const Mask& predicted, const Mask& reference);

/// How well a trace follows a ground-truth ordered pixel path: each trace
/// pixel maps to its nearest path index (within tol_px), and the score is the
/// longest monotone run of those indices divided by the trace length, taken
/// over both traversal directions. 1.0 means perfectly ordered.
double order_ratio(const PixelTrace& trace, const std::vector<Pixel>& gt_path,
                   double tol_px = 3.0);

/// Fraction of distinct ground-truth path indices hit by the trace within
/// tol_px, i.e. how much of the path the trace actually visits.
double path_coverage(const PixelTrace& trace,
                     const std::vector<Pixel>& gt_path, double tol_px = 3.0);

}  // namespace threadtrack
