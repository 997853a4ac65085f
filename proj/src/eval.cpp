#include <threadtrack/eval.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace threadtrack {

namespace {

std::vector<Eigen::Vector2d> projected_polyline(const SplineCurve& spline3d,
                                                const StereoRig& rig,
                                                bool left_image,
                                                int n_samples) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const Eigen::Vector3d p = spline3d.evaluate(t);
        const StereoProjection proj = project(rig, p);
        const PixelPoint& px = left_image ? proj.left : proj.right;
        out.emplace_back(px.u, px.v);
    }
    return out;
}

double point_segment_distance(const Eigen::Vector2d& p,
                              const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + s * ab)).norm();
}

}  // namespace

ReprojectionResult reprojection_error(const SplineCurve& spline3d,
                                      const Mask& left_ref,
                                      const Mask& right_ref,
                                      const StereoRig& rig, int n_samples) {
    const FeatureTransform ft_left = feature_transform(left_ref);
    const FeatureTransform ft_right = feature_transform(right_ref);
    if (ft_left.empty || ft_right.empty)
        throw MetricError("reference masks must contain on-pixels");

    double sum = 0.0;
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const StereoProjection proj = project(rig, spline3d.evaluate(t));
        const double dl = ft_left.distance(proj.left.u, proj.left.v);
        const double dr = ft_right.distance(proj.right.u, proj.right.v);
        sum += dl + dr;
        worst = std::max({worst, dl, dr});
    }
    return {sum / (2.0 * n_samples), worst};
}

double coverage_pct(const SplineCurve& spline3d, const Mask& left_ref,
                    const Mask& right_ref, const StereoRig& rig,
                    double radius_px, int n_samples) {
    double covered = 0.0;
    double total = 0.0;
    for (bool left_image : {true, false}) {
        const Mask& ref = left_image ? left_ref : right_ref;
        const auto poly = projected_polyline(spline3d, rig, left_image, n_samples);

        // Coarse grid over the polyline segments keeps the pixel sweep cheap.
        const double cell = std::max(16.0, 4.0 * radius_px);
        auto cell_of = [&](double x) { return static_cast<int>(std::floor(x / cell)); };
        std::unordered_multimap<std::int64_t, int> grid;
        auto grid_key = [](int cx, int cy) {
            return (static_cast<std::int64_t>(cx) << 32) ^
                   static_cast<std::uint32_t>(cy);
        };
        for (int s = 0; s + 1 < static_cast<int>(poly.size()); ++s) {
            const int x0 = cell_of(std::min(poly[s].x(), poly[s + 1].x()) - radius_px);
            const int x1 = cell_of(std::max(poly[s].x(), poly[s + 1].x()) + radius_px);
            const int y0 = cell_of(std::min(poly[s].y(), poly[s + 1].y()) - radius_px);
            const int y1 = cell_of(std::max(poly[s].y(), poly[s + 1].y()) + radius_px);
            for (int cy = y0; cy <= y1; ++cy)
                for (int cx = x0; cx <= x1; ++cx)
                    grid.emplace(grid_key(cx, cy), s);
        }

        int on = 0;
        int hit = 0;
        for (int v = 0; v < ref.height(); ++v) {
            for (int u = 0; u < ref.width(); ++u) {
                if (!ref.on(u, v)) continue;
                ++on;
                const Eigen::Vector2d p(u, v);
                const auto range = grid.equal_range(grid_key(cell_of(u), cell_of(v)));
                for (auto it = range.first; it != range.second; ++it) {
                    const int s = it->second;
                    if (point_segment_distance(p, poly[s], poly[s + 1]) <=
                        radius_px) {
                        ++hit;
                        break;
                    }
                }
            }
        }
        if (on == 0) throw MetricError("reference mask has no on-pixels");
        covered += static_cast<double>(hit) / on;
        total += 1.0;
    }
    return 100.0 * covered / total;
}

MaskMetrics mask_metrics(const Mask& predicted, const Mask& reference) {
    if (predicted.width() != reference.width() ||
        predicted.height() != reference.height())
        throw MetricError("mask sizes differ");
    long tp = 0;
    long fp = 0;
    long fn = 0;
    for (int v = 0; v < predicted.height(); ++v) {
        for (int u = 0; u < predicted.width(); ++u) {
            const bool p = predicted.on(u, v);
            const bool r = reference.on(u, v);
            tp += p && r;
            fp += p && !r;
            fn += !p && r;
        }
    }
    MaskMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.iou = tp + fp + fn > 0 ? static_cast<double>(tp) / (tp + fp + fn) : 0.0;
    return m;
}

namespace {

// Maps every trace pixel to the index of the nearest ground-truth path pixel
// within tol_px; -1 where nothing is close enough. Bucketed for speed.
std::vector<int> nearest_path_indices(const PixelTrace& trace,
                                      const std::vector<Pixel>& gt_path,
                                      double tol_px) {
    const int cell = std::max(2, static_cast<int>(std::ceil(tol_px)));
    std::unordered_multimap<std::int64_t, int> grid;
    auto key = [&](int u, int v) {
        return (static_cast<std::int64_t>(u / cell) << 32) ^
               static_cast<std::uint32_t>(v / cell + (1 << 20));
    };
    for (int i = 0; i < static_cast<int>(gt_path.size()); ++i)
        grid.emplace(key(gt_path[i].u, gt_path[i].v), i);

    std::vector<int> out;
    out.reserve(trace.points.size());
    const double tol2 = tol_px * tol_px;
    for (const Pixel& p : trace.points) {
        int best = -1;
        double best_d2 = tol2 + 1e-9;
        const int cu = p.u / cell;
        const int cv = p.v / cell;
        for (int dv = -1; dv <= 1; ++dv) {
            for (int du = -1; du <= 1; ++du) {
                const auto range = grid.equal_range(
                    (static_cast<std::int64_t>(cu + du) << 32) ^
                    static_cast<std::uint32_t>(cv + dv + (1 << 20)));
                for (auto it = range.first; it != range.second; ++it) {
                    const Pixel& q = gt_path[it->second];
                    const double d2 = static_cast<double>(q.u - p.u) * (q.u - p.u) +
                                      static_cast<double>(q.v - p.v) * (q.v - p.v);
                    if (d2 < best_d2 ||
                        (d2 == best_d2 && best >= 0 && it->second < best)) {
                        best_d2 = d2;
                        best = it->second;
                    }
                }
            }
        }
        out.push_back(best_d2 <= tol2 ? best : -1);
    }
    return out;
}

// Longest non-decreasing subsequence length, ignoring -1 entries.
int longest_monotone_run(const std::vector<int>& seq) {
    std::vector<int> tails;
    for (int x : seq) {
        if (x < 0) continue;
        auto it = std::upper_bound(tails.begin(), tails.end(), x);
        if (it == tails.end())
            tails.push_back(x);
        else
            *it = x;
    }
    return static_cast<int>(tails.size());
}

}  // namespace

double order_ratio(const PixelTrace& trace, const std::vector<Pixel>& gt_path,
                   double tol_px) {
    if (trace.empty() || gt_path.empty())
        throw MetricError("order ratio needs a non-empty trace and path");
    const auto mapped = nearest_path_indices(trace, gt_path, tol_px);
    const int forward = longest_monotone_run(mapped);
    std::vector<int> rev(mapped.rbegin(), mapped.rend());
    const int backward = longest_monotone_run(rev);
    return static_cast<double>(std::max(forward, backward)) / trace.size();
}

double path_coverage(const PixelTrace& trace,
                     const std::vector<Pixel>& gt_path, double tol_px) {
    if (trace.empty() || gt_path.empty())
        throw MetricError("path coverage needs a non-empty trace and path");
    // Symmetric of order_ratio's mapping: how many path pixels have a trace
    // pixel nearby.
    PixelTrace path_as_trace;
    path_as_trace.points = gt_path;
    const auto mapped = nearest_path_indices(path_as_trace, trace.points, tol_px);
    int hit = 0;
    for (int m : mapped) hit += m >= 0;
    return static_cast<double>(hit) / gt_path.size();
}

}  // namespace threadtrack
