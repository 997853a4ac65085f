#include <threadtrack/reconstruct3d.hpp>

#include <algorithm>
#include <cmath>

namespace threadtrack {

namespace {

Eigen::MatrixXd dedup_trace_points(const PixelTrace& trace) {
    std::vector<Pixel> pts;
    pts.reserve(trace.points.size());
    for (const Pixel& p : trace.points)
        if (pts.empty() || !(p == pts.back())) pts.push_back(p);
    Eigen::MatrixXd m(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = pts[i].u;
        m(static_cast<Eigen::Index>(i), 1) = pts[i].v;
    }
    return m;
}

struct ParamSample {
    double t = 0.0;
    double u = 0.0;
    double v = 0.0;
};

std::vector<ParamSample> sample_spline(const SplineCurve& c, int n) {
    std::vector<ParamSample> out(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        const Eigen::VectorXd p = c.evaluate(t);
        out[i] = {t, p(0), p(1)};
    }
    return out;
}

// Chord-parameterized polyline samples straight off the trace pixels; used
// for the cheap orientation probe where fitting a spline would be overkill.
std::vector<ParamSample> sample_trace(const std::vector<Pixel>& pts, int n) {
    std::vector<Eigen::Vector2d> dedup;
    for (const Pixel& p : pts) {
        const Eigen::Vector2d q(p.u, p.v);
        if (dedup.empty() || (q - dedup.back()).norm() > 0.0)
            dedup.push_back(q);
    }
    if (dedup.size() < 2) return {};
    std::vector<double> cum(dedup.size(), 0.0);
    for (std::size_t i = 1; i < dedup.size(); ++i)
        cum[i] = cum[i - 1] + (dedup[i] - dedup[i - 1]).norm();
    const double total = cum.back();

    std::vector<ParamSample> out(n);
    std::size_t seg = 0;
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / (n - 1);
        const double target = t * total;
        while (seg + 2 < dedup.size() && cum[seg + 1] < target) ++seg;
        const double span = cum[seg + 1] - cum[seg];
        const double a = span > 0.0 ? (target - cum[seg]) / span : 0.0;
        const Eigen::Vector2d p = dedup[seg] + a * (dedup[seg + 1] - dedup[seg]);
        out[k] = {t, p.x(), p.y()};
    }
    return out;
}

std::vector<MatchedPair> greedy_match(const std::vector<ParamSample>& left,
                                      const std::vector<ParamSample>& right,
                                      double vertical_tol, double max_dt) {
    std::vector<MatchedPair> out;
    int last_j = -1;
    for (const ParamSample& l : left) {
        int best_j = -1;
        double best_abs_dt = std::numeric_limits<double>::infinity();
        for (int j = last_j + 1; j < static_cast<int>(right.size()); ++j) {
            const ParamSample& r = right[j];
            const double dt = r.t - l.t;
            if (dt > max_dt) break;  // right parameters only grow from here
            if (dt < -max_dt) continue;
            if (std::abs(l.v - r.v) > vertical_tol) continue;
            if (r.u > l.u) continue;  // would mean negative disparity
            if (std::abs(dt) < best_abs_dt) {
                best_abs_dt = std::abs(dt);
                best_j = j;
            }
        }
        if (best_j >= 0) {
            out.push_back({l.t, right[best_j].t,
                           PixelPoint{l.u, l.v},
                           PixelPoint{right[best_j].u, right[best_j].v}});
            last_j = best_j;
        }
    }
    return out;
}

}  // namespace

SplineCurve fit_trace_spline(const PixelTrace& trace, int n_control,
                             int degree) {
    Eigen::MatrixXd pts = dedup_trace_points(trace);
    if (pts.rows() < n_control)
        throw FitError("trace too short for the requested control count");
    return fit_least_squares(PolyLine::from_points(std::move(pts)), n_control,
                             degree);
}

std::vector<MatchedPair> match_stereo(const SplineCurve& left2d,
                                      const SplineCurve& right2d,
                                      const MatchConfig& cfg) {
    if (left2d.dimension() != 2 || right2d.dimension() != 2)
        throw DomainError("stereo matching expects 2D splines");
    const auto pairs =
        greedy_match(sample_spline(left2d, cfg.n_samples),
                     sample_spline(right2d, cfg.n_samples),
                     cfg.vertical_tolerance_px, cfg.max_param_offset);
    if (static_cast<int>(pairs.size()) < cfg.min_matches)
        throw MatchingFailedError(
            "only " + std::to_string(pairs.size()) +
            " consistent stereo pairs (need " +
            std::to_string(cfg.min_matches) + ")");
    return pairs;
}

std::pair<PixelTrace, PixelTrace> canonical_orientation(
    const PixelTrace& left, const PixelTrace& right, const MatchConfig& cfg) {
    constexpr int kProbeSamples = 32;
    const auto ls = sample_trace(left.points, kProbeSamples);
    auto rs = sample_trace(right.points, kProbeSamples);
    if (ls.empty() || rs.empty()) return {left, right};

    const std::size_t as_is =
        greedy_match(ls, rs, cfg.vertical_tolerance_px, cfg.max_param_offset)
            .size();

    std::reverse(rs.begin(), rs.end());
    for (auto& s : rs) s.t = 1.0 - s.t;
    const std::size_t flipped =
        greedy_match(ls, rs, cfg.vertical_tolerance_px, cfg.max_param_offset)
            .size();

    if (flipped > as_is) {
        PixelTrace rev = right;
        std::reverse(rev.points.begin(), rev.points.end());
        std::vector<int> bridged;
        for (int i : rev.bridged) bridged.push_back(rev.size() - 2 - i);
        std::sort(bridged.begin(), bridged.end());
        rev.bridged = std::move(bridged);
        return {left, rev};
    }
    return {left, right};
}

TraceResidual residual_against_traces(const SplineCurve& spline3d,
                                      const PixelTrace& left,
                                      const PixelTrace& right,
                                      const StereoRig& rig, int n_samples) {
    if (left.empty() || right.empty())
        throw MetricError("residual needs non-empty traces");

    auto nearest_px = [](const PixelTrace& tr, const PixelPoint& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const Pixel& q : tr.points) {
            const double du = q.u - p.u;
            const double dv = q.v - p.v;
            best = std::min(best, du * du + dv * dv);
        }
        return std::sqrt(best);
    };

    double sum = 0.0;
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const Eigen::Vector3d p = spline3d.evaluate(t);
        double dl;
        double dr;
        if (p.z() > 0.0) {
            const StereoProjection proj = project(rig, p);
            dl = nearest_px(left, proj.left);
            dr = nearest_px(right, proj.right);
        } else {
            // A sample behind the camera cannot reproject; make it count as a
            // gross outlier instead of crashing the quality check.
            dl = dr = 1e6;
        }
        sum += dl + dr;
        worst = std::max({worst, dl, dr});
    }
    return {sum / (2.0 * n_samples), worst};
}

Reconstruction reconstruct(const PixelTrace& left, const PixelTrace& right,
                           const StereoRig& rig, const MatchConfig& cfg) {
    const SplineCurve left2d = fit_trace_spline(left, cfg.n_control, cfg.degree);
    const SplineCurve right2d =
        fit_trace_spline(right, cfg.n_control, cfg.degree);

    const auto pairs = match_stereo(left2d, right2d, cfg);

    std::vector<Eigen::Vector3d> pts;
    pts.reserve(pairs.size());
    for (const MatchedPair& m : pairs)
        if (m.left.u - m.right.u > 0.0)
            pts.push_back(triangulate(rig, m.left, m.right));
    if (static_cast<int>(pts.size()) < cfg.min_matches)
        throw MatchingFailedError("too few triangulatable pairs");

    Eigen::MatrixXd m3(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
        m3.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();

    Reconstruction rec;
    rec.spline3d = fit_least_squares(PolyLine::from_points(std::move(m3)),
                                     cfg.n_control, cfg.degree);
    rec.matches = pairs;
    const TraceResidual res =
        residual_against_traces(rec.spline3d, left, right, rig, cfg.n_samples);
    rec.quality_px = res.mean_px;
    rec.max_px = res.max_px;
    if (rec.quality_px > cfg.reject_threshold_px)
        throw ReconstructionRejectedError(
            "reconstruction residual " + std::to_string(rec.quality_px) +
                " px exceeds the rejection threshold",
            rec.quality_px);
    return rec;
}

}  // namespace threadtrack
