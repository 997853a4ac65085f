#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <threadtrack/error.hpp>
#include <threadtrack/reconstruct3d.hpp>
#include <threadtrack/synth.hpp>
#include <threadtrack/trace2d.hpp>

#include "oracles.hpp"

using namespace threadtrack;

namespace {

PixelTrace make_trace(std::vector<Pixel> pts, ImageSide side) {
    PixelTrace t;
    t.points = std::move(pts);
    t.side = side;
    return t;
}

/// Smooth curve sweeping left to right half a metre in front of the rig.
SplineCurve bench_curve3d() {
    Eigen::MatrixXd cp(6, 3);
    cp << -0.12, -0.02, 0.50,
          -0.06,  0.03, 0.47,
          -0.01, -0.04, 0.52,
           0.04,  0.04, 0.55,
           0.08, -0.03, 0.48,
           0.13,  0.02, 0.53;
    return SplineCurve::clamped_uniform(3, cp);
}

PixelTrace project_to_trace(const SplineCurve& c3d, const StereoRig& rig,
                            ImageSide side, int n, double v_shift = 0.0) {
    std::vector<Pixel> px;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd p = c3d.evaluate(static_cast<double>(i) / (n - 1));
        const StereoProjection proj =
            project(rig, Eigen::Vector3d(p(0), p(1), p(2)));
        const PixelPoint& pp = side == ImageSide::right ? proj.right : proj.left;
        const Pixel q{static_cast<int>(std::lround(pp.u)),
                      static_cast<int>(std::lround(pp.v + v_shift))};
        if (px.empty() || !(q == px.back())) px.push_back(q);
    }
    return make_trace(std::move(px), side);
}

}  // namespace

TEST_CASE("trace spline fit pins endpoints and follows a straight trace") {
    std::vector<Pixel> pts;
    for (int i = 0; i < 120; ++i) pts.push_back({10 + i, 20 + i});
    const PixelTrace trace = make_trace(pts, ImageSide::left);

    const SplineCurve fit = fit_trace_spline(trace, 8, 3);
    CHECK(fit.dimension() == 2);
    CHECK(fit.num_control() == 8);
    CHECK(fit.evaluate(0.0)(0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(fit.evaluate(0.0)(1) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(fit.evaluate(1.0)(0) == doctest::Approx(129.0).epsilon(1e-9));
    for (int i = 0; i <= 50; ++i) {
        const Eigen::VectorXd p = fit.evaluate(i / 50.0);
        CHECK(std::abs(p(1) - (p(0) + 10.0)) < 1e-6);
    }
}

TEST_CASE("trace spline fit refuses traces shorter than the control count") {
    std::vector<Pixel> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({i, i});
    CHECK_THROWS_AS(fit_trace_spline(make_trace(pts, ImageSide::left), 32, 3),
                    FitError);
}

TEST_CASE("every matched pair satisfies the four pairing conditions") {
    const SplineCurve c3d = bench_curve3d();
    const StereoRig rig;
    const SplineCurve left2d =
        fit_trace_spline(project_to_trace(c3d, rig, ImageSide::left, 400));
    const SplineCurve right2d =
        fit_trace_spline(project_to_trace(c3d, rig, ImageSide::right, 400));

    const MatchConfig cfg;
    const auto pairs = match_stereo(left2d, right2d, cfg);
    CHECK(static_cast<int>(pairs.size()) >= cfg.min_matches);

    double prev_t_right = -1.0;
    for (const MatchedPair& m : pairs) {
        CHECK(std::abs(m.left.v - m.right.v) <= cfg.vertical_tolerance_px + 1e-9);
        CHECK(m.right.u <= m.left.u + 1e-9);
        CHECK(m.t_right > prev_t_right);
        CHECK(std::abs(m.t_right - m.t_left) <= cfg.max_param_offset + 1e-9);
        prev_t_right = m.t_right;
    }
}

TEST_CASE("a vertical offset beyond the tolerance fails the matcher") {
    const SplineCurve c3d = bench_curve3d();
    const StereoRig rig;
    const SplineCurve left2d =
        fit_trace_spline(project_to_trace(c3d, rig, ImageSide::left, 400));
    const SplineCurve shifted =
        fit_trace_spline(project_to_trace(c3d, rig, ImageSide::right, 400, 6.5));
    CHECK_THROWS_AS(match_stereo(left2d, shifted), MatchingFailedError);
}

TEST_CASE("canonical orientation flips a reversed right trace back") {
    const SplineCurve c3d = bench_curve3d();
    const StereoRig rig;
    const PixelTrace left = project_to_trace(c3d, rig, ImageSide::left, 400);
    const PixelTrace right = project_to_trace(c3d, rig, ImageSide::right, 400);

    PixelTrace reversed = right;
    std::reverse(reversed.points.begin(), reversed.points.end());

    const auto [l_fixed, r_fixed] = canonical_orientation(left, reversed);
    CHECK(r_fixed.front() == right.front());
    CHECK(r_fixed.back() == right.back());
    CHECK(l_fixed.points == left.points);

    const auto [l_keep, r_keep] = canonical_orientation(left, right);
    CHECK(r_keep.points == right.points);
}

TEST_CASE("trace residual grows when the curve is displaced sideways") {
    const SplineCurve c3d = bench_curve3d();
    const StereoRig rig;
    const PixelTrace left = project_to_trace(c3d, rig, ImageSide::left, 600);
    const PixelTrace right = project_to_trace(c3d, rig, ImageSide::right, 600);

    const TraceResidual base = residual_against_traces(c3d, left, right, rig);
    CHECK(base.mean_px < 0.8);  // rounding to the pixel grid only
    CHECK(base.max_px < 1.5);

    Eigen::MatrixXd cp = c3d.control_points();
    cp.col(1).array() += 3.0 * 0.5 / rig.focal_px;  // ~3 px at 0.5 m depth
    const SplineCurve moved = SplineCurve::clamped_uniform(3, cp);
    const TraceResidual off = residual_against_traces(moved, left, right, rig);
    CHECK(off.mean_px > base.mean_px + 1.0);
}

TEST_CASE("a clean synthetic scene reconstructs to sub-pixel residual") {
    SceneSpec spec;
    spec.family = CurveFamily::sine;
    spec.seed = 21;
    const ScenePair scene = generate(spec);

    const PixelTrace raw_left = trace(scene.left_detection);
    const PixelTrace raw_right = trace(scene.right_detection);
    const auto [left, right] = canonical_orientation(raw_left, raw_right);

    const Reconstruction rec = reconstruct(left, right, spec.rig);
    CHECK(rec.spline3d.dimension() == 3);
    CHECK(static_cast<int>(rec.matches.size()) >= 50);
    CHECK(rec.quality_px <= 1.5);
    CHECK(rec.max_px < 8.0);

    // The recovered curve should track the ground truth to a few millimetres.
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const Eigen::VectorXd p = rec.spline3d.evaluate(i / 100.0);
        double best = 1e9;
        for (int r = 0; r < scene.gt_curve.size(); ++r)
            best = std::min(best,
                            (scene.gt_curve.points.row(r).transpose() - p).norm());
        worst = std::max(worst, best);
    }
    CHECK(worst < 0.01);
}

TEST_CASE("reconstruction rejects frames whose residual exceeds the gate") {
    SceneSpec spec;
    spec.family = CurveFamily::sine;
    spec.seed = 21;
    const ScenePair scene = generate(spec);
    const auto [left, right] = canonical_orientation(trace(scene.left_detection),
                                                     trace(scene.right_detection));

    MatchConfig strict;
    strict.reject_threshold_px = 0.05;
    bool threw = false;
    try {
        reconstruct(left, right, spec.rig, strict);
    } catch (const ReconstructionRejectedError& e) {
        threw = true;
        CHECK(e.residual_px > strict.reject_threshold_px);
        CHECK(e.residual_px < 4.0);
    }
    CHECK(threw);
}

TEST_CASE("reconstruction propagates fit failures from tiny traces") {
    std::vector<Pixel> tiny;
    for (int i = 0; i < 12; ++i) tiny.push_back({100 + i, 200});
    const PixelTrace left = make_trace(tiny, ImageSide::left);
    PixelTrace right = left;
    right.side = ImageSide::right;
    for (Pixel& p : right.points) p.u -= 60;
    CHECK_THROWS_AS(reconstruct(left, right, StereoRig{}), FitError);
}
