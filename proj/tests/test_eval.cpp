#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <threadtrack/error.hpp>
#include <threadtrack/eval.hpp>
#include <threadtrack/synth.hpp>

#include "oracles.hpp"

using namespace threadtrack;

namespace {

/// Straight 3D segment at constant depth, plus the masks it projects onto.
struct Fixture {
    SplineCurve spline;
    Mask left;
    Mask right;
    StereoRig rig;
};

Fixture straight_fixture(double depth_m, int stroke_radius) {
    Fixture f;
    f.rig = StereoRig{};
    Eigen::MatrixXd cp(2, 3);
    cp << -0.10, 0.0, depth_m,
           0.10, 0.0, depth_m;
    f.spline = SplineCurve::clamped_uniform(1, cp);
    f.left = Mask(f.rig.image_width, f.rig.image_height);
    f.right = Mask(f.rig.image_width, f.rig.image_height);
    for (int i = 0; i <= 2000; ++i) {
        const Eigen::VectorXd p = f.spline.evaluate(i / 2000.0);
        const StereoProjection proj =
            project(f.rig, Eigen::Vector3d(p(0), p(1), p(2)));
        oracle::stamp_disk(f.left, std::lround(proj.left.u),
                           std::lround(proj.left.v), stroke_radius);
        oracle::stamp_disk(f.right, std::lround(proj.right.u),
                           std::lround(proj.right.v), stroke_radius);
    }
    return f;
}

SplineCurve shifted_y(const SplineCurve& s, double dy) {
    Eigen::MatrixXd cp = s.control_points();
    cp.col(1).array() += dy;
    return SplineCurve::clamped_uniform(s.degree(), cp);
}

PixelTrace trace_of(std::vector<Pixel> pts) {
    PixelTrace t;
    t.points = std::move(pts);
    t.side = ImageSide::left;
    return t;
}

}  // namespace

TEST_CASE("reprojection error is zero on the curve's own stroke") {
    const Fixture f = straight_fixture(0.5, 1);
    const ReprojectionResult r =
        reprojection_error(f.spline, f.left, f.right, f.rig);
    CHECK(r.mean_px < 0.75);
    CHECK(r.max_px <= 1.5);
}

TEST_CASE("reprojection error reports a known sideways offset") {
    const Fixture f = straight_fixture(0.5, 1);
    // 5 px down in the image is dy = 5 z / f; the stroke is one pixel wide
    // on each side of the centerline, which absorbs one pixel of the offset.
    const SplineCurve moved = shifted_y(f.spline, 5.0 * 0.5 / f.rig.focal_px);
    const ReprojectionResult r =
        reprojection_error(moved, f.left, f.right, f.rig);
    CHECK(r.mean_px == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("reprojection error is direction-agnostic") {
    const Fixture f = straight_fixture(0.5, 1);
    const SplineCurve moved = shifted_y(f.spline, 5.0 * 0.5 / f.rig.focal_px);
    const ReprojectionResult fwd =
        reprojection_error(moved, f.left, f.right, f.rig);
    const ReprojectionResult rev =
        reprojection_error(moved.reversed(), f.left, f.right, f.rig);
    CHECK(fwd.mean_px == doctest::Approx(rev.mean_px).epsilon(1e-9));
    CHECK(fwd.max_px == doctest::Approx(rev.max_px).epsilon(1e-9));
}

TEST_CASE("reprojection error refuses empty references") {
    const Fixture f = straight_fixture(0.5, 1);
    const Mask blank(f.rig.image_width, f.rig.image_height);
    CHECK_THROWS_AS(reprojection_error(f.spline, blank, f.right, f.rig),
                    MetricError);
}

TEST_CASE("coverage counts the fraction of the stroke near the curve") {
    const Fixture f = straight_fixture(0.5, 1);
    CHECK(coverage_pct(f.spline, f.left, f.right, f.rig) ==
          doctest::Approx(100.0).epsilon(0.01));

    // A curve spanning only half the segment leaves half the stroke far away.
    Eigen::MatrixXd cp(2, 3);
    cp << -0.10, 0.0, 0.5,
           0.00, 0.0, 0.5;
    const SplineCurve half = SplineCurve::clamped_uniform(1, cp);
    const double half_cov = coverage_pct(half, f.left, f.right, f.rig);
    CHECK(half_cov > 40.0);
    CHECK(half_cov < 60.0);
}

TEST_CASE("mask metrics on identical, empty and dilated predictions") {
    Mask ref(64, 48);
    oracle::stamp_segment(ref, 5, 10, 55, 30, 1);

    const MaskMetrics same = mask_metrics(ref, ref);
    CHECK(same.precision == doctest::Approx(1.0));
    CHECK(same.recall == doctest::Approx(1.0));
    CHECK(same.iou == doctest::Approx(1.0));

    const Mask empty(64, 48);
    const MaskMetrics none = mask_metrics(empty, ref);
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.iou == 0.0);

    Mask fat(64, 48);
    oracle::stamp_segment(fat, 5, 10, 55, 30, 3);
    const MaskMetrics dilated = mask_metrics(fat, ref);
    CHECK(dilated.recall == doctest::Approx(1.0));
    CHECK(dilated.precision < 1.0);
    CHECK(dilated.iou < 1.0);
    CHECK(dilated.iou == doctest::Approx(dilated.precision).epsilon(1e-9));
}

TEST_CASE("order ratio rewards both traversal directions and not shuffles") {
    std::vector<Pixel> path;
    for (int i = 0; i < 150; ++i) path.push_back({20 + i, 40 + i / 3});

    CHECK(order_ratio(trace_of(path), path) == doctest::Approx(1.0));

    std::vector<Pixel> rev(path.rbegin(), path.rend());
    CHECK(order_ratio(trace_of(rev), path) == doctest::Approx(1.0));

    std::vector<Pixel> shuffled = path;
    std::mt19937_64 rng(99);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(order_ratio(trace_of(shuffled), path) < 0.5);
}

TEST_CASE("order ratio matches a longest-monotone-run oracle") {
    std::vector<Pixel> path;
    for (int i = 0; i < 100; ++i) path.push_back({10 + 2 * i, 60});

    // Trace visiting path indices in a known scrambled order, far apart so
    // each trace pixel maps to exactly one path index.
    const std::vector<int> visit = {0, 4, 2, 8, 6, 12, 10, 16, 14, 20,
                                    18, 24, 22, 28, 26, 32, 30, 36, 34, 40};
    std::vector<Pixel> pts;
    for (int idx : visit) pts.push_back(path[idx]);

    const int expect = oracle::longest_monotone_subsequence(visit);
    CHECK(order_ratio(trace_of(pts), path) ==
          doctest::Approx(static_cast<double>(expect) / visit.size()));
}

TEST_CASE("order ratio ignores pixels far from the path") {
    std::vector<Pixel> path;
    for (int i = 0; i < 80; ++i) path.push_back({10 + i, 50});
    std::vector<Pixel> pts = path;
    pts.push_back({200, 400});  // clutter far beyond tol
    const double r = order_ratio(trace_of(pts), path);
    CHECK(r == doctest::Approx(80.0 / 81.0));
}

TEST_CASE("path coverage sees how much of the path the trace visits") {
    std::vector<Pixel> path;
    for (int i = 0; i < 120; ++i) path.push_back({30 + i, 90});

    CHECK(path_coverage(trace_of(path), path) == doctest::Approx(1.0));

    std::vector<Pixel> half(path.begin(), path.begin() + 60);
    const double c = path_coverage(trace_of(half), path);
    CHECK(c > 0.45);
    CHECK(c < 0.60);

    CHECK(path_coverage(trace_of({{500, 500}}), path) == 0.0);
}

TEST_CASE("metrics reject degenerate inputs") {
    const Fixture f = straight_fixture(0.5, 1);
    CHECK_THROWS_AS(order_ratio(trace_of({}), {{1, 1}}), MetricError);
    CHECK_THROWS_AS(order_ratio(trace_of({{1, 1}}), {}), MetricError);
    CHECK_THROWS_AS(coverage_pct(f.spline, Mask(4, 4), Mask(4, 4), f.rig),
                    MetricError);
}
