#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <threadtrack/error.hpp>
#include <threadtrack/geometry.hpp>
#include <threadtrack/tailshorten.hpp>

using namespace threadtrack;

namespace {

SplineCurve straight3d(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    Eigen::MatrixXd cp(2, 3);
    cp.row(0) = a;
    cp.row(1) = b;
    return SplineCurve::clamped_uniform(1, cp);
}

/// Two straight legs meeting at a bend of the given angle, densely sampled
/// and refit so the corner is smooth. The second leg ends at t = 1.
SplineCurve bent_curve(double bend_deg, double leg_m = 0.05) {
    const double a = bend_deg * std::numbers::pi / 180.0;
    const Eigen::Vector3d d1(1.0, 0.0, 0.0);
    const Eigen::Vector3d d2(std::cos(a), std::sin(a), 0.0);

    const int per_leg = 150;
    Eigen::MatrixXd pts(2 * per_leg + 1, 3);
    const Eigen::Vector3d corner(0.0, 0.0, 0.5);
    for (int i = 0; i <= per_leg; ++i)
        pts.row(i) = corner - (1.0 - static_cast<double>(i) / per_leg) * leg_m * d1;
    for (int i = 1; i <= per_leg; ++i)
        pts.row(per_leg + i) = corner + (static_cast<double>(i) / per_leg) * leg_m * d2;
    return fit_least_squares(PolyLine::from_points(pts), 48, 3);
}

}  // namespace

TEST_CASE("the needle end is the endpoint nearer the camera") {
    const SplineCurve toward_one =
        straight3d({0.0, 0.0, 0.60}, {0.02, 0.05, 0.40});
    CHECK(find_needle_end(toward_one) == NeedleEnd::at_one);
    CHECK(find_needle_end(toward_one.reversed()) == NeedleEnd::at_zero);

    const SplineCurve fixed = needle_at_one(toward_one.reversed());
    CHECK(fixed.evaluate(1.0)(2) < fixed.evaluate(0.0)(2));

    const SplineCurve flat = straight3d({0.0, 0.0, 0.5}, {0.1, 0.0, 0.5});
    CHECK_THROWS_AS(find_needle_end(flat), AmbiguousEndError);

    Eigen::MatrixXd cp2(2, 2);
    cp2 << 0, 0, 1, 1;
    CHECK_THROWS_AS(find_needle_end(SplineCurve::clamped_uniform(1, cp2)),
                    DomainError);
}

TEST_CASE("a straight thread is taut over its whole length") {
    const SplineCurve line =
        straight3d({-0.05, 0.01, 0.55}, {0.03, -0.02, 0.45});
    const TautSegment taut = find_taut_segment(line);
    CHECK(taut.t_lo == 0.0);
    CHECK(taut.t_hi == 1.0);

    const Eigen::Vector3d expect =
        (Eigen::Vector3d(0.03, -0.02, 0.45) - Eigen::Vector3d(-0.05, 0.01, 0.55))
            .normalized();
    CHECK(taut.direction.dot(expect) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a continuously curling thread has no taut run") {
    // Two full turns: the tangent never stays within the spread tolerance
    // for the minimum run.
    const int n = 400;
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        pts.row(i) = Eigen::Vector3d(0.03 * std::cos(4.0 * std::numbers::pi * s),
                                     0.03 * std::sin(4.0 * std::numbers::pi * s),
                                     0.5);
    }
    const SplineCurve coil = fit_least_squares(PolyLine::from_points(pts), 64, 3);
    CHECK_THROWS_AS(find_taut_segment(coil), NotTautError);
}

TEST_CASE("the extraction point sits at the sharp bend") {
    const SplineCurve bent = bent_curve(100.0);
    const TautSegment taut = find_taut_segment(bent);
    CHECK(taut.t_lo > 0.45);
    CHECK(taut.t_lo < 0.60);

    const double t_ext = find_extraction_point(bent, taut);
    CHECK(t_ext < taut.t_lo);
    CHECK(t_ext == doctest::Approx(0.5).epsilon(0.08));

    // Arc length below the bend is the tail, one leg long here.
    CHECK(tail_length(bent, t_ext) == doctest::Approx(0.05).epsilon(0.08));
}

TEST_CASE("a gentle bend below the taut run is not an extraction point") {
    const SplineCurve gentle = bent_curve(30.0);
    // The 30 degree bend ends the taut run but never crosses the sharp
    // threshold, so there is no extraction point anywhere below it.
    const TautSegment taut = find_taut_segment(gentle);
    CHECK_THROWS_AS(find_extraction_point(gentle, taut),
                    ExtractionNotFoundError);
}

TEST_CASE("a fully straight thread has no extraction point") {
    const SplineCurve line = straight3d({0.0, 0.0, 0.6}, {0.05, 0.0, 0.45});
    const TautSegment taut = find_taut_segment(line);
    CHECK_THROWS_AS(find_extraction_point(line, taut),
                    ExtractionNotFoundError);
}

TEST_CASE("the scene frame is orthonormal and the pull stays in-plane") {
    const SimState s = make_tail_scene(11);
    CHECK(s.table_x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.table_y.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.table_up.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.table_x.dot(s.table_y)) < 1e-12);
    CHECK(std::abs(s.table_x.dot(s.table_up)) < 1e-12);
    CHECK(std::abs(s.table_y.dot(s.table_up)) < 1e-12);
    CHECK(s.table_up.z() < 0.0);  // toward the camera
    CHECK(s.pull_dir.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.pull_dir.dot(s.table_up)) < 1e-12);

    CHECK(s.tail_len_m >= 0.12);
    CHECK(s.tail_len_m <= 0.16);

    const SimState again = make_tail_scene(11);
    CHECK(again.tail_len_m == s.tail_len_m);
    CHECK(again.wiggle_phase_rad == s.wiggle_phase_rad);
    CHECK(make_tail_scene(12).tail_len_m != s.tail_len_m);
}

TEST_CASE("the ground-truth thread has exactly the simulated length") {
    const SimState s = make_tail_scene(19);
    const PolyLine thread = s.gt_thread();
    CHECK(thread.length() ==
          doctest::Approx(s.taut_len_m + s.tail_len_m).epsilon(1e-9));

    // The needle end is the first sample and floats above the table.
    const Eigen::Vector3d needle = thread.points.row(0).transpose();
    CHECK((needle - s.gripper()).norm() < 1e-12);
    CHECK(needle.z() < s.suture_point.z() - 0.04);
}

TEST_CASE("pulls conserve thread and report running out") {
    SimState s = make_tail_scene(23);
    const double total = s.taut_len_m + s.tail_len_m;
    const double tail0 = s.tail_len_m;

    CHECK_FALSE(s.advance_pull(0.005));
    CHECK(s.tail_len_m == doctest::Approx(tail0 - 0.005).epsilon(1e-12));
    CHECK(s.taut_len_m + s.tail_len_m == doctest::Approx(total).epsilon(1e-12));
    CHECK(s.pulled_len_m == doctest::Approx(0.005).epsilon(1e-12));

    s.tail_len_m = 0.004;
    CHECK(s.advance_pull(0.005));
    CHECK(s.tail_len_m == 0.0);

    CHECK_THROWS_AS(s.advance_pull(0.0), DomainError);
}

TEST_CASE("measuring the ground-truth thread recovers the tail length") {
    for (std::uint64_t seed : {4ULL, 5ULL, 6ULL}) {
        const SimState s = make_tail_scene(seed);
        const SplineCurve spline = fit_least_squares(s.gt_thread(), 32, 3);
        const TailMeasurement m = measure_tail(spline);
        CHECK(m.taut.t_hi == 1.0);
        CHECK(m.t_extraction < m.taut.t_lo);
        CHECK(std::abs(m.tail_m - s.tail_len_m) < 0.005);
    }
}

TEST_CASE("the noise-free servo loop stops inside the success band") {
    SimState state = make_tail_scene(3);
    const double tail0 = state.tail_len_m;

    const TrialReport report = run_servo(state);
    CHECK(report.success);
    CHECK_FALSE(report.overshoot);
    CHECK_FALSE(report.gave_up);
    CHECK(report.perception_failures == 0);
    CHECK(report.abs_error_m <= 0.01);
    CHECK(report.frames_rendered == report.pulls + 1);

    const int expected_pulls =
        static_cast<int>(std::ceil((tail0 - 0.03 - 0.0025) / 0.005));
    CHECK(report.pulls >= expected_pulls - 2);
    CHECK(report.pulls <= expected_pulls + 2);
}

TEST_CASE("identical seeds replay the identical trial") {
    SimState a = make_tail_scene(8);
    SimState b = make_tail_scene(8);
    const TrialReport ra = run_servo(a);
    const TrialReport rb = run_servo(b);
    CHECK(ra.success == rb.success);
    CHECK(ra.pulls == rb.pulls);
    CHECK(ra.frames_rendered == rb.frames_rendered);
    CHECK(ra.perception_failures == rb.perception_failures);
    CHECK(ra.measured_tail_m == rb.measured_tail_m);
    CHECK(ra.final_tail_m == rb.final_tail_m);
}
