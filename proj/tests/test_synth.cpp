#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <threadtrack/error.hpp>
#include <threadtrack/eval.hpp>
#include <threadtrack/synth.hpp>

#include "oracles.hpp"

using namespace threadtrack;

namespace {

SceneSpec plain_spec(CurveFamily family, std::uint64_t seed) {
    SceneSpec spec;
    spec.family = family;
    spec.seed = seed;
    return spec;
}

/// Pixels the degradation added (should only ever be clutter).
Mask added_pixels(const Mask& detection, const Mask& gt) {
    Mask out(detection.width(), detection.height());
    for (int v = 0; v < out.height(); ++v)
        for (int u = 0; u < out.width(); ++u)
            if (detection.on(u, v) && !gt.on(u, v)) out.at(u, v) = 255;
    return out;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.array() == b.array()).all();
}

Mask removed_pixels(const Mask& detection, const Mask& gt) {
    Mask out(detection.width(), detection.height());
    for (int v = 0; v < out.height(); ++v)
        for (int u = 0; u < out.width(); ++u)
            if (gt.on(u, v) && !detection.on(u, v)) out.at(u, v) = 255;
    return out;
}

}  // namespace

TEST_CASE("seeded rng and seed mixing are stable") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(a.uniform(3.0, 5.0) >= 3.0);
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(2, 1) != mix_seed(1, 2));
}

TEST_CASE("generation is bit-identical for a fixed seed") {
    SceneSpec spec = plain_spec(CurveFamily::sine, 7);
    spec.noise.gap_count = 2;
    spec.noise.gap_len_px = 6;
    spec.noise.speckle_count = 15;
    spec.noise.speckle_max_px = 8;
    spec.noise.dropout_prob = 0.05;

    const ScenePair a = generate(spec);
    const ScenePair b = generate(spec);
    CHECK(a.left_gt == b.left_gt);
    CHECK(a.right_gt == b.right_gt);
    CHECK(a.left_detection == b.left_detection);
    CHECK(a.right_detection == b.right_detection);
    CHECK(same_matrix(a.gt_curve.points, b.gt_curve.points));
    REQUIRE(a.left_gt_path.size() == b.left_gt_path.size());
    for (std::size_t i = 0; i < a.left_gt_path.size(); ++i) {
        CHECK(a.left_gt_path[i].u == b.left_gt_path[i].u);
        CHECK(a.left_gt_path[i].v == b.left_gt_path[i].v);
    }
}

TEST_CASE("clean line scene is a single stroke in both images") {
    const ScenePair scene = generate(plain_spec(CurveFamily::line, 3));
    for (const Mask* m : {&scene.left_detection, &scene.right_detection}) {
        std::vector<int> areas;
        label_components(*m, &areas);
        CHECK(areas.size() == 1);
    }
    CHECK(scene.left_detection == scene.left_gt);
    CHECK(scene.right_detection == scene.right_gt);
}

TEST_CASE("clean masks track the projected centerline both ways") {
    for (CurveFamily family : {CurveFamily::arc, CurveFamily::loop}) {
        const ScenePair scene = generate(plain_spec(family, 11));
        const SceneSpec spec = plain_spec(family, 11);
        const double bound = spec.stroke_width_px / 2.0 + 1.0;

        Mask path_mask(scene.left_gt.width(), scene.left_gt.height());
        for (const Pixel& p : scene.left_gt_path) path_mask.at(p.u, p.v) = 255;
        const auto path_ft = feature_transform(path_mask);
        const auto stroke_ft = feature_transform(scene.left_gt);

        for (int v = 0; v < scene.left_gt.height(); ++v)
            for (int u = 0; u < scene.left_gt.width(); ++u) {
                if (scene.left_gt.on(u, v))
                    CHECK(path_ft.distance(u, v) <= bound);
                if (path_mask.on(u, v))
                    CHECK(stroke_ft.distance(u, v) <= bound);
            }
    }
}

TEST_CASE("ground truth rows agree across the rectified pair") {
    const ScenePair scene = generate(plain_spec(CurveFamily::sine, 5));
    auto v_range = [](const std::vector<Pixel>& path) {
        int lo = 1 << 30, hi = -(1 << 30);
        for (const Pixel& p : path) {
            lo = std::min(lo, p.v);
            hi = std::max(hi, p.v);
        }
        return std::pair{lo, hi};
    };
    const auto [llo, lhi] = v_range(scene.left_gt_path);
    const auto [rlo, rhi] = v_range(scene.right_gt_path);
    CHECK(std::abs(llo - rlo) <= 1);
    CHECK(std::abs(lhi - rhi) <= 1);
}

TEST_CASE("gap degradation removes the requested runs") {
    SceneSpec spec = plain_spec(CurveFamily::arc, 13);
    spec.noise.gap_count = 3;
    spec.noise.gap_len_px = 8;
    const ScenePair scene = generate(spec);

    for (auto [det, gt] : {std::pair{&scene.left_detection, &scene.left_gt},
                           std::pair{&scene.right_detection, &scene.right_gt}}) {
        const Mask carved = removed_pixels(*det, *gt);
        std::vector<int> areas;
        label_components(carved, &areas);
        CHECK(areas.size() == 3);
        CHECK(added_pixels(*det, *gt).count_on() == 0);
    }
}

TEST_CASE("speckle stays far from the stroke and under the size cap") {
    SceneSpec spec = plain_spec(CurveFamily::sine, 17);
    spec.noise.speckle_count = 50;
    spec.noise.speckle_max_px = 10;
    const ScenePair scene = generate(spec);

    for (auto [det, gt] : {std::pair{&scene.left_detection, &scene.left_gt},
                           std::pair{&scene.right_detection, &scene.right_gt}}) {
        const Mask specks = added_pixels(*det, *gt);
        std::vector<int> areas;
        label_components(specks, &areas);
        CHECK(areas.size() == 50);
        for (int a : areas) {
            CHECK(a >= 1);
            CHECK(a <= 9);
        }
        const auto gt_ft = feature_transform(*gt);
        for (int v = 0; v < specks.height(); ++v)
            for (int u = 0; u < specks.width(); ++u)
                if (specks.on(u, v)) CHECK(gt_ft.distance(u, v) > 10.0);
    }
}

TEST_CASE("dropout erases roughly the requested fraction") {
    SceneSpec spec = plain_spec(CurveFamily::line, 19);
    spec.noise.dropout_prob = 0.2;
    const ScenePair scene = generate(spec);
    const int total = scene.left_gt.count_on();
    const int removed = removed_pixels(scene.left_detection, scene.left_gt)
                            .count_on();
    CHECK(removed > 0.1 * total);
    CHECK(removed < 0.3 * total);
}

TEST_CASE("hold sequences repeat the ground truth") {
    const Sequence seq =
        generate_sequence(plain_spec(CurveFamily::arc, 23), Trajectory::hold, 5);
    REQUIRE(seq.frames.size() == 5);
    for (const ScenePair& f : seq.frames) {
        CHECK(same_matrix(f.gt_curve.points, seq.frames[0].gt_curve.points));
        CHECK(f.left_gt == seq.frames[0].left_gt);
    }
}

TEST_CASE("translate sequences glide two pixels per frame") {
    const Sequence seq = generate_sequence(plain_spec(CurveFamily::sine, 29),
                                           Trajectory::translate, 6);
    REQUIRE(seq.frames.size() == 6);
    auto centroid_u = [](const std::vector<Pixel>& path) {
        double sum = 0;
        for (const Pixel& p : path) sum += p.u;
        return sum / path.size();
    };
    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        const double step = centroid_u(seq.frames[i].left_gt_path) -
                            centroid_u(seq.frames[i - 1].left_gt_path);
        CHECK(step == doctest::Approx(2.0).epsilon(0.15));
        // Pure sideways translation, no depth change.
        CHECK(seq.frames[i].gt_curve.points.col(2).minCoeff() ==
              doctest::Approx(seq.frames[0].gt_curve.points.col(2).minCoeff())
                  .epsilon(1e-12));
    }
}

TEST_CASE("loop sequences cross themselves and stay continuous") {
    SceneSpec spec = plain_spec(CurveFamily::loop, 31);
    spec.loop_morph = 1.0;
    const Sequence seq = generate_sequence(spec, Trajectory::loop_morph, 10);
    REQUIRE(seq.frames.size() == 10);

    bool any_crossing = false;
    for (const ScenePair& f : seq.frames)
        if (polyline_self_intersects(project_polyline(f.gt_curve, spec.rig, true)))
            any_crossing = true;
    CHECK(any_crossing);

    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        const auto& prev = seq.frames[i - 1].gt_curve.points;
        const auto& cur = seq.frames[i].gt_curve.points;
        REQUIRE(prev.rows() == cur.rows());
        const double worst = (cur - prev).rowwise().norm().maxCoeff();
        CHECK(worst <= 0.03);
    }
}

TEST_CASE("impossible scenes are rejected") {
    SceneSpec spec = plain_spec(CurveFamily::sine, 37);
    spec.depth_near_m = 0.02;  // huge projected extent, cannot fit
    spec.depth_far_m = 0.025;
    CHECK_THROWS_AS(generate(spec), SceneError);

    SceneSpec bad = plain_spec(CurveFamily::sine, 37);
    bad.depth_near_m = 0.7;
    bad.depth_far_m = 0.5;  // inverted range
    CHECK_THROWS_AS(generate(bad), SceneError);
}

TEST_CASE("random spline family varies with the seed") {
    const ScenePair a = generate(plain_spec(CurveFamily::random_spline, 1));
    const ScenePair b = generate(plain_spec(CurveFamily::random_spline, 2));
    CHECK_FALSE(a.left_gt == b.left_gt);
}
