#include <doctest.h>

#include <set>

#include <threadtrack/pipeline.hpp>

using namespace threadtrack;

TEST_CASE("the tier suite covers four tiers of ten scenes") {
    const auto specs = tier_suite_specs();
    REQUIRE(specs.size() == 40);

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const int tier = tier_of(i);
        CHECK(tier == static_cast<int>(i) / 10 + 1);

        const bool crossing = specs[i].family == CurveFamily::loop ||
                              specs[i].family == CurveFamily::tangle;
        CHECK(crossing == (tier == 2 || tier == 4));

        // Heavier clutter on the upper tiers, same gaps everywhere.
        CHECK(specs[i].noise.gap_count == 3);
        CHECK(specs[i].noise.gap_len_px == 8);
        CHECK(specs[i].noise.speckle_count == (tier <= 2 ? 50 : 90));
    }

    std::set<std::uint64_t> seeds;
    for (const SceneSpec& s : specs) seeds.insert(s.seed);
    CHECK(seeds.size() == 40);
}

TEST_CASE("scene tracing matches direct reconstruction") {
    SceneSpec spec = tier_suite_specs()[0];
    const ScenePair scene = generate(spec);
    const auto [left, right] = trace_scene(scene);
    CHECK(left.side == ImageSide::left);
    CHECK(right.side == ImageSide::right);
    CHECK_FALSE(left.empty());
    CHECK_FALSE(right.empty());

    const Reconstruction rec = reconstruct_scene(scene, spec.rig);
    CHECK(rec.quality_px < 4.0);
}

TEST_CASE("an easy suite scene reconstructs with ordered traces") {
    const auto specs = tier_suite_specs();
    const TierSceneReport rep = evaluate_tier_scene(specs[3]);
    CHECK(rep.tier == 1);
    CHECK(rep.reconstructed);
    CHECK(rep.mean_px < 2.5);
    CHECK(rep.order_ratio_left > 0.85);
    CHECK(rep.order_ratio_right > 0.85);
    CHECK(rep.n_matches >= 50);
    CHECK(rep.coverage_pct > 50.0);
}

TEST_CASE("the canned tracking sequences have the advertised shape") {
    const Sequence easy = make_no_loop_sequence(2024, 9);
    CHECK(easy.trajectory == Trajectory::translate);
    CHECK(easy.frames.size() == 9);

    const Sequence hard = make_one_loop_sequence(2024, 12);
    CHECK(hard.trajectory == Trajectory::loop_morph);
    CHECK(hard.frames.size() == 12);

    bool any_crossing = false;
    const StereoRig rig;
    for (const ScenePair& f : hard.frames)
        if (polyline_self_intersects(project_polyline(f.gt_curve, rig, true)))
            any_crossing = true;
    CHECK(any_crossing);

    // Moderate degradation is applied to every frame.
    const ScenePair& f0 = easy.frames[0];
    CHECK_FALSE(f0.left_detection == f0.left_gt);
}

TEST_CASE("run_tracked produces one log entry per frame") {
    const Sequence seq = make_no_loop_sequence(77, 5);
    const SequenceResult res =
        run_tracked(seq, StereoRig{}, AblationMode::full);
    REQUIRE(res.frames.size() == 5);
    CHECK(res.mean_px < 4.0);
    CHECK(res.frames.front().frame == 0);
    CHECK(res.frames.back().frame == 4);
}
