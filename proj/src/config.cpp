#include <threadtrack/config.hpp>

#include <threadtrack/error.hpp>
#include <threadtrack/serialize.hpp>

namespace threadtrack {

using nlohmann::json;

std::string name_of(CurveFamily family) {
    switch (family) {
        case CurveFamily::line: return "line";
        case CurveFamily::arc: return "arc";
        case CurveFamily::sine: return "sine";
        case CurveFamily::loop: return "loop";
        case CurveFamily::tangle: return "tangle";
        case CurveFamily::random_spline: return "random_spline";
    }
    throw DomainError("unknown curve family value");
}

std::string name_of(Trajectory trajectory) {
    switch (trajectory) {
        case Trajectory::hold: return "hold";
        case Trajectory::translate: return "translate";
        case Trajectory::loop_morph: return "loop_morph";
    }
    throw DomainError("unknown trajectory value");
}

std::string name_of(TrackTerm term) {
    switch (term) {
        case TrackTerm::full: return "full";
        case TrackTerm::mask_only: return "mask_only";
        case TrackTerm::trace_only: return "trace_only";
    }
    throw DomainError("unknown track term value");
}

std::string name_of(AblationMode mode) {
    switch (mode) {
        case AblationMode::full: return "full";
        case AblationMode::mask_only: return "mask_only";
        case AblationMode::trace_only: return "trace_only";
        case AblationMode::no_tracking: return "no_tracking";
    }
    throw DomainError("unknown ablation mode value");
}

CurveFamily family_from_name(const std::string& name) {
    if (name == "line") return CurveFamily::line;
    if (name == "arc") return CurveFamily::arc;
    if (name == "sine") return CurveFamily::sine;
    if (name == "loop") return CurveFamily::loop;
    if (name == "tangle" || name == "self_intersecting")
        return CurveFamily::tangle;
    if (name == "random_spline") return CurveFamily::random_spline;
    throw DomainError("unknown curve family: " + name);
}

Trajectory trajectory_from_name(const std::string& name) {
    if (name == "hold" || name == "static") return Trajectory::hold;
    if (name == "translate") return Trajectory::translate;
    if (name == "loop_morph" || name == "loop") return Trajectory::loop_morph;
    throw DomainError("unknown trajectory: " + name);
}

TrackTerm term_from_name(const std::string& name) {
    if (name == "full") return TrackTerm::full;
    if (name == "mask_only") return TrackTerm::mask_only;
    if (name == "trace_only") return TrackTerm::trace_only;
    throw DomainError("unknown track term: " + name);
}

AblationMode ablation_from_name(const std::string& name) {
    if (name == "none" || name == "full") return AblationMode::full;
    if (name == "mask_only") return AblationMode::mask_only;
    if (name == "trace_only") return AblationMode::trace_only;
    if (name == "no_tracking") return AblationMode::no_tracking;
    throw DomainError("unknown ablation mode: " + name);
}

namespace {

void expect_object(const json& j, const char* what) {
    if (!j.is_object()) throw DomainError(std::string(what) + " must be a JSON object");
}

}  // namespace

void merge_config(const json& j, TraceConfig& cfg) {
    expect_object(j, "trace config");
    cfg.prob_threshold = j.value("prob_threshold", cfg.prob_threshold);
    cfg.min_component_area = j.value("min_component_area", cfg.min_component_area);
    cfg.min_remaining_px = j.value("min_remaining_px", cfg.min_remaining_px);
    cfg.max_merge_gap_px = j.value("max_merge_gap_px", cfg.max_merge_gap_px);
    cfg.angle_penalty_px_per_rad =
        j.value("angle_penalty_px_per_rad", cfg.angle_penalty_px_per_rad);
    cfg.heading_window = j.value("heading_window", cfg.heading_window);
    cfg.junction_max_deviation_deg =
        j.value("junction_max_deviation_deg", cfg.junction_max_deviation_deg);
    cfg.erase_radius_px = j.value("erase_radius_px", cfg.erase_radius_px);
    cfg.min_segment_px = j.value("min_segment_px", cfg.min_segment_px);
    cfg.max_candidates = j.value("max_candidates", cfg.max_candidates);
}

void merge_config(const json& j, MatchConfig& cfg) {
    expect_object(j, "match config");
    cfg.n_samples = j.value("n_samples", cfg.n_samples);
    cfg.vertical_tolerance_px =
        j.value("vertical_tolerance_px", cfg.vertical_tolerance_px);
    cfg.max_param_offset = j.value("max_param_offset", cfg.max_param_offset);
    cfg.min_matches = j.value("min_matches", cfg.min_matches);
    cfg.reject_threshold_px =
        j.value("reject_threshold_px", cfg.reject_threshold_px);
    cfg.n_control = j.value("n_control", cfg.n_control);
    cfg.degree = j.value("degree", cfg.degree);
}

void merge_config(const json& j, TrackConfig& cfg) {
    expect_object(j, "track config");
    cfg.correction_samples = j.value("correction_samples", cfg.correction_samples);
    cfg.max_correction_px = j.value("max_correction_px", cfg.max_correction_px);
    cfg.lost_threshold_px = j.value("lost_threshold_px", cfg.lost_threshold_px);
    cfg.lost_after_frames = j.value("lost_after_frames", cfg.lost_after_frames);
    cfg.n_control = j.value("n_control", cfg.n_control);
    cfg.degree = j.value("degree", cfg.degree);
    if (j.contains("term")) cfg.term = term_from_name(j.at("term").get<std::string>());
}

void merge_config(const json& j, TailConfig& cfg) {
    expect_object(j, "tail config");
    cfg.theta_taut_deg = j.value("theta_taut_deg", cfg.theta_taut_deg);
    cfg.theta_sharp_deg = j.value("theta_sharp_deg", cfg.theta_sharp_deg);
    cfg.n_tangent_samples = j.value("n_tangent_samples", cfg.n_tangent_samples);
    cfg.min_taut_fraction = j.value("min_taut_fraction", cfg.min_taut_fraction);
    cfg.min_depth_gap_m = j.value("min_depth_gap_m", cfg.min_depth_gap_m);
    cfg.pull_step_m = j.value("pull_step_m", cfg.pull_step_m);
    cfg.target_tail_m = j.value("target_tail_m", cfg.target_tail_m);
    cfg.success_band_m = j.value("success_band_m", cfg.success_band_m);
    cfg.retry_budget = j.value("retry_budget", cfg.retry_budget);
    cfg.max_pulls = j.value("max_pulls", cfg.max_pulls);
}

void merge_config(const json& j, NoiseSpec& noise) {
    expect_object(j, "noise spec");
    noise.gap_count = j.value("gap_count", noise.gap_count);
    noise.gap_len_px = j.value("gap_len_px", noise.gap_len_px);
    noise.speckle_count = j.value("speckle_count", noise.speckle_count);
    noise.speckle_max_px = j.value("speckle_max_px", noise.speckle_max_px);
    noise.dropout_prob = j.value("dropout_prob", noise.dropout_prob);
}

void merge_config(const json& j, StereoRig& rig) {
    expect_object(j, "stereo rig");
    rig.focal_px = j.value("focal_px", rig.focal_px);
    rig.principal_point.u = j.value("cx", rig.principal_point.u);
    rig.principal_point.v = j.value("cy", rig.principal_point.v);
    rig.baseline_m = j.value("baseline_m", rig.baseline_m);
    rig.image_width = j.value("image_width", rig.image_width);
    rig.image_height = j.value("image_height", rig.image_height);
    rig.validate();
}

void merge_config(const json& j, SceneSpec& scene) {
    expect_object(j, "scene spec");
    if (j.contains("family"))
        scene.family = family_from_name(j.at("family").get<std::string>());
    scene.seed = j.value("seed", scene.seed);
    scene.depth_near_m = j.value("depth_near_m", scene.depth_near_m);
    scene.depth_far_m = j.value("depth_far_m", scene.depth_far_m);
    scene.stroke_width_px = j.value("stroke_width_px", scene.stroke_width_px);
    scene.margin_px = j.value("margin_px", scene.margin_px);
    scene.loop_morph = j.value("loop_morph", scene.loop_morph);
    if (j.contains("noise")) merge_config(j.at("noise"), scene.noise);
    if (j.contains("rig")) merge_config(j.at("rig"), scene.rig);
}

void merge_config(const json& j, RunConfig& cfg) {
    expect_object(j, "run config");
    if (j.contains("trace")) merge_config(j.at("trace"), cfg.pipeline.trace);
    if (j.contains("match")) merge_config(j.at("match"), cfg.pipeline.match);
    if (j.contains("track")) merge_config(j.at("track"), cfg.pipeline.track);
    if (j.contains("tail")) merge_config(j.at("tail"), cfg.pipeline.tail);
    if (j.contains("scene")) merge_config(j.at("scene"), cfg.scene);
    if (j.contains("rig")) merge_config(j.at("rig"), cfg.scene.rig);
}

json config_to_json(const RunConfig& cfg) {
    const TraceConfig& tr = cfg.pipeline.trace;
    const MatchConfig& ma = cfg.pipeline.match;
    const TrackConfig& tk = cfg.pipeline.track;
    const TailConfig& ta = cfg.pipeline.tail;
    const SceneSpec& sc = cfg.scene;
    const StereoRig& rig = sc.rig;
    return json{
        {"trace",
         {{"prob_threshold", tr.prob_threshold},
          {"min_component_area", tr.min_component_area},
          {"min_remaining_px", tr.min_remaining_px},
          {"max_merge_gap_px", tr.max_merge_gap_px},
          {"angle_penalty_px_per_rad", tr.angle_penalty_px_per_rad},
          {"heading_window", tr.heading_window},
          {"junction_max_deviation_deg", tr.junction_max_deviation_deg},
          {"erase_radius_px", tr.erase_radius_px},
          {"min_segment_px", tr.min_segment_px},
          {"max_candidates", tr.max_candidates}}},
        {"match",
         {{"n_samples", ma.n_samples},
          {"vertical_tolerance_px", ma.vertical_tolerance_px},
          {"max_param_offset", ma.max_param_offset},
          {"min_matches", ma.min_matches},
          {"reject_threshold_px", ma.reject_threshold_px},
          {"n_control", ma.n_control},
          {"degree", ma.degree}}},
        {"track",
         {{"correction_samples", tk.correction_samples},
          {"max_correction_px", tk.max_correction_px},
          {"lost_threshold_px", tk.lost_threshold_px},
          {"lost_after_frames", tk.lost_after_frames},
          {"n_control", tk.n_control},
          {"degree", tk.degree},
          {"term", name_of(tk.term)}}},
        {"tail",
         {{"theta_taut_deg", ta.theta_taut_deg},
          {"theta_sharp_deg", ta.theta_sharp_deg},
          {"n_tangent_samples", ta.n_tangent_samples},
          {"min_taut_fraction", ta.min_taut_fraction},
          {"min_depth_gap_m", ta.min_depth_gap_m},
          {"pull_step_m", ta.pull_step_m},
          {"target_tail_m", ta.target_tail_m},
          {"success_band_m", ta.success_band_m},
          {"retry_budget", ta.retry_budget},
          {"max_pulls", ta.max_pulls}}},
        {"scene",
         {{"family", name_of(sc.family)},
          {"seed", sc.seed},
          {"depth_near_m", sc.depth_near_m},
          {"depth_far_m", sc.depth_far_m},
          {"stroke_width_px", sc.stroke_width_px},
          {"margin_px", sc.margin_px},
          {"loop_morph", sc.loop_morph},
          {"noise",
           {{"gap_count", sc.noise.gap_count},
            {"gap_len_px", sc.noise.gap_len_px},
            {"speckle_count", sc.noise.speckle_count},
            {"speckle_max_px", sc.noise.speckle_max_px},
            {"dropout_prob", sc.noise.dropout_prob}}},
          {"rig",
           {{"focal_px", rig.focal_px},
            {"cx", rig.principal_point.u},
            {"cy", rig.principal_point.v},
            {"baseline_m", rig.baseline_m},
            {"image_width", rig.image_width},
            {"image_height", rig.image_height}}}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    try {
        merge_config(read_json_file(path), cfg);
    } catch (const json::exception& e) {
        throw DomainError("bad config " + path.string() + ": " + e.what());
    }
    return cfg;
}

}  // namespace threadtrack
