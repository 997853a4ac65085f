#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include <threadtrack/pipeline.hpp>
#include <threadtrack/tailshorten.hpp>

namespace threadtrack {

struct PipelineConfig {
    TraceConfig trace;
    MatchConfig match;
    TrackConfig track;
    TailConfig tail;
};

struct RunConfig {
    PipelineConfig pipeline;
    SceneSpec scene;  ///< includes the stereo rig
};

std::string name_of(CurveFamily family);
std::string name_of(Trajectory trajectory);
std::string name_of(TrackTerm term);
std::string name_of(AblationMode mode);

CurveFamily family_from_name(const std::string& name);
Trajectory trajectory_from_name(const std::string& name);
TrackTerm term_from_name(const std::string& name);
AblationMode ablation_from_name(const std::string& name);

/// Each merge overwrites only the fields present in the JSON object, so a
/// config file may specify any subset and inherit defaults for the rest.
void merge_config(const nlohmann::json& j, TraceConfig& cfg);
void merge_config(const nlohmann::json& j, MatchConfig& cfg);
void merge_config(const nlohmann::json& j, TrackConfig& cfg);
void merge_config(const nlohmann::json& j, TailConfig& cfg);
void merge_config(const nlohmann::json& j, NoiseSpec& noise);
void merge_config(const nlohmann::json& j, StereoRig& rig);
void merge_config(const nlohmann::json& j, SceneSpec& scene);
void merge_config(const nlohmann::json& j, RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);

/// Defaults overridden by whatever the file provides. Malformed JSON or an
/// unknown enum name raises DomainError.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace threadtrack
