#pragma once

#include <filesystem>

#include <json.hpp>

#include <threadtrack/geometry.hpp>

namespace threadtrack {

struct PixelTrace;  // trace2d.hpp

/// JSON form: {dimension, degree, control_points, knots, weights}. Doubles are
/// emitted in shortest round-trip form, so load(save(x)) reproduces x exactly.
nlohmann::json spline_to_json(const SplineCurve& curve);
SplineCurve spline_from_json(const nlohmann::json& j);

/// Traces serialize as a plain list of [u, v] pixel pairs.
nlohmann::json trace_to_json(const PixelTrace& trace);

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace threadtrack
