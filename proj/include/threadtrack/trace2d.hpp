#pragma once

#include <vector>

#include <threadtrack/image.hpp>

namespace threadtrack {

enum class ImageSide { none, left, right };

/// Ordered pixel path through a thread mask. Consecutive points stay within a
/// step of 2 in each axis except where `bridged` marks a merge jump.
struct PixelTrace {
    std::vector<Pixel> points;
    ImageSide side = ImageSide::none;
    std::vector<int> bridged;  ///< indices i where points[i] -> points[i+1] jumps
    bool partial = false;      ///< true when unmergeable remainders were dropped

    int size() const { return static_cast<int>(points.size()); }
    bool empty() const { return points.empty(); }
    const Pixel& front() const { return points.front(); }
    const Pixel& back() const { return points.back(); }
};

struct TraceConfig {
    double prob_threshold = 0.5;        ///< keep pixels at or above this probability
    int min_component_area = 10;        ///< components below this are dropped
    int min_remaining_px = 30;          ///< stop extracting once fewer pixels remain
    double max_merge_gap_px = 50.0;     ///< merges across larger gaps cost infinity
    double angle_penalty_px_per_rad = 5.0;
    int heading_window = 5;             ///< steps used to smooth walk directions
    double junction_max_deviation_deg = 60.0;
    int erase_radius_px = 3;            ///< stamp radius when removing a found path
    int min_segment_px = 10;            ///< shorter extracted paths are discarded
    int max_candidates = 16;            ///< cap on simultaneous walk branches
};

/// Thresholds the probability map and removes small connected components.
/// Output pixels are exactly 0 or 255.
Mask preprocess(const Mask& detection, double prob_threshold = 0.5,
                int min_component_area = 10);

/// Greedy local paths grown from `start` in both directions along the stroke.
/// Junctions spawn alternative candidates; every result is maximal under the
/// walk rules. Throws TraceError when `start` is not an on-pixel.
std::vector<PixelTrace> trace_local(const Mask& binary, Pixel start,
                                    const TraceConfig& cfg = {});

/// Path score: pixel count minus the angle penalty times the total turning,
/// measured over heading_window-step strides.
double score_path(const PixelTrace& path, const TraceConfig& cfg = {});

struct PathSegment {
    PixelTrace trace;
    double score = 0.0;
};

/// Cost of joining two segments end-to-end: best over the four endpoint
/// pairings of gap distance plus angle-penalty-weighted direction mismatch.
/// Infinite when every pairing exceeds max_merge_gap_px.
double merge_cost(const PathSegment& a, const PathSegment& b,
                  const TraceConfig& cfg = {});

/// Full tracing pass: preprocess, repeatedly extract the best-scoring local
/// path seeded at the most confident remaining pixel, then greedily merge the
/// extracted segments into a single ordered trace.
PixelTrace trace(const Mask& detection, const TraceConfig& cfg = {});

}  // namespace threadtrack
