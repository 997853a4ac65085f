#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <threadtrack/geometry.hpp>
#include <threadtrack/image.hpp>
#include <threadtrack/stereo.hpp>

namespace threadtrack {

/// Deterministic random source. All draws go through fixed integer/mantissa
/// arithmetic so the same seed reproduces the same scene everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next() %
                                     static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 engine_;
};

/// Stable combination of two seeds (splitmix-style finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

enum class CurveFamily { line, arc, sine, loop, tangle, random_spline };

struct NoiseSpec {
    int gap_count = 0;      ///< disjoint runs cut out of each stroke
    int gap_len_px = 0;     ///< length of each cut along the stroke
    int speckle_count = 0;  ///< isolated blob components added per image
    int speckle_max_px = 0; ///< blob areas drawn from [1, speckle_max_px - 1]
    double dropout_prob = 0.0;  ///< per-pixel erase probability
};

struct SceneSpec {
    CurveFamily family = CurveFamily::sine;
    std::uint64_t seed = 1;
    double depth_near_m = 0.45;
    double depth_far_m = 0.60;
    int stroke_width_px = 3;
    double margin_px = 48.0;
    double loop_morph = 1.0;  ///< curl families: fraction of the full turn
    NoiseSpec noise;
    StereoRig rig;
};

struct ScenePair {
    PolyLine gt_curve;  ///< dense 3D centerline
    std::vector<Pixel> left_gt_path;   ///< ordered centerline pixels
    std::vector<Pixel> right_gt_path;
    Mask left_gt;         ///< clean rendered stroke
    Mask right_gt;
    Mask left_detection;  ///< stroke with gaps, dropout and speckle applied
    Mask right_detection;
};

enum class Trajectory { hold, translate, loop_morph };

struct Sequence {
    Trajectory trajectory = Trajectory::hold;
    std::vector<ScenePair> frames;
};

/// Dense ground-truth centerline for the requested family, placed so that
/// both projections stay inside the image margins over the full depth range.
PolyLine family_curve(const SceneSpec& spec);

/// Projects a centerline into both cameras and rasterizes stroke, ground
/// truth paths and degraded detection masks. Degradation draws come from
/// noise_seed only. Throws SceneError when the curve leaves the frustum.
ScenePair render_scene(const PolyLine& curve3d, const SceneSpec& spec,
                       std::uint64_t noise_seed);

/// family_curve + render_scene with the noise seed derived from spec.seed.
ScenePair generate(const SceneSpec& spec);

/// Frame sequence under the given motion model. Shape parameters are drawn
/// once from spec.seed; each frame gets fresh degradation noise. Consecutive
/// ground-truth curves may differ pointwise by at most max_step_m.
Sequence generate_sequence(const SceneSpec& spec, Trajectory trajectory,
                           int n_frames, double max_step_m = 0.03);

/// True when the 2D polyline crosses itself (used to verify loop frames).
bool polyline_self_intersects(const std::vector<Eigen::Vector2d>& pts);

/// Left-image projection of a 3D polyline, for intersection probes.
std::vector<Eigen::Vector2d> project_polyline(const PolyLine& curve3d,
                                              const StereoRig& rig,
                                              bool left_image);

}  // namespace threadtrack
