#pragma once

#include <cstdint>

#include <threadtrack/reconstruct3d.hpp>
#include <threadtrack/synth.hpp>
#include <threadtrack/track3d.hpp>

namespace threadtrack {

struct TailConfig {
    double theta_taut_deg = 10.0;   ///< tangent spread tolerated on the taut run
    double theta_sharp_deg = 45.0;  ///< bend that marks the extraction point
    int n_tangent_samples = 200;
    double min_taut_fraction = 0.05;  ///< shortest acceptable taut run
    double min_depth_gap_m = 1e-3;    ///< endpoint depth gap to pick the needle end
    double pull_step_m = 0.005;
    double target_tail_m = 0.03;
    double success_band_m = 0.01;  ///< |final - target| tolerance for success
    int retry_budget = 10;         ///< fresh-noise perception retries per trial
    int max_pulls = 60;
};

enum class NeedleEnd { at_zero, at_one };

/// The lifted needle end sits closer to the camera than anything on the
/// table, so the spline endpoint with smaller depth is the needle end.
/// Throws AmbiguousEndError when the endpoint depths are too close to call.
NeedleEnd find_needle_end(const SplineCurve& spline3d,
                          double min_depth_gap_m = 1e-3);

/// Same curve, reversed if needed so the needle end is at t = 1.
SplineCurve needle_at_one(const SplineCurve& spline3d,
                          double min_depth_gap_m = 1e-3);

struct TautSegment {
    double t_lo = 0.0;  ///< parameter where straightness first breaks
    double t_hi = 1.0;  ///< needle end
    Eigen::Vector3d direction = Eigen::Vector3d::Zero();  ///< mean tangent
};

/// Longest run of near-parallel tangents ending at the needle end (t = 1).
/// Throws NotTautError when the run is shorter than min_taut_fraction.
TautSegment find_taut_segment(const SplineCurve& spline3d,
                              const TailConfig& cfg = {});

/// First parameter below the taut run where the tangent deviates from the
/// taut direction by more than theta_sharp, interpolated between samples.
double find_extraction_point(const SplineCurve& spline3d,
                             const TautSegment& taut,
                             const TailConfig& cfg = {});

/// Thread length on the tail side of the extraction point.
double tail_length(const SplineCurve& spline3d, double t_extraction);

struct TailMeasurement {
    SplineCurve normalized;  ///< needle end at t = 1
    TautSegment taut;
    double t_extraction = 0.0;
    double tail_m = 0.0;
};

TailMeasurement measure_tail(const SplineCurve& spline3d,
                             const TailConfig& cfg = {});

/// Ground-truth state of the pull scene: a gripper holds the needle end of
/// the thread above a tilted table, the thread runs straight down to the
/// suture point, and the remaining tail lies on the table in a gentle
/// meander. Pulls feed thread through the suture point, shortening the tail.
struct SimState {
    std::uint64_t seed = 0;
    Eigen::Vector3d suture_point = Eigen::Vector3d::Zero();
    Eigen::Vector3d table_x = Eigen::Vector3d::Zero();  ///< drape axis
    Eigen::Vector3d table_y = Eigen::Vector3d::Zero();
    Eigen::Vector3d table_up = Eigen::Vector3d::Zero();  ///< toward the camera
    Eigen::Vector3d pull_dir = Eigen::Vector3d::Zero();  ///< in-plane, unit
    double gripper_height_m = 0.0;
    double taut_len_m = 0.0;
    double tail_len_m = 0.0;
    double pulled_len_m = 0.0;
    double wiggle_amp_rad = 0.0;
    double wiggle_period_m = 0.0;
    double wiggle_phase_rad = 0.0;
    SceneSpec scene;  ///< rig, stroke width, margins, degradation noise

    Eigen::Vector3d gripper() const;

    /// Dense centerline from the needle end through the suture point to the
    /// free end of the tail.
    PolyLine gt_thread() const;

    /// Feeds step_m of thread through the suture point. Returns true when the
    /// step exceeds the remaining tail, which pulls the thread out entirely.
    bool advance_pull(double step_m);
};

SimState make_tail_scene(std::uint64_t seed, const NoiseSpec& noise = {});

struct TrialReport {
    std::uint64_t seed = 0;
    bool success = false;
    bool overshoot = false;
    bool gave_up = false;  ///< retry budget or pull cap exhausted
    int pulls = 0;
    int frames_rendered = 0;
    int perception_failures = 0;
    int reinits = 0;
    double measured_tail_m = 0.0;  ///< last perception-side estimate
    double final_tail_m = 0.0;     ///< ground truth at stop
    double abs_error_m = 0.0;
};

/// Closed-loop trial: render, perceive, measure, pull until the measured
/// tail is within half a step of the target. Perception runs reconstruct-
/// then-track with reinitialization when tracking is lost; frames that fail
/// outright are retried with fresh degradation noise within retry_budget.
TrialReport run_servo(SimState& state, const TailConfig& cfg = {},
                      const TraceConfig& trace_cfg = {},
                      const MatchConfig& match_cfg = {},
                      const TrackConfig& track_cfg = {});

}  // namespace threadtrack
