#include <threadtrack/tailshorten.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <threadtrack/error.hpp>

namespace threadtrack {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

Eigen::Vector3d tangent3(const SplineCurve& spline, double t) {
    const Eigen::VectorXd g = spline.tangent(t);
    return Eigen::Vector3d(g(0), g(1), g(2));
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double c =
        std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
    return std::acos(c);
}

}  // namespace

NeedleEnd find_needle_end(const SplineCurve& spline3d, double min_depth_gap_m) {
    if (spline3d.dimension() != 3)
        throw DomainError("needle end detection needs a 3D spline");
    const double z0 = spline3d.evaluate(0.0)(2);
    const double z1 = spline3d.evaluate(1.0)(2);
    if (std::abs(z0 - z1) < min_depth_gap_m)
        throw AmbiguousEndError("endpoint depths too close to pick the needle end");
    return z0 < z1 ? NeedleEnd::at_zero : NeedleEnd::at_one;
}

SplineCurve needle_at_one(const SplineCurve& spline3d, double min_depth_gap_m) {
    return find_needle_end(spline3d, min_depth_gap_m) == NeedleEnd::at_zero
               ? spline3d.reversed()
               : spline3d;
}

TautSegment find_taut_segment(const SplineCurve& spline3d,
                              const TailConfig& cfg) {
    const int n = cfg.n_tangent_samples;
    if (n < 8) throw DomainError("need at least 8 tangent samples");
    const double theta_taut = deg2rad(cfg.theta_taut_deg);

    Eigen::Vector3d sum = tangent3(spline3d, 1.0);
    int last_included = n - 1;
    for (int k = n - 2; k >= 0; --k) {
        const double t = static_cast<double>(k) / (n - 1);
        const Eigen::Vector3d dir = tangent3(spline3d, t);
        if (angle_between(dir, sum) > theta_taut) break;
        sum += dir;
        last_included = k;
    }

    TautSegment taut;
    taut.t_lo = static_cast<double>(last_included) / (n - 1);
    taut.t_hi = 1.0;
    taut.direction = sum.normalized();
    if (1.0 - taut.t_lo < cfg.min_taut_fraction)
        throw NotTautError("no straight run at the needle end");
    return taut;
}

double find_extraction_point(const SplineCurve& spline3d,
                             const TautSegment& taut, const TailConfig& cfg) {
    const int n = cfg.n_tangent_samples;
    const double theta_sharp = deg2rad(cfg.theta_sharp_deg);
    const int k_lo = std::clamp(
        static_cast<int>(std::lround(taut.t_lo * (n - 1))), 0, n - 1);

    double t_prev = static_cast<double>(k_lo) / (n - 1);
    double a_prev = angle_between(tangent3(spline3d, t_prev), taut.direction);
    for (int k = k_lo - 1; k >= 0; --k) {
        const double t = static_cast<double>(k) / (n - 1);
        const double a = angle_between(tangent3(spline3d, t), taut.direction);
        if (a > theta_sharp) {
            const double frac =
                a > a_prev ? (theta_sharp - a_prev) / (a - a_prev) : 1.0;
            return t_prev + frac * (t - t_prev);
        }
        t_prev = t;
        a_prev = a;
    }
    throw ExtractionNotFoundError("no sharp bend below the taut segment");
}

double tail_length(const SplineCurve& spline3d, double t_extraction) {
    return arc_length(spline3d, 0.0, t_extraction);
}

TailMeasurement measure_tail(const SplineCurve& spline3d,
                             const TailConfig& cfg) {
    TailMeasurement m;
    m.normalized = needle_at_one(spline3d, cfg.min_depth_gap_m);
    m.taut = find_taut_segment(m.normalized, cfg);
    m.t_extraction = find_extraction_point(m.normalized, m.taut, cfg);
    m.tail_m = tail_length(m.normalized, m.t_extraction);
    return m;
}

Eigen::Vector3d SimState::gripper() const {
    if (taut_len_m <= gripper_height_m)
        throw DomainError("taut thread shorter than the gripper height");
    const double planar =
        std::sqrt(taut_len_m * taut_len_m - gripper_height_m * gripper_height_m);
    return suture_point + planar * pull_dir + gripper_height_m * table_up;
}

PolyLine SimState::gt_thread() const {
    // ~0.25 mm between samples keeps projected steps around half a pixel.
    constexpr double kStep = 0.00025;
    const Eigen::Vector3d needle = gripper();

    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<std::size_t>(
        (taut_len_m + tail_len_m) / kStep + 8));

    const int n_taut = std::max(2, static_cast<int>(std::ceil(taut_len_m / kStep)));
    for (int i = 0; i <= n_taut; ++i) {
        const double f = static_cast<double>(i) / n_taut;
        pts.push_back(needle + f * (suture_point - needle));
    }

    const int n_tail = std::max(2, static_cast<int>(std::ceil(tail_len_m / kStep)));
    const double h = tail_len_m / n_tail;
    Eigen::Vector3d pos = suture_point;
    for (int i = 0; i < n_tail; ++i) {
        const double s_mid = pulled_len_m + (i + 0.5) * h;
        const double theta = wiggle_amp_rad *
            std::sin(2.0 * kPi * s_mid / wiggle_period_m + wiggle_phase_rad);
        pos += h * (std::cos(theta) * table_x + std::sin(theta) * table_y);
        pts.push_back(pos);
    }

    Eigen::MatrixXd m(static_cast<int>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
        m.row(static_cast<int>(i)) = pts[i];
    return PolyLine::from_points(std::move(m));
}

bool SimState::advance_pull(double step_m) {
    if (step_m <= 0.0) throw DomainError("pull step must be positive");
    if (step_m >= tail_len_m) {
        pulled_len_m += tail_len_m;
        tail_len_m = 0.0;
        return true;
    }
    tail_len_m -= step_m;
    taut_len_m += step_m;
    pulled_len_m += step_m;
    return false;
}

SimState make_tail_scene(std::uint64_t seed, const NoiseSpec& noise) {
    Rng rng(mix_seed(seed, 0x7A115C3EULL));
    const double phi = deg2rad(40.0);

    SimState s;
    s.seed = seed;
    s.table_x = Eigen::Vector3d(1.0, 0.0, 0.0);
    s.table_y = Eigen::Vector3d(0.0, std::cos(phi), std::sin(phi));
    s.table_up = Eigen::Vector3d(0.0, std::sin(phi), -std::cos(phi));
    s.pull_dir = std::cos(-kPi / 3.0) * s.table_x +
                 std::sin(-kPi / 3.0) * s.table_y;
    s.suture_point = Eigen::Vector3d(0.03, 0.10, 0.55);
    s.gripper_height_m = 0.08;
    s.taut_len_m = 0.09;
    s.tail_len_m = rng.uniform(0.12, 0.16);
    s.wiggle_amp_rad = rng.uniform(0.25, 0.45);
    s.wiggle_period_m = rng.uniform(0.08, 0.12);
    s.wiggle_phase_rad = rng.uniform(0.2, kPi - 0.2);
    s.scene.seed = seed;
    s.scene.noise = noise;
    return s;
}

TrialReport run_servo(SimState& state, const TailConfig& cfg,
                      const TraceConfig& trace_cfg,
                      const MatchConfig& match_cfg,
                      const TrackConfig& track_cfg) {
    TrialReport report;
    report.seed = state.seed;
    std::optional<TrackerState> tracker;

    auto perceive_and_measure = [&]() -> std::optional<TailMeasurement> {
        while (report.perception_failures <= cfg.retry_budget) {
            const std::uint64_t noise_seed = mix_seed(
                state.seed, 7000 + static_cast<std::uint64_t>(
                                       report.frames_rendered));
            ++report.frames_rendered;
            try {
                const ScenePair frame =
                    render_scene(state.gt_thread(), state.scene, noise_seed);

                PixelTrace l, r;
                bool have_traces = true;
                try {
                    const PixelTrace tl = trace(frame.left_detection, trace_cfg);
                    const PixelTrace tr = trace(frame.right_detection, trace_cfg);
                    std::tie(l, r) = canonical_orientation(tl, tr, match_cfg);
                    l.side = ImageSide::left;
                    r.side = ImageSide::right;
                } catch (const TraceError&) {
                    have_traces = false;
                }

                if (!tracker) {
                    if (!have_traces)
                        throw NoThreadError("no usable trace to initialize from");
                    tracker = make_tracker(
                        reconstruct(l, r, state.scene.rig, match_cfg));
                } else {
                    try {
                        *tracker = update(*tracker, frame.left_detection,
                                          frame.right_detection, l, r,
                                          state.scene.rig, track_cfg,
                                          trace_cfg);
                    } catch (const TrackingLostError&) {
                        ++report.reinits;
                        tracker.reset();
                        throw;
                    }
                }
                return measure_tail(tracker->spline3d, cfg);
            } catch (const Error&) {
                ++report.perception_failures;
            }
        }
        return std::nullopt;
    };

    while (true) {
        const std::optional<TailMeasurement> m = perceive_and_measure();
        if (!m) {
            report.gave_up = true;
            break;
        }
        report.measured_tail_m = m->tail_m;
        if (m->tail_m - cfg.target_tail_m < 0.5 * cfg.pull_step_m) break;
        if (report.pulls >= cfg.max_pulls) {
            report.gave_up = true;
            break;
        }
        report.overshoot = state.advance_pull(cfg.pull_step_m);
        ++report.pulls;
        if (report.overshoot) break;
    }

    report.final_tail_m = state.tail_len_m;
    report.abs_error_m = std::abs(report.final_tail_m - cfg.target_tail_m);
    report.success = !report.overshoot && !report.gave_up &&
                     report.abs_error_m <= cfg.success_band_m;
    return report;
}

}  // namespace threadtrack
