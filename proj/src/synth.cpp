#include <threadtrack/synth.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace threadtrack {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

namespace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

constexpr int kDensePoints = 4001;

struct Workspace {
    Vec3 center;
    double half_x = 0.0;
    double half_y = 0.0;
    double half_z = 0.0;
};

// Extents sized at the NEAR depth so projections stay inside the margins for
// every depth the curve can reach; x is centered between the two cameras so
// both images share the slack evenly.
Workspace workspace(const SceneSpec& spec) {
    const StereoRig& rig = spec.rig;
    const double z_near = spec.depth_near_m;
    const double z_c = 0.5 * (spec.depth_near_m + spec.depth_far_m);
    const double disp_near = rig.focal_px * rig.baseline_m / z_near;

    Workspace ws;
    ws.center = Vec3(0.5 * rig.baseline_m, 0.0, z_c);
    const double half_u =
        (0.5 * rig.image_width - spec.margin_px - 0.5 * disp_near) * 0.92;
    const double half_v = (0.5 * rig.image_height - spec.margin_px) * 0.92;
    ws.half_x = half_u * z_near / rig.focal_px;
    ws.half_y = half_v * z_near / rig.focal_px;
    ws.half_z = 0.5 * (spec.depth_far_m - spec.depth_near_m) * 0.8;
    if (ws.half_x <= 0.0 || ws.half_y <= 0.0)
        throw SceneError("margins leave no room for the curve");
    return ws;
}

// 2D shape in workspace coordinates plus a depth profile, both over s in
// [0, 1] on a uniform grid.
struct RawShape {
    std::vector<Vec2> xy;
    std::vector<double> z;  // in units of half_z, clamped to [-1, 1]
};

struct BBox {
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    void add(const Vec2& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void add(const BBox& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
};

BBox bbox_of(const std::vector<Vec2>& pts) {
    BBox b;
    for (const Vec2& p : pts) b.add(p);
    return b;
}

// Integrates a unit-speed heading profile into a planar curve.
std::vector<Vec2> integrate_heading(const std::vector<double>& theta) {
    const int n = static_cast<int>(theta.size());
    std::vector<Vec2> out(n);
    out[0] = Vec2::Zero();
    const double ds = 1.0 / (n - 1);
    for (int i = 1; i < n; ++i) {
        const double mid = 0.5 * (theta[i - 1] + theta[i]);
        out[i] = out[i - 1] + ds * Vec2(std::cos(mid), std::sin(mid));
    }
    return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CurlParams {
    double s0 = 0.5;
    double width = 0.12;
    double rho = 0.0;        // whole-shape rotation
    double wiggle_amp = 0.0; // extra heading wiggle (tangle only)
    double wiggle_phase = 0.0;
    double z_phase = 0.0;
    double z_drift = 0.3;
};

CurlParams draw_curl_params(Rng& rng, bool tangle) {
    CurlParams p;
    p.s0 = rng.uniform(0.42, 0.58);
    p.width = rng.uniform(0.10, 0.14);
    p.rho = rng.uniform(-0.4, 0.4);
    if (tangle) {
        p.wiggle_amp = rng.uniform(0.5, 0.9);
        p.wiggle_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    p.z_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.z_drift = rng.uniform(-0.35, 0.35);
    return p;
}

std::vector<Vec2> curl_shape(const CurlParams& p, double turn_rad, int n) {
    std::vector<double> theta(n);
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        double th = turn_rad * sigmoid((s - p.s0) / p.width);
        th += p.wiggle_amp * std::sin(2.0 * std::numbers::pi * s + p.wiggle_phase);
        theta[i] = th + p.rho;
    }
    return integrate_heading(theta);
}

RawShape raw_shape(const SceneSpec& spec, int n) {
    Rng rng(mix_seed(spec.seed, 0x5afe5eedULL));
    RawShape shape;
    shape.xy.resize(n);
    shape.z.resize(n);
    auto sgrid = [&](int i) { return static_cast<double>(i) / (n - 1); };

    switch (spec.family) {
        case CurveFamily::line: {
            const double ky = rng.uniform(-0.8, 0.8);
            const double kz = rng.uniform(-0.8, 0.8);
            for (int i = 0; i < n; ++i) {
                const double c = 2.0 * sgrid(i) - 1.0;
                shape.xy[i] = Vec2(c, ky * c);
                shape.z[i] = kz * c;
            }
            break;
        }
        case CurveFamily::arc: {
            const double span = rng.uniform(2.0, 3.2);
            const double start = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double kz = rng.uniform(-0.7, 0.7);
            const double zp = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (int i = 0; i < n; ++i) {
                const double a = start + span * sgrid(i);
                shape.xy[i] = Vec2(std::cos(a), std::sin(a));
                shape.z[i] = kz * std::sin(std::numbers::pi * sgrid(i) + zp);
            }
            break;
        }
        case CurveFamily::sine: {
            const double cycles = rng.uniform(1.0, 2.0);
            const double amp = rng.uniform(0.5, 1.0);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double kz = rng.uniform(-0.7, 0.7);
            for (int i = 0; i < n; ++i) {
                const double s = sgrid(i);
                const double c = 2.0 * s - 1.0;
                shape.xy[i] = Vec2(
                    c, amp * std::sin(2.0 * std::numbers::pi * cycles * s + phase));
                shape.z[i] = kz * c;
            }
            break;
        }
        case CurveFamily::loop:
        case CurveFamily::tangle: {
            const bool tangle = spec.family == CurveFamily::tangle;
            const CurlParams p = draw_curl_params(rng, tangle);
            const double full_turn =
                (tangle ? 2.6 : 2.0) * std::numbers::pi;

            // One placement transform shared by every morph value keeps a
            // morphing sequence both continuous and inside the workspace.
            BBox global;
            for (int k = 0; k <= 8; ++k)
                global.add(bbox_of(curl_shape(p, full_turn * k / 8.0, 257)));

            const auto xy = curl_shape(p, full_turn * spec.loop_morph, n);
            const Vec2 center = 0.5 * (global.lo + global.hi);
            const Vec2 half = 0.5 * (global.hi - global.lo);
            const double scale =
                1.0 / std::max({half.x(), half.y(), 1e-9});
            for (int i = 0; i < n; ++i) {
                shape.xy[i] = (xy[i] - center) * scale;
                const double s = sgrid(i);
                shape.z[i] = 0.4 * std::sin(2.0 * std::numbers::pi * s + p.z_phase) +
                             p.z_drift * (2.0 * s - 1.0);
            }
            return shape;  // already normalized
        }
        case CurveFamily::random_spline: {
            std::vector<double> theta(n, 0.0);
            for (int k = 1; k <= 4; ++k) {
                const double amp = rng.uniform(0.3, 1.0) * 1.3 / k;
                const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                for (int i = 0; i < n; ++i)
                    theta[i] += amp * std::sin(k * std::numbers::pi * sgrid(i) + phase);
            }
            shape.xy = integrate_heading(theta);
            const double a1 = rng.uniform(0.3, 0.7);
            const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double a2 = rng.uniform(0.1, 0.35);
            const double p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (int i = 0; i < n; ++i) {
                const double s = sgrid(i);
                shape.z[i] = a1 * std::sin(std::numbers::pi * s + p1) +
                             a2 * std::sin(2.0 * std::numbers::pi * s + p2);
            }
            break;
        }
    }

    // Normalize the planar part onto the unit box.
    const BBox b = bbox_of(shape.xy);
    const Vec2 center = 0.5 * (b.lo + b.hi);
    const Vec2 half = 0.5 * (b.hi - b.lo);
    const double scale = 1.0 / std::max({half.x(), half.y(), 1e-9});
    for (Vec2& p : shape.xy) p = (p - center) * scale;
    return shape;
}

}  // namespace

PolyLine family_curve(const SceneSpec& spec) {
    if (!(spec.depth_far_m > spec.depth_near_m) || spec.depth_near_m <= 0.0)
        throw SceneError("depth range must be positive and ordered");
    if (spec.loop_morph < 0.0 || spec.loop_morph > 1.0)
        throw SceneError("loop_morph must lie in [0, 1]");
    spec.rig.validate();

    const Workspace ws = workspace(spec);
    const RawShape shape = raw_shape(spec, kDensePoints);

    Eigen::MatrixXd pts(kDensePoints, 3);
    for (int i = 0; i < kDensePoints; ++i) {
        const Vec2& q = shape.xy[i];
        const double z = std::clamp(shape.z[i], -1.0, 1.0);
        pts.row(i) = Vec3(ws.center.x() + q.x() * ws.half_x,
                          ws.center.y() + q.y() * ws.half_y,
                          ws.center.z() + z * ws.half_z)
                         .transpose();
    }
    return PolyLine::from_points(std::move(pts));
}

namespace {

std::vector<Pixel> rounded_path(const std::vector<Vec2>& projected) {
    std::vector<Pixel> path;
    path.reserve(projected.size());
    for (const Vec2& p : projected) {
        const Pixel px{static_cast<int>(std::lround(p.x())),
                       static_cast<int>(std::lround(p.y()))};
        if (path.empty() || !(px == path.back())) path.push_back(px);
    }
    return path;
}

std::vector<Pixel> disk_offsets(double radius) {
    std::vector<Pixel> out;
    const int r = static_cast<int>(std::ceil(radius));
    for (int dv = -r; dv <= r; ++dv)
        for (int du = -r; du <= r; ++du)
            if (du * du + dv * dv <= radius * radius) out.push_back({du, dv});
    return out;
}

void stamp_stroke(Mask& mask, const std::vector<Vec2>& projected,
                  const std::vector<Pixel>& disk) {
    for (const Vec2& p : projected) {
        const int cu = static_cast<int>(std::lround(p.x()));
        const int cv = static_cast<int>(std::lround(p.y()));
        for (const Pixel& d : disk) {
            const int u = cu + d.u;
            const int v = cv + d.v;
            if (mask.in_bounds(u, v)) mask.at(u, v) = 255;
        }
    }
}

void carve_gaps(Mask& detection, const std::vector<Vec2>& projected,
                const NoiseSpec& noise, int stroke_width, Rng& rng) {
    if (noise.gap_count <= 0 || noise.gap_len_px <= 0) return;

    std::vector<double> arc(projected.size(), 0.0);
    for (std::size_t i = 1; i < projected.size(); ++i)
        arc[i] = arc[i - 1] + (projected[i] - projected[i - 1]).norm();
    const double total = arc.back();
    const double usable_lo = 0.12 * total;
    const double usable = 0.76 * total;
    const double slot = usable / noise.gap_count;
    if (slot < noise.gap_len_px + 20.0)
        throw SceneError("stroke too short for the requested gaps");

    const auto disk = disk_offsets(0.5 * stroke_width + 0.8);
    for (int g = 0; g < noise.gap_count; ++g) {
        const double center =
            usable_lo + slot * (g + 0.25 + 0.5 * rng.uniform());
        const double lo = center - 0.5 * noise.gap_len_px;
        const double hi = center + 0.5 * noise.gap_len_px;
        for (std::size_t i = 0; i < projected.size(); ++i) {
            if (arc[i] < lo || arc[i] > hi) continue;
            const int cu = static_cast<int>(std::lround(projected[i].x()));
            const int cv = static_cast<int>(std::lround(projected[i].y()));
            for (const Pixel& d : disk) {
                const int u = cu + d.u;
                const int v = cv + d.v;
                if (detection.in_bounds(u, v)) detection.at(u, v) = 0;
            }
        }
    }
}

void apply_dropout(Mask& detection, double prob, Rng& rng) {
    if (prob <= 0.0) return;
    for (int v = 0; v < detection.height(); ++v)
        for (int u = 0; u < detection.width(); ++u)
            if (detection.on(u, v) && rng.uniform() < prob)
                detection.at(u, v) = 0;
}

// Compact blob cells in a fixed fill order; enough cells for areas below 26.
const std::vector<Pixel>& blob_order() {
    static const std::vector<Pixel> order = [] {
        std::vector<Pixel> o{{0, 0}};
        for (int ring = 1; ring <= 2; ++ring)
            for (int dv = -ring; dv <= ring; ++dv)
                for (int du = -ring; du <= ring; ++du)
                    if (std::max(std::abs(du), std::abs(dv)) == ring)
                        o.push_back({du, dv});
        return o;
    }();
    return order;
}

void add_speckle(Mask& detection, const FeatureTransform& stroke_ft,
                 const NoiseSpec& noise, Rng& rng) {
    if (noise.speckle_count <= 0 || noise.speckle_max_px <= 1) return;
    constexpr double kKeepAway = 10.5;  // blob cells stay this far off-stroke

    std::vector<Pixel> seeds;
    for (int s = 0; s < noise.speckle_count; ++s) {
        for (int attempt = 0; attempt < 400; ++attempt) {
            const int u = rng.uniform_int(2, detection.width() - 3);
            const int v = rng.uniform_int(2, detection.height() - 3);
            if (stroke_ft.distance(u, v) <= kKeepAway + 2.0) continue;
            bool clear = true;
            for (const Pixel& q : seeds) {
                if (std::abs(q.u - u) <= 9 && std::abs(q.v - v) <= 9) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;

            const int area = 1 + rng.uniform_int(0, noise.speckle_max_px - 2);
            int placed = 0;
            for (const Pixel& d : blob_order()) {
                if (placed >= area) break;
                const int bu = u + d.u;
                const int bv = v + d.v;
                if (!detection.in_bounds(bu, bv)) continue;
                if (stroke_ft.distance(bu, bv) <= kKeepAway) continue;
                detection.at(bu, bv) = 255;
                ++placed;
            }
            seeds.push_back({u, v});
            break;
        }
    }
}

}  // namespace

std::vector<Eigen::Vector2d> project_polyline(const PolyLine& curve3d,
                                              const StereoRig& rig,
                                              bool left_image) {
    std::vector<Vec2> out;
    out.reserve(curve3d.size());
    for (int i = 0; i < curve3d.size(); ++i) {
        const Vec3 p = curve3d.points.row(i);
        const StereoProjection proj = project(rig, p);
        const PixelPoint& px = left_image ? proj.left : proj.right;
        out.emplace_back(px.u, px.v);
    }
    return out;
}

ScenePair render_scene(const PolyLine& curve3d, const SceneSpec& spec,
                       std::uint64_t noise_seed) {
    if (curve3d.size() < 2 || curve3d.dimension() != 3)
        throw SceneError("centerline must be a 3D polyline");
    spec.rig.validate();

    ScenePair scene;
    scene.gt_curve = curve3d;

    const auto left_proj = project_polyline(curve3d, spec.rig, true);
    const auto right_proj = project_polyline(curve3d, spec.rig, false);
    const double margin_check = 0.4 * spec.margin_px;
    for (const auto* proj : {&left_proj, &right_proj})
        for (const Vec2& p : *proj)
            if (!spec.rig.in_image({p.x(), p.y()}, margin_check))
                throw SceneError("curve leaves the image margins");

    scene.left_gt_path = rounded_path(left_proj);
    scene.right_gt_path = rounded_path(right_proj);

    const auto stroke = disk_offsets(0.5 * spec.stroke_width_px);
    scene.left_gt = Mask(spec.rig.image_width, spec.rig.image_height);
    scene.right_gt = Mask(spec.rig.image_width, spec.rig.image_height);
    stamp_stroke(scene.left_gt, left_proj, stroke);
    stamp_stroke(scene.right_gt, right_proj, stroke);

    scene.left_detection = scene.left_gt;
    scene.right_detection = scene.right_gt;
    for (bool left : {true, false}) {
        Mask& det = left ? scene.left_detection : scene.right_detection;
        const Mask& gt = left ? scene.left_gt : scene.right_gt;
        const auto& proj = left ? left_proj : right_proj;
        Rng rng(mix_seed(noise_seed, left ? 0x1ef70001ULL : 0x514e70002ULL));
        carve_gaps(det, proj, spec.noise, spec.stroke_width_px, rng);
        apply_dropout(det, spec.noise.dropout_prob, rng);
        add_speckle(det, feature_transform(gt), spec.noise, rng);
    }
    return scene;
}

ScenePair generate(const SceneSpec& spec) {
    return render_scene(family_curve(spec), spec,
                        mix_seed(spec.seed, 0xD15EA5EDULL));
}

Sequence generate_sequence(const SceneSpec& spec, Trajectory trajectory,
                           int n_frames, double max_step_m) {
    if (n_frames < 1) throw DomainError("need at least one frame");

    Sequence seq;
    seq.trajectory = trajectory;
    seq.frames.reserve(n_frames);

    PolyLine base;
    if (trajectory != Trajectory::loop_morph) base = family_curve(spec);

    const double z_c = 0.5 * (spec.depth_near_m + spec.depth_far_m);
    const double step_x = 2.0 * z_c / spec.rig.focal_px;  // ~2 px per frame

    PolyLine prev;
    for (int f = 0; f < n_frames; ++f) {
        PolyLine curve;
        switch (trajectory) {
            case Trajectory::hold:
                curve = base;
                break;
            case Trajectory::translate: {
                Eigen::MatrixXd pts = base.points;
                pts.col(0).array() += step_x * f;
                curve = PolyLine::from_points(std::move(pts));
                break;
            }
            case Trajectory::loop_morph: {
                SceneSpec fs = spec;
                if (fs.family != CurveFamily::loop &&
                    fs.family != CurveFamily::tangle)
                    fs.family = CurveFamily::loop;
                // Ramp from slightly uncurled to the requested morph.
                const double m1 = spec.loop_morph;
                const double m0 = std::max(0.0, m1 - 0.05);
                fs.loop_morph =
                    n_frames > 1 ? m0 + (m1 - m0) * f / (n_frames - 1) : m1;
                curve = family_curve(fs);
                break;
            }
        }

        if (f > 0) {
            double worst = 0.0;
            for (int i = 0; i < curve.size(); ++i)
                worst = std::max(
                    worst, (curve.points.row(i) - prev.points.row(i)).norm());
            if (worst > max_step_m)
                throw SceneError("consecutive frames differ by " +
                                 std::to_string(worst) + " m");
        }
        prev = curve;
        seq.frames.push_back(
            render_scene(curve, spec, mix_seed(spec.seed, 1000 + f)));
    }
    return seq;
}

bool polyline_self_intersects(const std::vector<Eigen::Vector2d>& pts) {
    // Decimated segment-pair sweep; adjacent segments share endpoints and are
    // skipped.
    std::vector<Vec2> p;
    const int stride = std::max<std::size_t>(1, pts.size() / 400);
    for (std::size_t i = 0; i < pts.size(); i += stride) p.push_back(pts[i]);
    if (p.back() != pts.back()) p.push_back(pts.back());

    auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        const double d = (b.x() - a.x()) * (c.y() - a.y()) -
                         (b.y() - a.y()) * (c.x() - a.x());
        return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    };
    const int n = static_cast<int>(p.size()) - 1;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) {
                // still genuine segments unless the polyline is closed
                if ((p.front() - p.back()).norm() < 1e-9) continue;
            }
            const int o1 = orient(p[i], p[i + 1], p[j]);
            const int o2 = orient(p[i], p[i + 1], p[j + 1]);
            const int o3 = orient(p[j], p[j + 1], p[i]);
            const int o4 = orient(p[j], p[j + 1], p[i + 1]);
            if (o1 != o2 && o3 != o4 && o1 && o2 && o3 && o4) return true;
        }
    }
    return false;
}

}  // namespace threadtrack
