#include <threadtrack/trace2d.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <unordered_set>

#include <Eigen/Dense>

namespace threadtrack {

Mask preprocess(const Mask& detection, double prob_threshold,
                int min_component_area) {
    Mask binary(detection.width(), detection.height());
    for (int v = 0; v < detection.height(); ++v)
        for (int u = 0; u < detection.width(); ++u)
            binary.at(u, v) = detection.prob(u, v) >= prob_threshold ? 255 : 0;
    return remove_small_components(binary, min_component_area);
}

namespace {

using Vec2 = Eigen::Vector2d;

std::int32_t pixel_key(const Mask& mask, Pixel p) {
    return p.v * mask.width() + p.u;
}

double angle_between(const Vec2& a, const Vec2& b) {
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

Vec2 step_dir(Pixel from, Pixel to) {
    return Vec2(to.u - from.u, to.v - from.v).normalized();
}

// Chebyshev ring of the given radius around p: on-mask, unvisited pixels.
std::vector<Pixel> ring_candidates(const Mask& mask,
                                   const std::unordered_set<std::int32_t>& visited,
                                   Pixel p, int radius) {
    std::vector<Pixel> out;
    for (int dv = -radius; dv <= radius; ++dv) {
        for (int du = -radius; du <= radius; ++du) {
            if (std::max(std::abs(du), std::abs(dv)) != radius) continue;
            const int u = p.u + du;
            const int v = p.v + dv;
            if (!mask.in_bounds(u, v) || !mask.on(u, v)) continue;
            if (visited.contains(pixel_key(mask, {u, v}))) continue;
            out.push_back({u, v});
        }
    }
    return out;
}

// True when marching from p along dir stays on the mask for a few pixels
// (one dropout hole forgiven). Separates genuine branches from the sideways
// neighbours every thick stroke offers.
bool lookahead_on_mask(const Mask& mask, Pixel p, const Vec2& dir, int steps = 6) {
    int misses = 0;
    for (int k = 1; k <= steps; ++k) {
        const int u = p.u + static_cast<int>(std::lround(dir.x() * k));
        const int v = p.v + static_cast<int>(std::lround(dir.y() * k));
        if (!mask.in_bounds(u, v) || !mask.on(u, v))
            if (++misses > 1) return false;
    }
    return true;
}

// Groups directions whose angular gaps stay within gap_deg, respecting the
// circular wrap. Returns one representative index per group (the member
// closest to the group's mean direction).
std::vector<int> cluster_directions(const std::vector<Vec2>& dirs,
                                    double gap_deg) {
    const int n = static_cast<int>(dirs.size());
    if (n == 0) return {};
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> angles(n);
    for (int i = 0; i < n; ++i) angles[i] = std::atan2(dirs[i].y(), dirs[i].x());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return angles[a] < angles[b];
    });

    // Rotate so the sweep starts just past the widest circular gap.
    const double two_pi = 2.0 * std::numbers::pi;
    int start = 0;
    double widest = -1.0;
    for (int i = 0; i < n; ++i) {
        const double a = angles[order[i]];
        const double b = angles[order[(i + 1) % n]] + (i + 1 == n ? two_pi : 0.0);
        if (b - a > widest) {
            widest = b - a;
            start = (i + 1) % n;
        }
    }

    const double gap_rad = gap_deg * std::numbers::pi / 180.0;
    std::vector<std::vector<int>> groups;
    for (int k = 0; k < n; ++k) {
        const int idx = order[(start + k) % n];
        if (groups.empty()) {
            groups.push_back({idx});
            continue;
        }
        const int prev = groups.back().back();
        double delta = angles[idx] - angles[prev];
        while (delta < 0.0) delta += two_pi;
        if (delta <= gap_rad)
            groups.back().push_back(idx);
        else
            groups.push_back({idx});
    }

    std::vector<int> reps;
    for (const auto& g : groups) {
        Vec2 mean = Vec2::Zero();
        for (int i : g) mean += dirs[i];
        if (mean.norm() < 1e-9) mean = dirs[g.front()];
        mean.normalize();
        int best = g.front();
        double best_dot = -2.0;
        for (int i : g) {
            const double d = dirs[i].dot(mean);
            if (d > best_dot) {
                best_dot = d;
                best = i;
            }
        }
        reps.push_back(best);
    }
    return reps;
}

struct Arm {
    std::vector<Pixel> path;  // stepped pixels, the shared start excluded
    std::unordered_set<std::int32_t> visited;
};

struct ArmState {
    std::vector<Pixel> path;
    std::unordered_set<std::int32_t> visited;
    Vec2 heading;
    std::vector<std::pair<Pixel, Vec2>> spawned;  // fork dedupe ring buffer
};

// Walks greedily from start along seed_dir, spawning a bounded number of
// alternative arms at junctions. Arms share the caller's visited prefix so a
// forward arm and its backward counterpart never cover the same pixels twice.
void run_walks(const Mask& mask, Pixel start, const Vec2& seed_dir,
               const std::unordered_set<std::int32_t>& visited0,
               const TraceConfig& cfg, int max_arms, std::vector<Arm>& out) {
    const double junction_rad =
        cfg.junction_max_deviation_deg * std::numbers::pi / 180.0;

    std::vector<ArmState> stack;
    stack.push_back({{}, visited0, seed_dir, {}});
    int produced = 0;

    while (!stack.empty() && produced < max_arms) {
        ArmState state = std::move(stack.back());
        stack.pop_back();

        while (true) {
            const Pixel p = state.path.empty() ? start : state.path.back();

            auto qualify = [&](const std::vector<Pixel>& cands,
                               std::vector<Pixel>& pix, std::vector<Vec2>& dir) {
                for (const Pixel& c : cands) {
                    const Vec2 d = step_dir(p, c);
                    if (angle_between(d, state.heading) <= junction_rad) {
                        pix.push_back(c);
                        dir.push_back(d);
                    }
                }
            };

            std::vector<Pixel> pix;
            std::vector<Vec2> dirs;
            qualify(ring_candidates(mask, state.visited, p, 1), pix, dirs);
            if (pix.empty())
                qualify(ring_candidates(mask, state.visited, p, 2), pix, dirs);
            if (pix.empty()) break;

            int best = 0;
            double best_dot = -2.0;
            for (int i = 0; i < static_cast<int>(pix.size()); ++i) {
                const double d = dirs[i].dot(state.heading);
                if (d > best_dot ||
                    (d == best_dot && std::pair(pix[i].v, pix[i].u) <
                                          std::pair(pix[best].v, pix[best].u))) {
                    best_dot = d;
                    best = i;
                }
            }

            // Branch detection: direction groups well away from the chosen
            // continuation that hold up under a straight-line probe.
            if (static_cast<int>(stack.size()) + produced + 1 < max_arms) {
                for (int rep : cluster_directions(dirs, 30.0)) {
                    if (rep == best) continue;
                    if (angle_between(dirs[rep], dirs[best]) <
                        35.0 * std::numbers::pi / 180.0)
                        continue;
                    bool seen = false;
                    for (const auto& [fp, fd] : state.spawned) {
                        if (std::abs(fp.u - p.u) <= 3 && std::abs(fp.v - p.v) <= 3 &&
                            angle_between(fd, dirs[rep]) <
                                25.0 * std::numbers::pi / 180.0) {
                            seen = true;
                            break;
                        }
                    }
                    if (seen || !lookahead_on_mask(mask, p, dirs[rep])) continue;

                    ArmState fork = state;
                    fork.path.push_back(pix[rep]);
                    fork.visited.insert(pixel_key(mask, pix[rep]));
                    fork.heading = dirs[rep];
                    fork.spawned.push_back({p, dirs[rep]});
                    if (fork.spawned.size() > 8)
                        fork.spawned.erase(fork.spawned.begin());
                    state.spawned.push_back({p, dirs[rep]});
                    if (state.spawned.size() > 8)
                        state.spawned.erase(state.spawned.begin());
                    stack.push_back(std::move(fork));
                    if (static_cast<int>(stack.size()) + produced + 1 >= max_arms)
                        break;
                }
            }

            state.path.push_back(pix[best]);
            state.visited.insert(pixel_key(mask, pix[best]));

            // Smoothed heading over the trailing window.
            const int len = static_cast<int>(state.path.size());
            const Pixel head = state.path[len - 1];
            const Pixel tail = len > cfg.heading_window
                                   ? state.path[len - 1 - cfg.heading_window]
                                   : start;
            const Vec2 h(head.u - tail.u, head.v - tail.v);
            if (h.norm() > 1e-9) state.heading = h.normalized();
        }

        out.push_back({std::move(state.path), std::move(state.visited)});
        ++produced;
    }
}

// Local tangent estimate around the seed: principal axis of the nearby
// on-pixels. Falls back to raw neighbour clustering for isotropic blobs.
std::vector<Vec2> initial_directions(const Mask& mask, Pixel start) {
    std::vector<Vec2> offsets;
    for (int dv = -3; dv <= 3; ++dv) {
        for (int du = -3; du <= 3; ++du) {
            if (du == 0 && dv == 0) continue;
            if (du * du + dv * dv > 12) continue;
            const int u = start.u + du;
            const int v = start.v + dv;
            if (mask.in_bounds(u, v) && mask.on(u, v))
                offsets.emplace_back(du, dv);
        }
    }
    if (offsets.empty()) return {};

    Vec2 mean = Vec2::Zero();
    for (const Vec2& o : offsets) mean += o;
    mean /= static_cast<double>(offsets.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const Vec2& o : offsets) {
        const Vec2 c = o - mean;
        cov += c * c.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(1);

    std::vector<Vec2> axes;
    if (hi > 1.3 * std::max(lo, 1e-9)) {
        const Vec2 axis = eig.eigenvectors().col(1).normalized();
        axes = {axis, -axis};
    } else {
        std::vector<Vec2> dirs;
        for (const Vec2& o : offsets)
            if (o.norm() <= 1.5) dirs.push_back(o.normalized());
        if (dirs.empty())
            for (const Vec2& o : offsets) dirs.push_back(o.normalized());
        for (int rep : cluster_directions(dirs, 45.0)) axes.push_back(dirs[rep]);
    }

    // Keep only directions that actually have somewhere to go.
    std::unordered_set<std::int32_t> none;
    std::vector<Vec2> kept;
    for (const Vec2& d : axes) {
        bool reachable = false;
        for (int radius : {1, 2}) {
            for (const Pixel& c : ring_candidates(mask, none, start, radius)) {
                if (angle_between(step_dir(start, c), d) <
                    75.0 * std::numbers::pi / 180.0) {
                    reachable = true;
                    break;
                }
            }
            if (reachable) break;
        }
        if (reachable) kept.push_back(d);
    }
    return kept;
}

std::vector<Pixel> reversed_points(const std::vector<Pixel>& pts) {
    return {pts.rbegin(), pts.rend()};
}

bool same_or_reversed(const std::vector<Pixel>& a, const std::vector<Pixel>& b) {
    if (a.size() != b.size()) return false;
    if (a == b) return true;
    return std::equal(a.begin(), a.end(), b.rbegin(),
                      [](const Pixel& x, const Pixel& y) { return x == y; });
}

}  // namespace

std::vector<PixelTrace> trace_local(const Mask& binary, Pixel start,
                                    const TraceConfig& cfg) {
    if (!binary.in_bounds(start.u, start.v) || !binary.on(start.u, start.v))
        throw TraceError("trace start is not an on-pixel");

    const auto dirs = initial_directions(binary, start);
    if (dirs.empty()) return {PixelTrace{{start}, ImageSide::none, {}, false}};

    std::vector<std::vector<Pixel>> raw;
    const int per_walk = std::max(2, cfg.max_candidates / 4);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        std::vector<Arm> forward;
        run_walks(binary, start, dirs[i], {pixel_key(binary, start)}, cfg,
                  per_walk, forward);
        for (const Arm& fa : forward) {
            // Grow the opposite arms on top of this arm's visited set so the
            // assembled path never repeats a pixel.
            std::vector<Arm> backward;
            for (std::size_t j = 0; j < dirs.size(); ++j) {
                if (j == i) continue;
                run_walks(binary, start, dirs[j], fa.visited, cfg, per_walk,
                          backward);
            }
            bool assembled = false;
            for (const Arm& ba : backward) {
                if (ba.path.empty()) continue;
                std::vector<Pixel> full = reversed_points(ba.path);
                full.push_back(start);
                full.insert(full.end(), fa.path.begin(), fa.path.end());
                raw.push_back(std::move(full));
                assembled = true;
            }
            if (!assembled) {
                std::vector<Pixel> full{start};
                full.insert(full.end(), fa.path.begin(), fa.path.end());
                raw.push_back(std::move(full));
            }
        }
    }

    std::vector<PixelTrace> out;
    for (auto& pts : raw) {
        bool dup = false;
        for (const PixelTrace& existing : out) {
            if (same_or_reversed(existing.points, pts)) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(PixelTrace{std::move(pts), ImageSide::none, {}, false});
        if (static_cast<int>(out.size()) >= cfg.max_candidates) break;
    }
    return out;
}

double score_path(const PixelTrace& path, const TraceConfig& cfg) {
    const int n = path.size();
    if (n == 0) return 0.0;

    std::vector<Pixel> strided;
    for (int i = 0; i < n; i += cfg.heading_window) strided.push_back(path.points[i]);
    if (strided.back() != path.points[n - 1]) strided.push_back(path.points[n - 1]);

    double turn = 0.0;
    std::optional<Vec2> prev;
    for (std::size_t i = 1; i < strided.size(); ++i) {
        Vec2 d(strided[i].u - strided[i - 1].u, strided[i].v - strided[i - 1].v);
        if (d.norm() < 1e-9) continue;
        d.normalize();
        if (prev) turn += angle_between(*prev, d);
        prev = d;
    }
    return n - cfg.angle_penalty_px_per_rad * turn;
}

namespace {

// Direction leaving a path at one of its ends, smoothed over the heading
// window; nullopt for single-pixel paths.
std::optional<Vec2> exit_direction(const PixelTrace& t, bool at_back,
                                   const TraceConfig& cfg) {
    const int n = t.size();
    if (n < 2) return std::nullopt;
    const int w = std::min(cfg.heading_window, n - 1);
    const Pixel tip = at_back ? t.points[n - 1] : t.points[0];
    const Pixel inner = at_back ? t.points[n - 1 - w] : t.points[w];
    Vec2 d(tip.u - inner.u, tip.v - inner.v);
    if (d.norm() < 1e-9) return std::nullopt;
    return d.normalized();
}

struct Pairing {
    bool a_back = true;   // attach at a's back (otherwise its front)
    bool b_front = true;  // attach at b's front (otherwise its back)
    double cost = std::numeric_limits<double>::infinity();
};

Pairing best_pairing(const PathSegment& a, const PathSegment& b,
                     const TraceConfig& cfg) {
    Pairing best;
    for (bool a_back : {true, false}) {
        for (bool b_front : {true, false}) {
            const Pixel pa = a_back ? a.trace.back() : a.trace.front();
            const Pixel pb = b_front ? b.trace.front() : b.trace.back();
            const double gap = std::hypot(pb.u - pa.u, pb.v - pa.v);
            if (gap > cfg.max_merge_gap_px) continue;

            const auto out_a = exit_direction(a.trace, a_back, cfg);
            auto in_b = exit_direction(b.trace, !b_front, cfg);
            if (in_b) in_b = -*in_b;  // entering b, pointing into its body

            double mismatch = 0.0;
            if (gap >= 2.0) {
                const Vec2 g =
                    Vec2(pb.u - pa.u, pb.v - pa.v).normalized();
                if (out_a) mismatch += angle_between(*out_a, g);
                if (in_b) mismatch += angle_between(g, *in_b);
            } else if (out_a && in_b) {
                mismatch = angle_between(*out_a, *in_b);
            }
            const double cost = gap + cfg.angle_penalty_px_per_rad * mismatch;
            if (cost < best.cost) best = {a_back, b_front, cost};
        }
    }
    return best;
}

std::vector<int> remap_bridges(const std::vector<int>& bridged, int n,
                               bool reversed) {
    if (!reversed) return bridged;
    std::vector<int> out;
    out.reserve(bridged.size());
    for (int i : bridged) out.push_back(n - 2 - i);
    std::sort(out.begin(), out.end());
    return out;
}

PixelTrace merge_segments(const PathSegment& a, const PathSegment& b,
                          const Pairing& p) {
    PixelTrace out;
    const int na = a.trace.size();
    const int nb = b.trace.size();

    std::vector<Pixel> pa = p.a_back ? a.trace.points
                                     : reversed_points(a.trace.points);
    std::vector<Pixel> pb = p.b_front ? b.trace.points
                                      : reversed_points(b.trace.points);
    out.bridged = remap_bridges(a.trace.bridged, na, !p.a_back);
    const auto bb = remap_bridges(b.trace.bridged, nb, !p.b_front);

    const Pixel join_a = pa.back();
    const Pixel join_b = pb.front();
    if (std::max(std::abs(join_b.u - join_a.u),
                 std::abs(join_b.v - join_a.v)) > 2)
        out.bridged.push_back(na - 1);

    out.points = std::move(pa);
    out.points.insert(out.points.end(), pb.begin(), pb.end());
    for (int i : bb) out.bridged.push_back(i + na);
    out.partial = a.trace.partial || b.trace.partial;
    return out;
}

}  // namespace

double merge_cost(const PathSegment& a, const PathSegment& b,
                  const TraceConfig& cfg) {
    if (a.trace.empty() || b.trace.empty())
        throw TraceError("cannot merge an empty segment");
    return best_pairing(a, b, cfg).cost;
}

PixelTrace trace(const Mask& detection, const TraceConfig& cfg) {
    Mask work = preprocess(detection, cfg.prob_threshold, cfg.min_component_area);
    if (work.count_on() == 0)
        throw NoThreadError("no thread pixels after preprocessing");

    // Erase stamp: disk slightly wider than a stroke so an extracted path
    // takes its whole stroke with it instead of leaving slivers behind.
    std::vector<Pixel> stamp;
    for (int dv = -cfg.erase_radius_px; dv <= cfg.erase_radius_px; ++dv)
        for (int du = -cfg.erase_radius_px; du <= cfg.erase_radius_px; ++du)
            if (du * du + dv * dv <= cfg.erase_radius_px * cfg.erase_radius_px)
                stamp.push_back({du, dv});

    std::vector<PathSegment> segments;
    while (work.count_on() > cfg.min_remaining_px) {
        // Seed at the most confident remaining pixel (row-major tie-break).
        Pixel seed{-1, -1};
        int best_value = -1;
        for (int v = 0; v < work.height(); ++v) {
            for (int u = 0; u < work.width(); ++u) {
                if (!work.on(u, v)) continue;
                const int value = detection.at(u, v);
                if (value > best_value) {
                    best_value = value;
                    seed = {u, v};
                }
            }
        }

        auto candidates = trace_local(work, seed, cfg);
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
            const double s = score_path(candidates[i], cfg);
            if (s > best_score ||
                (s == best_score &&
                 candidates[i].size() > candidates[best].size())) {
                best_score = s;
                best = i;
            }
        }
        PixelTrace& found = candidates[best];

        for (const Pixel& p : found.points) {
            for (const Pixel& d : stamp) {
                const int u = p.u + d.u;
                const int v = p.v + d.v;
                if (work.in_bounds(u, v)) work.at(u, v) = 0;
            }
        }
        if (found.size() >= cfg.min_segment_px)
            segments.push_back({std::move(found), best_score});
    }

    if (segments.empty())
        throw NoThreadError("no usable thread segments in the mask");

    // Greedy merging, cheapest join first.
    while (segments.size() > 1) {
        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        std::size_t bj = 0;
        Pairing bp;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            for (std::size_t j = i + 1; j < segments.size(); ++j) {
                const Pairing p = best_pairing(segments[i], segments[j], cfg);
                const int combined = segments[i].trace.size() + segments[j].trace.size();
                const int best_combined =
                    best_cost < std::numeric_limits<double>::infinity()
                        ? segments[bi].trace.size() + segments[bj].trace.size()
                        : -1;
                if (p.cost < best_cost ||
                    (p.cost == best_cost && combined > best_combined)) {
                    best_cost = p.cost;
                    bi = i;
                    bj = j;
                    bp = p;
                }
            }
        }
        if (!(best_cost < std::numeric_limits<double>::infinity())) {
            // Nothing joins any more: keep the longest piece, flag the loss.
            std::size_t longest = 0;
            for (std::size_t i = 1; i < segments.size(); ++i)
                if (segments[i].trace.size() > segments[longest].trace.size())
                    longest = i;
            PixelTrace result = std::move(segments[longest].trace);
            result.partial = true;
            return result;
        }
        PathSegment merged;
        merged.trace = merge_segments(segments[bi], segments[bj], bp);
        merged.score = score_path(merged.trace, cfg);
        segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(bj));
        segments[bi] = std::move(merged);
    }
    return std::move(segments.front().trace);
}

}  // namespace threadtrack
