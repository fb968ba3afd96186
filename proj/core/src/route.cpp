#include "dlo/route.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

constexpr double kTurnWeight = 0.05;
constexpr double kRankSeparation = 1e-3;

std::vector<Vec2> waypoints_for(const Scene& scene, const std::vector<int>& order) {
    std::vector<Vec2> pts;
    pts.push_back(scene.rope_spawn.pose.pos);
    for (int id : order) pts.push_back(clip_by_id(scene, id).pose.pos);
    return pts;
}

// Travel direction when arriving at each ordered clip.  Degenerate (zero
// length) segments inherit the previous direction.
std::vector<Vec2> arrival_dirs(const std::vector<Vec2>& pts) {
    std::vector<Vec2> dirs;
    Vec2 last{1.0, 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        Vec2 seg = pts[i] - pts[i - 1];
        if (norm(seg) > 1e-9) last = normalized(seg);
        dirs.push_back(last);
    }
    return dirs;
}

int resolve_color(const Scene& scene, const std::string& token) {
    int found = -1;
    for (const auto& c : scene.clips) {
        if (color_name(c.color) == token) {
            if (found >= 0)
                throw StateError("instruction token '" + token + "' matches several clips");
            found = c.id;
        }
    }
    if (found < 0) throw StateError("no clip with color '" + token + "'");
    return found;
}

enum class Axis { x, y };

double axis_value(const Clip& c, Axis a) { return a == Axis::x ? c.pose.pos.x : c.pose.pos.y; }

int resolve_extreme(const Scene& scene, Axis a, bool want_max, const std::string& token) {
    const Clip* best = nullptr;
    double second = std::numeric_limits<double>::quiet_NaN();
    for (const auto& c : scene.clips) {
        double v = axis_value(c, a);
        if (!best) {
            best = &c;
            continue;
        }
        double bv = axis_value(*best, a);
        bool better = want_max ? v > bv : v < bv;
        if (better) {
            second = bv;
            best = &c;
        } else if (std::isnan(second) || (want_max ? v > second : v < second)) {
            second = v;
        }
    }
    if (!best) throw StateError("no clips to resolve '" + token + "'");
    if (!std::isnan(second) && std::abs(axis_value(*best, a) - second) < kRankSeparation)
        throw StateError("instruction token '" + token + "' is ambiguous (clips within 1mm)");
    return best->id;
}

int resolve_middle(const Scene& scene, Axis a) {
    std::vector<const Clip*> sorted;
    for (const auto& c : scene.clips) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [a](const Clip* l, const Clip* r) { return axis_value(*l, a) < axis_value(*r, a); });
    if (sorted.size() % 2 == 0) throw StateError("'middle' undefined for an even clip count");
    std::size_t mid = sorted.size() / 2;
    if (mid > 0 && axis_value(*sorted[mid], a) - axis_value(*sorted[mid - 1], a) < kRankSeparation)
        throw StateError("instruction token 'middle' is ambiguous (clips within 1mm)");
    if (mid + 1 < sorted.size() &&
        axis_value(*sorted[mid + 1], a) - axis_value(*sorted[mid], a) < kRankSeparation)
        throw StateError("instruction token 'middle' is ambiguous (clips within 1mm)");
    return sorted[mid]->id;
}

std::vector<int> resolve_spatial(const Scene& scene, const std::vector<std::string>& tokens) {
    bool any_x = false, any_y = false;
    for (const auto& t : tokens) {
        if (t == "leftmost" || t == "rightmost") any_x = true;
        if (t == "top" || t == "bottom" || t == "front" || t == "back") any_y = true;
    }
    std::vector<int> order;
    for (const auto& t : tokens) {
        if (t == "leftmost") {
            order.push_back(resolve_extreme(scene, Axis::x, false, t));
        } else if (t == "rightmost") {
            order.push_back(resolve_extreme(scene, Axis::x, true, t));
        } else if (t == "top" || t == "back") {
            order.push_back(resolve_extreme(scene, Axis::y, true, t));
        } else if (t == "bottom" || t == "front") {
            order.push_back(resolve_extreme(scene, Axis::y, false, t));
        } else if (t == "middle") {
            if (any_x == any_y)
                throw StateError("'middle' needs sibling tokens on exactly one axis");
            order.push_back(resolve_middle(scene, any_x ? Axis::x : Axis::y));
        } else {
            throw ParseError("unknown spatial token '" + t + "'");
        }
    }
    return order;
}

}  // namespace

double route_cost(const Scene& scene, const std::vector<int>& order) {
    auto pts = waypoints_for(scene, order);
    double length = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) length += dist(pts[i - 1], pts[i]);

    double turning = 0.0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        Vec2 a = pts[i] - pts[i - 1];
        Vec2 b = pts[i + 1] - pts[i];
        if (norm(a) < 1e-9 || norm(b) < 1e-9) continue;
        turning += std::abs(wrap_angle(std::atan2(cross(a, b), dot(a, b))));
    }
    return length + kTurnWeight * turning;
}

RoutePlan ground_truth_order(const Scene& scene, const Instruction& ins) {
    if (scene.clips.empty()) throw StateError("scene has no clips to route");

    std::vector<int> order;
    switch (ins.kind) {
        case InstructionKind::implicit: {
            std::vector<int> perm(scene.clips.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::vector<int> best = perm;
            double best_cost = route_cost(scene, perm);
            while (std::next_permutation(perm.begin(), perm.end())) {
                double c = route_cost(scene, perm);
                if (c < best_cost) {
                    best_cost = c;
                    best = perm;
                }
            }
            order = best;
            break;
        }
        case InstructionKind::fixed_attribute: {
            for (const auto& t : ins.tokens) order.push_back(resolve_color(scene, t));
            break;
        }
        case InstructionKind::fixed_spatial: {
            order = resolve_spatial(scene, ins.tokens);
            break;
        }
    }

    if (ins.kind != InstructionKind::implicit) {
        if (order.size() != scene.clips.size())
            throw StateError("instruction names " + std::to_string(order.size()) + " clips, scene has " +
                             std::to_string(scene.clips.size()));
        std::vector<int> dedup = order;
        std::sort(dedup.begin(), dedup.end());
        if (std::adjacent_find(dedup.begin(), dedup.end()) != dedup.end())
            throw StateError("instruction names the same clip twice");
    }

    RoutePlan plan;
    plan.order = order;
    auto pts = waypoints_for(scene, order);
    auto dirs = arrival_dirs(pts);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Clip& c = clip_by_id(scene, order[i]);
        plan.reversed.push_back(dot(dirs[i], dir_of(c.pose.heading)) < 0.0);
    }
    return plan;
}

}  // namespace dlo
