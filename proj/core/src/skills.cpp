#include "dlo/skills.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

bool inside_channel(const Scene& scene, Vec2 p) {
    for (const auto& clip : scene.clips) {
        Vec2 local = clip.to_clip(p);
        if (local.x >= 0.0 && local.x <= clip.channel_depth() &&
            std::abs(local.y) <= 0.5 * clip.opening_width())
            return true;
    }
    return false;
}

bool graspable(const World& world, int index_1based, const SkillConfig& cfg) {
    Vec2 p = world.rope.p[static_cast<std::size_t>(index_1based - 1)];
    if (inside_channel(world.scene, p)) return false;
    return !gripper_pose_collides(world.scene, p, world.cfg.gripper_radius + cfg.grasp_safety);
}

// First graspable particle scanning from the head; the head itself as a
// last resort (the motion's own collision check keeps that honest).
int foremost_free_index(const World& world, const SkillConfig& cfg) {
    for (int i = 1; i <= world.rope.size(); ++i) {
        if (graspable(world, i, cfg)) return i;
    }
    return 1;
}

void check_budget(const MotionResult& motion, const SkillConfig& cfg) {
    if (motion.steps > cfg.max_motion_steps)
        throw SimError("skill exceeded its tick budget (" + std::to_string(motion.steps) + " > " +
                       std::to_string(cfg.max_motion_steps) + ")");
}

SkillOutcome finish(World& world, SkillKind kind, const Clip& clip, bool reversed, bool collided,
                    int steps, const SkillConfig& cfg, const RewardConfig& rcfg) {
    world.detach_grasp();
    world.settle(cfg.settle_steps);
    SkillOutcome out;
    out.kind = kind;
    out.clip_id = clip.id;
    out.collided = collided;
    out.indicators_after = compute_indicators(world.rope, clip, reversed, collided, rcfg);
    out.duration_steps = steps + cfg.settle_steps;
    return out;
}

// --- visibility graph ----------------------------------------------------

struct InflatedRect {
    Pose2 pose;  // owning clip pose
    Rect rect;   // inflated, clip-local
};

std::vector<InflatedRect> inflated_walls(const Scene& scene, double clearance) {
    std::vector<InflatedRect> out;
    for (const auto& clip : scene.clips) {
        for (const auto& r : clip.wall_rects_local()) {
            out.push_back({clip.pose,
                           Rect{r.lo - Vec2{clearance, clearance}, r.hi + Vec2{clearance, clearance}}});
        }
    }
    return out;
}

bool segment_hits_rect(Vec2 a, Vec2 b, const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    double d[2] = {b.x - a.x, b.y - a.y};
    double lo[2] = {r.lo.x, r.lo.y}, hi[2] = {r.hi.x, r.hi.y}, p0[2] = {a.x, a.y};
    for (int ax = 0; ax < 2; ++ax) {
        if (std::abs(d[ax]) < 1e-15) {
            if (p0[ax] < lo[ax] || p0[ax] > hi[ax]) return false;
        } else {
            double ta = (lo[ax] - p0[ax]) / d[ax];
            double tb = (hi[ax] - p0[ax]) / d[ax];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
    }
    return true;
}

bool segment_clear(Vec2 a, Vec2 b, const std::vector<InflatedRect>& obstacles) {
    constexpr double kEps = 1e-9;  // edges may touch obstacle boundaries
    for (const auto& ob : obstacles) {
        Rect shrunk{ob.rect.lo + Vec2{kEps, kEps}, ob.rect.hi - Vec2{kEps, kEps}};
        if (segment_hits_rect(ob.pose.to_local(a), ob.pose.to_local(b), shrunk)) return false;
    }
    return true;
}

Vec2 push_out_of_obstacles(Vec2 p, const std::vector<InflatedRect>& obstacles) {
    for (int pass = 0; pass < 4; ++pass) {
        bool moved = false;
        for (const auto& ob : obstacles) {
            Vec2 local = ob.pose.to_local(p);
            const Rect& r = ob.rect;
            if (!(local.x > r.lo.x && local.x < r.hi.x && local.y > r.lo.y && local.y < r.hi.y))
                continue;
            double dl = local.x - r.lo.x, dr = r.hi.x - local.x;
            double db = local.y - r.lo.y, dt = r.hi.y - local.y;
            double m = std::min(std::min(dl, dr), std::min(db, dt));
            if (m == dl) local.x = r.lo.x - 1e-6;
            else if (m == dr) local.x = r.hi.x + 1e-6;
            else if (m == db) local.y = r.lo.y - 1e-6;
            else local.y = r.hi.y + 1e-6;
            p = ob.pose.to_world(local);
            moved = true;
        }
        if (!moved) break;
    }
    return p;
}

}  // namespace

std::vector<Vec2> route_around_walls(const Scene& scene, Vec2 start, Vec2 goal,
                                     double clearance) {
    auto obstacles = inflated_walls(scene, clearance);

    std::vector<Vec2> nodes;
    nodes.push_back(push_out_of_obstacles(start, obstacles));
    nodes.push_back(goal);
    for (const auto& ob : obstacles) {
        const Rect& r = ob.rect;
        for (Vec2 c : {Vec2{r.lo.x, r.lo.y}, Vec2{r.hi.x, r.lo.y}, Vec2{r.hi.x, r.hi.y},
                       Vec2{r.lo.x, r.hi.y}}) {
            nodes.push_back(ob.pose.to_world(c));
        }
    }

    const std::size_t n = nodes.size();
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    best[0] = 0.0;
    pq.push({0.0, 0});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > best[u]) continue;
        if (u == 1) break;
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            double w = dist(nodes[u], nodes[v]);
            if (best[u] + w >= best[v]) continue;
            if (!segment_clear(nodes[u], nodes[v], obstacles)) continue;
            best[v] = best[u] + w;
            prev[v] = static_cast<int>(u);
            pq.push({best[v], v});
        }
    }

    std::vector<Vec2> path;
    if (std::isinf(best[1])) {  // boxed in; fall back to the direct line
        path = {nodes[0], goal};
    } else {
        for (int at = 1; at != -1; at = prev[static_cast<std::size_t>(at)])
            path.push_back(nodes[static_cast<std::size_t>(at)]);
        std::reverse(path.begin(), path.end());
    }
    if (dist(path.front(), start) > 1e-9) path.insert(path.begin(), start);
    return path;
}

// --- primitives -----------------------------------------------------------

const char* skill_name(SkillKind k) {
    switch (k) {
        case SkillKind::insert: return "insert";
        case SkillKind::pull: return "pull";
        case SkillKind::flatten: return "flatten";
    }
    return "?";
}

InsertParams InsertParams::clamped(double u, std::array<double, 3> v1, std::array<double, 3> v2) {
    InsertParams p;
    p.grasp_u = clamp(u, 0.0, 1.0);
    for (auto* v : {&v1, &v2}) {
        (*v)[0] = clamp((*v)[0], -kBoxHalf, kBoxHalf);
        (*v)[1] = clamp((*v)[1], -kBoxHalf, kBoxHalf);
        (*v)[2] = clamp((*v)[2], -kAlphaHalf, kAlphaHalf);
    }
    p.via1 = v1;
    p.via2 = v2;
    return p;
}

std::array<double, 7> InsertParams::flat() const {
    return {grasp_u, via1[0], via1[1], via1[2], via2[0], via2[1], via2[2]};
}

InsertParams InsertParams::from_flat(const std::array<double, 7>& a) {
    return clamped(a[0], {a[1], a[2], a[3]}, {a[4], a[5], a[6]});
}

int insert_grasp_index(const World& world, double grasp_u, const SkillConfig& cfg) {
    // The window anchors at the foremost graspable particle: once the head has
    // entered the channel mouth it cannot be pinched, so the hand shifts back.
    int n = world.rope.size();
    int first = 0;
    for (int i = 1; i <= n; ++i) {
        if (graspable(world, i, cfg)) {
            first = i;
            break;
        }
    }
    if (first == 0) return 1;
    int run = 0;  // contiguous graspable particles from `first`, capped at the window
    for (int i = first; i <= n && i < first + cfg.grasp_window; ++i) {
        if (!graspable(world, i, cfg)) break;
        ++run;
    }
    double u = clamp(grasp_u, 0.0, 1.0);
    int offset = static_cast<int>(std::lround(u * (cfg.grasp_window - 1)));
    return first + std::min(offset, run - 1);
}

SkillOutcome execute_insert(World& world, const Clip& clip, bool reversed,
                            const InsertParams& params, const SkillConfig& cfg,
                            const RewardConfig& rcfg) {
    if (world.grasped()) throw StateError("insert requires no active grasp");
    InsertParams p = InsertParams::from_flat(params.flat());
    Pose2 eff = effective_clip_pose(clip, reversed);

    world.attach_grasp(insert_grasp_index(world, p.grasp_u, cfg));
    std::vector<GripperWaypoint> wps = {
        {eff.to_world({p.via1[0], p.via1[1]}), wrap_angle(eff.heading + p.via1[2])},
        {eff.to_world({p.via2[0], p.via2[1]}), wrap_angle(eff.heading + p.via2[2])},
    };
    MotionResult motion = world.move_gripper_along(wps);
    check_budget(motion, cfg);
    return finish(world, SkillKind::insert, clip, reversed, motion.collided, motion.steps, cfg,
                  rcfg);
}

SkillOutcome execute_pull(World& world, const Clip& clip, bool reversed, const SkillConfig& cfg,
                          const RewardConfig& rcfg) {
    world.detach_grasp();
    Pose2 eff = effective_clip_pose(clip, reversed);
    Vec2 staging = eff.to_world({-cfg.staging_distance, 0.0});

    world.attach_grasp(foremost_free_index(world, cfg));
    auto poly = route_around_walls(world.scene, world.gripper.pos, staging, cfg.clearance);

    std::vector<GripperWaypoint> wps;
    for (std::size_t i = 1; i < poly.size(); ++i) {
        Vec2 leg = poly[i] - poly[i - 1];
        double heading = norm(leg) > 1e-9 ? std::atan2(leg.y, leg.x) : world.gripper.heading;
        wps.push_back({poly[i], heading});
    }
    if (wps.empty()) wps.push_back({staging, eff.heading});
    wps.back().heading = eff.heading;  // park the head aimed at the channel

    MotionResult motion = world.move_gripper_along(wps);
    check_budget(motion, cfg);
    return finish(world, SkillKind::pull, clip, reversed, motion.collided, motion.steps, cfg, rcfg);
}

SkillOutcome execute_flatten(World& world, const Clip& clip, bool reversed, const SkillConfig& cfg,
                             const RewardConfig& rcfg) {
    InsertionIndicators before =
        compute_indicators(world.rope, clip, reversed, false, rcfg);
    if (before.rope_out) {  // already routed; leave well alone
        SkillOutcome out;
        out.kind = SkillKind::flatten;
        out.clip_id = clip.id;
        out.indicators_after = before;
        return out;
    }

    world.detach_grasp();
    Pose2 eff = effective_clip_pose(clip, reversed);
    int idx = foremost_free_index(world, cfg);
    double y0 = eff.to_local(world.rope.p[static_cast<std::size_t>(idx - 1)]).y;

    // Rear point of the straightening run: nominal, slid forward until the
    // disc clears every wall (chained clips can sit right behind it).
    double rear_x = -cfg.flatten_align;
    while (rear_x < -0.09 &&
           gripper_pose_collides(world.scene, eff.to_world({rear_x, 0.0}),
                                 world.cfg.gripper_radius + 0.002)) {
        rear_x += 0.005;
    }

    world.attach_grasp(idx);
    std::vector<GripperWaypoint> wps = {
        {eff.to_world({-cfg.flatten_retreat, y0}), eff.heading},
        {eff.to_world({rear_x, 0.0}), eff.heading},
        {eff.to_world({-cfg.staging_distance, 0.0}), eff.heading},
    };
    MotionResult motion = world.move_gripper_along(wps);
    check_budget(motion, cfg);
    return finish(world, SkillKind::flatten, clip, reversed, motion.collided, motion.steps, cfg,
                  rcfg);
}

}  // namespace dlo
