#include "dlo/sim.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dlo/errors.hpp"
#include "dlo/rng.hpp"

namespace dlo {

namespace {

struct Contact {
    bool active = false;
    Vec2 normal;  // world frame, pointing out of the wall
};

// Push p out of any wall it penetrates through the nearest face. Strict
// interior test, so a particle resting exactly on a face is left alone.
bool project_out_of_walls(const Scene& scene, Vec2& p, Vec2* normal_out) {
    bool any = false;
    for (const auto& clip : scene.clips) {
        Vec2 local = clip.to_clip(p);
        for (const auto& rect : clip.wall_rects_local()) {
            if (!(local.x > rect.lo.x && local.x < rect.hi.x && local.y > rect.lo.y &&
                  local.y < rect.hi.y))
                continue;
            double dl = local.x - rect.lo.x, dr = rect.hi.x - local.x;
            double db = local.y - rect.lo.y, dt = rect.hi.y - local.y;
            double m = std::min(std::min(dl, dr), std::min(db, dt));
            Vec2 n_local;
            if (m == dl) {
                local.x = rect.lo.x;
                n_local = {-1.0, 0.0};
            } else if (m == dr) {
                local.x = rect.hi.x;
                n_local = {1.0, 0.0};
            } else if (m == db) {
                local.y = rect.lo.y;
                n_local = {0.0, -1.0};
            } else {
                local.y = rect.hi.y;
                n_local = {0.0, 1.0};
            }
            p = clip.to_world(local);
            if (normal_out) *normal_out = rotated(n_local, clip.pose.heading);
            any = true;
            local = clip.to_clip(p);
        }
    }
    return any;
}

}  // namespace

double max_segment_residual(const RopeState& rope) {
    double worst = 0.0;
    for (int i = 0; i + 1 < rope.size(); ++i) {
        worst = std::max(worst, std::abs(dist(rope.p[static_cast<std::size_t>(i)],
                                              rope.p[static_cast<std::size_t>(i) + 1]) -
                                         rope.rest_length));
    }
    return worst;
}

bool gripper_pose_collides(const Scene& scene, Vec2 pos, double radius) {
    for (const auto& clip : scene.clips) {
        Vec2 local = clip.to_clip(pos);
        for (const auto& rect : clip.wall_rects_local()) {
            if (rect_distance(rect, local) < radius) return true;
        }
    }
    return false;
}

void World::step() {
    const int n = rope.size();
    const double rest = rope.rest_length;
    std::vector<Vec2> old = rope.p;

    for (auto& vel : rope.v) vel = cfg.ground_damping * vel;
    for (int i = 0; i < n; ++i) rope.p[static_cast<std::size_t>(i)] += cfg.dt * rope.v[static_cast<std::size_t>(i)];

    std::vector<char> pinned(static_cast<std::size_t>(n), 0);
    const int gi = gripper.grasped;
    Vec2 pin_a = gripper.pos;
    Vec2 pin_b;
    bool has_pin_b = false;
    if (gi >= 1) {
        pinned[static_cast<std::size_t>(gi - 1)] = 1;
        if (gi >= 2) {
            pinned[static_cast<std::size_t>(gi - 2)] = 1;
            has_pin_b = true;
            pin_b = gripper.pos + rest * dir_of(gripper.heading);
        }
    }
    auto apply_pins = [&] {
        if (gi >= 1) {
            rope.p[static_cast<std::size_t>(gi - 1)] = pin_a;
            if (has_pin_b) rope.p[static_cast<std::size_t>(gi - 2)] = pin_b;
        }
    };

    // Bending resistance as distance constraints over second neighbours: each
    // |p_i - p_{i+2}| gets a floor of 2*rest*cos(max_joint_angle/2). Inequality
    // only — straight rope (span = 2*rest) is never touched — so pushing the
    // rope axially cannot fold it tighter than the cap, while gentle dragged
    // curves are left alone.
    const double min_span = 2.0 * rest * std::cos(0.5 * cfg.max_joint_angle);

    for (int pass = 0; pass < cfg.iterations; ++pass) {
        for (int i = 0; i + 2 < n; ++i) {
            auto ia = static_cast<std::size_t>(i), ic = ia + 2;
            if (pinned[ia] && pinned[ic]) continue;
            Vec2 d = rope.p[ic] - rope.p[ia];
            double len = norm(d);
            if (len >= min_span) continue;
            Vec2 axis = len > 1e-12 ? (1.0 / len) * d : Vec2{1.0, 0.0};
            Vec2 corr = (len - min_span) * axis;  // negative: spreads the pair
            if (pinned[ia]) {
                rope.p[ic] -= corr;
            } else if (pinned[ic]) {
                rope.p[ia] += corr;
            } else {
                rope.p[ia] += 0.5 * corr;
                rope.p[ic] -= 0.5 * corr;
            }
        }
        for (int i = 0; i + 1 < n; ++i) {
            auto ia = static_cast<std::size_t>(i), ib = ia + 1;
            if (pinned[ia] && pinned[ib]) continue;
            Vec2 d = rope.p[ib] - rope.p[ia];
            double len = norm(d);
            Vec2 axis = len > 1e-12 ? (1.0 / len) * d : Vec2{1.0, 0.0};
            Vec2 corr = (len - rest) * axis;  // moves the pair back to rest
            if (pinned[ia]) {
                rope.p[ib] -= corr;
            } else if (pinned[ib]) {
                rope.p[ia] += corr;
            } else {
                rope.p[ia] += 0.5 * corr;
                rope.p[ib] -= 0.5 * corr;
            }
        }
        for (int i = 0; i < n; ++i) {
            auto ia = static_cast<std::size_t>(i);
            if (!pinned[ia]) project_out_of_walls(scene, rope.p[ia], nullptr);
        }
        apply_pins();
    }

    std::vector<Contact> contacts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto ia = static_cast<std::size_t>(i);
        if (pinned[ia]) continue;
        Vec2 nrm;
        if (project_out_of_walls(scene, rope.p[ia], &nrm)) contacts[ia] = {true, nrm};
    }
    apply_pins();
    for (auto& p : rope.p) p = scene.workspace.clamp(p);

    const double limit = cfg.instability_factor * rest;
    for (int i = 0; i < n; ++i) {
        auto ia = static_cast<std::size_t>(i);
        double moved = dist(rope.p[ia], old[ia]);
        if (moved > limit)
            throw SimError("rope unstable: particle " + std::to_string(i + 1) + " moved " +
                           std::to_string(moved) + " m in one step");
        rope.v[ia] = (1.0 / cfg.dt) * (rope.p[ia] - old[ia]);
    }
    for (int i = 0; i < n; ++i) {
        auto ia = static_cast<std::size_t>(i);
        if (!contacts[ia].active) continue;
        Vec2 nrm = contacts[ia].normal;
        double vn = dot(rope.v[ia], nrm);
        Vec2 vt = rope.v[ia] - vn * nrm;
        rope.v[ia] = (1.0 - cfg.wall_friction) * vt + std::max(vn, 0.0) * nrm;
    }
    sim_time += cfg.dt;
}

void World::settle(int steps) {
    for (int i = 0; i < steps; ++i) step();
}

void World::attach_grasp(int index_1based) {
    if (gripper.grasped != 0) throw StateError("gripper is already grasping");
    if (index_1based < 1 || index_1based > rope.size())
        throw StateError("grasp index " + std::to_string(index_1based) + " out of range");
    auto idx = static_cast<std::size_t>(index_1based - 1);
    gripper.pos = rope.p[idx];
    if (rope.size() >= 2) {
        Vec2 seg = index_1based >= 2 ? rope.p[idx - 1] - rope.p[idx] : rope.p[0] - rope.p[1];
        if (norm(seg) > 1e-12) gripper.heading = std::atan2(seg.y, seg.x);
    }
    gripper.grasped = index_1based;
}

void World::detach_grasp() { gripper.grasped = 0; }

MotionResult World::move_gripper_along(const std::vector<GripperWaypoint>& waypoints) {
    MotionResult res;
    const double step_len = cfg.gripper_speed * cfg.dt;
    const double step_ang = cfg.gripper_ang_speed * cfg.dt;
    constexpr int kHardCap = 200000;
    for (const auto& wp : waypoints) {
        for (;;) {
            Vec2 dp = wp.pos - gripper.pos;
            double dlen = norm(dp);
            double dang = wrap_angle(wp.heading - gripper.heading);
            if (dlen <= 1e-9 && std::abs(dang) <= 1e-9) break;
            Vec2 next_pos = dlen <= step_len ? wp.pos : gripper.pos + (step_len / dlen) * dp;
            double next_heading = std::abs(dang) <= step_ang
                                      ? wp.heading
                                      : gripper.heading + (dang > 0 ? step_ang : -step_ang);
            if (gripper_pose_collides(scene, next_pos, cfg.gripper_radius)) {
                res.collided = true;
                return res;
            }
            res.path_length += dist(gripper.pos, next_pos);
            gripper.pos = next_pos;
            gripper.heading = wrap_angle(next_heading);
            step();
            if (++res.steps > kHardCap) throw SimError("gripper motion did not converge");
        }
    }
    return res;
}

World spawn_world(const Scene& scene, uint64_t seed, const SimConfig& cfg) {
    const auto& sp = scene.rope_spawn;
    if (sp.particles < 2) throw GenerationError("rope needs at least 2 particles");
    double rest = sp.length / (sp.particles - 1);
    if (rest < 0.005) throw GenerationError("rope rest length below 5 mm");

    Rng rng(0x9e3779b97f4a7c15ull * (seed + 0x632be59bd9b4e019ull));
    double jx = rng.uniform(-sp.jitter_x, sp.jitter_x);
    double jy = rng.uniform(-sp.jitter_y, sp.jitter_y);
    double jh = rng.uniform(-sp.jitter_heading, sp.jitter_heading);

    World w;
    w.scene = scene;
    w.cfg = cfg;
    w.spawn_seed = seed;
    w.rope.rest_length = rest;
    Vec2 head = sp.pose.pos + Vec2{jx, jy};
    Vec2 body = dir_of(wrap_angle(sp.pose.heading + jh));
    for (int i = 0; i < sp.particles; ++i) {
        w.rope.p.push_back(scene.workspace.clamp(head - (i * rest) * body));
        w.rope.v.push_back({0.0, 0.0});
    }
    w.gripper.pos = w.rope.p.front();
    w.gripper.heading = wrap_angle(sp.pose.heading + jh);
    w.gripper.grasped = 0;
    return w;
}

}  // namespace dlo
