#include "dlo/reward.hpp"

#include <cmath>
#include <vector>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

// Strict sign change of (x - plane) across the segment, with the crossing
// point inside the channel opening.
bool crosses_plane(Vec2 a, Vec2 b, double plane, double half_opening) {
    double fa = a.x - plane, fb = b.x - plane;
    if (!((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0))) return false;
    double s = fa / (fa - fb);
    double y = a.y + s * (b.y - a.y);
    return std::abs(y) <= half_opening;
}

}  // namespace

double reward_flat(const RopeState& rope, const Clip& clip, bool reversed) {
    if (rope.size() < 7) throw StateError("reward_flat needs at least 7 particles");
    Pose2 eff = effective_clip_pose(clip, reversed);
    double y[7];
    for (int i = 0; i < 7; ++i) y[i] = eff.to_local(rope.p[static_cast<std::size_t>(i)]).y;
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += std::abs(y[i + 3] - y[i]);
    return 1.0 / (1.0 + (1000.0 / 3.0) * sum);
}

InsertionIndicators compute_indicators(const RopeState& rope, const Clip& clip, bool reversed,
                                       bool collided, const RewardConfig& cfg) {
    InsertionIndicators ind;
    ind.collide = collided;
    if (rope.size() == 0) return ind;

    Pose2 eff = effective_clip_pose(clip, reversed);
    const double depth = clip.channel_depth();
    const double half = clip.opening_width() * 0.5;

    std::vector<Vec2> local;
    local.reserve(rope.p.size());
    for (const auto& p : rope.p) local.push_back(eff.to_local(p));

    bool particle_inside = false, floor_cross = false, ceil_cross = false;
    for (const auto& q : local) {
        if (q.x >= 0.0 && q.x <= depth && std::abs(q.y) <= half) {
            particle_inside = true;
            break;
        }
    }
    for (std::size_t i = 0; i + 1 < local.size() && !(floor_cross && ceil_cross); ++i) {
        if (!floor_cross && crosses_plane(local[i], local[i + 1], 0.0, half)) floor_cross = true;
        if (!ceil_cross && crosses_plane(local[i], local[i + 1], depth, half)) ceil_cross = true;
    }

    Vec2 head = local.front();
    ind.rope_in = particle_inside || floor_cross;
    ind.rope_out = ceil_cross && head.x > depth;
    ind.in_region = cfg.region.contains(head);
    ind.d_floor = norm(head);
    ind.d_ceil = dist(head, Vec2{depth, 0.0});
    ind.r_flat = rope.size() >= 7 ? reward_flat(rope, clip, reversed) : 0.0;
    return ind;
}

double reward_dist(const InsertionIndicators& ind) {
    if (ind.rope_out) return 20.0 * ind.d_ceil;
    if (ind.rope_in) return 10.0 * ind.d_floor;
    return (ind.in_region ? 1.0 : 0.0) / (4.0 + 80.0 * ind.d_floor);
}

RewardBreakdown reward_total(const InsertionIndicators& ind, int t, const RewardConfig& cfg) {
    RewardBreakdown r;
    r.r_inout = 0.5 * ((ind.rope_in ? 1.0 : 0.0) + (ind.rope_out ? 1.0 : 0.0));
    r.r_collide = cfg.beta * (ind.collide ? 1.0 : 0.0);
    r.r_hor = cfg.gamma_hor * t;
    r.r_dist = reward_dist(ind);
    r.r_flat_scaled = cfg.eta * ind.r_flat;
    return r;
}

double signed_endpoint_distance(const InsertionIndicators& ind) {
    return ind.rope_out ? ind.d_ceil : -ind.d_ceil;
}

bool insert_success(const InsertionIndicators& ind, const RewardConfig& cfg) {
    return signed_endpoint_distance(ind) > cfg.success_threshold;
}

}  // namespace dlo
