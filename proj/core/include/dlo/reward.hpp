#pragma once

#include "dlo/geometry.hpp"
#include "dlo/scene.hpp"
#include "dlo/sim.hpp"

namespace dlo {

struct RewardConfig {
    double beta = -2.0;        // collision weight
    double gamma_hor = -0.001; // per-primitive-call horizon weight
    double eta = 0.5;          // flatness weight
    Rect region{{-0.16, -0.08}, {0.0, 0.08}};  // staging region, clip frame
    double success_threshold = 0.02;           // strict, meters past ceiling
};

/// Insertion state of a rope relative to one clip, measured in the clip's
/// effective frame. rope_in: a particle is inside the channel or the polyline
/// crosses the floor plane within the opening. rope_out additionally requires
/// the head past the ceiling and a ceiling crossing within the opening
/// (rope_out implies rope_in by construction).
struct InsertionIndicators {
    bool rope_in = false;
    bool rope_out = false;
    bool collide = false;
    bool in_region = false;  // head inside the staging region
    double d_floor = 0.0;    // |head - floor center|
    double d_ceil = 0.0;     // |head - ceiling center|
    double r_flat = 0.0;     // flatness of the first 7 particles, (0, 1]
};

InsertionIndicators compute_indicators(const RopeState& rope, const Clip& clip,
                                       bool reversed = false, bool collided = false,
                                       const RewardConfig& cfg = {});

/// 1 / (1 + (1000/3) * sum_{i=0..3} |y(p_{i+4}) - y(p_{i+1})|) over clip-frame
/// lateral coordinates of the first 7 particles. Requires n >= 7.
double reward_flat(const RopeState& rope, const Clip& clip, bool reversed = false);

/// Piecewise distance shaping: 10*d_floor while threading, 20*d_ceil once
/// through, 1_region(head) / (4 + 80*d_floor) before entry.
double reward_dist(const InsertionIndicators& ind);

struct RewardBreakdown {
    double r_inout = 0.0;
    double r_collide = 0.0;
    double r_hor = 0.0;
    double r_dist = 0.0;
    double r_flat_scaled = 0.0;

    double total() const { return r_inout + r_collide + r_hor + r_dist + r_flat_scaled; }
};

/// t is the number of primitive calls used so far in the episode.
RewardBreakdown reward_total(const InsertionIndicators& ind, int t,
                             const RewardConfig& cfg = {});

/// +d_ceil once through, -d_ceil otherwise.
double signed_endpoint_distance(const InsertionIndicators& ind);

/// Strictly more than success_threshold past the ceiling.
bool insert_success(const InsertionIndicators& ind, const RewardConfig& cfg = {});

}  // namespace dlo
