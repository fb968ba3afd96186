#pragma once

#include <array>
#include <vector>

#include "dlo/reward.hpp"
#include "dlo/scene.hpp"
#include "dlo/sim.hpp"

namespace dlo {

/// Seven-parameter insertion primitive: grasp fraction plus two via poses in
/// the effective clip frame. Construction clamps everything into bounds
/// (grasp_u in [0,1], via x/y in [-0.08, 0.08] m, alpha in [-pi/2, pi/2]).
struct InsertParams {
    double grasp_u = 0.0;
    std::array<double, 3> via1{};  // x, y, alpha
    std::array<double, 3> via2{};

    static constexpr double kBoxHalf = 0.08;
    static constexpr double kAlphaHalf = 1.5707963267948966;

    static InsertParams clamped(double u, std::array<double, 3> v1,
                                std::array<double, 3> v2);
    std::array<double, 7> flat() const;
    static InsertParams from_flat(const std::array<double, 7>& a);
};

enum class SkillKind { insert, pull, flatten };

const char* skill_name(SkillKind k);

struct SkillConfig {
    double staging_distance = 0.07;   // head parked this far before the floor
    double flatten_retreat = 0.12;    // first drag, away from the clip
    double flatten_align = 0.16;      // rear point of the straightening run
    int settle_steps = 60;
    int grasp_window = 12;            // M graspable particles for insert
    double clearance = 0.03;          // wall inflation for pull path planning
    double grasp_safety = 0.001;      // extra disc clearance when picking grasps
    int max_motion_steps = 6000;      // per-skill tick budget
};

struct SkillOutcome {
    SkillKind kind = SkillKind::insert;
    int clip_id = -1;
    bool collided = false;
    InsertionIndicators indicators_after;
    int duration_steps = 0;
};

/// Index (1-based) the insertion primitive grasps for grasp_u: position
/// u * (M-1) rounded, within the first grasp_window particles of the
/// contiguous head segment whose gripper placement is collision free.
int insert_grasp_index(const World& world, double grasp_u, const SkillConfig& cfg = {});

/// Grasp, drag through via1 then via2 (effective clip frame), release, settle.
SkillOutcome execute_insert(World& world, const Clip& clip, bool reversed,
                            const InsertParams& params, const SkillConfig& cfg = {},
                            const RewardConfig& rcfg = {});

/// Grasp the foremost free particle and drag it along a wall-avoiding path to
/// the staging pose on the clip center line, heading aligned with the axis.
SkillOutcome execute_pull(World& world, const Clip& clip, bool reversed,
                          const SkillConfig& cfg = {}, const RewardConfig& rcfg = {});

/// Retreat the head straight away from the clip, then re-approach along the
/// center line so the front particles finish straight at the staging pose.
/// No-op (settle only) when the rope is already through the clip.
SkillOutcome execute_flatten(World& world, const Clip& clip, bool reversed,
                             const SkillConfig& cfg = {}, const RewardConfig& rcfg = {});

/// Shortest start->goal polyline avoiding wall rectangles inflated by
/// `clearance` (visibility graph over inflated corners).
std::vector<Vec2> route_around_walls(const Scene& scene, Vec2 start, Vec2 goal,
                                     double clearance);

}  // namespace dlo
