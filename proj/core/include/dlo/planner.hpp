#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dlo/reward.hpp"
#include "dlo/route.hpp"
#include "dlo/scene.hpp"
#include "dlo/sim.hpp"
#include "dlo/skills.hpp"

namespace dlo {

struct ClipObservation {
    int id = 0;
    Pose2 pose;
    double scale = 1.0;
    ClipColor color = ClipColor::red;
    bool reversed = false;
    bool routed = false;  // rope_out for this clip
    InsertionIndicators indicators;
};

struct PlannerStatus {
    int steps_used = 0;
    int max_steps = 30;
    int consecutive_insert_attempts = 0;
};

/// Everything a planner may look at: full view plus a zoom window centered on
/// the current target clip (the window always contains its footprint).
struct SceneObservation {
    std::vector<ClipObservation> clips;
    std::vector<Vec2> rope;
    Rect workspace;
    Rect zoom_window;
    PlannerStatus status;
    std::string instruction;
};

struct Decision {
    enum class Kind { insert, pull, flatten, done };
    Kind kind = Kind::done;
    int target_clip = -1;
    std::string rationale;  // logged, never parsed
};

const char* decision_name(Decision::Kind k);

struct HistoryEntry {
    Decision decision;
    SkillOutcome outcome;
};
using PlannerHistory = std::vector<HistoryEntry>;

SceneObservation observe(const World& world, const RoutePlan& plan,
                         const PlannerStatus& status, const RewardConfig& rcfg = {});

/// Routing order from the instruction embedded in the observation.
RoutePlan plan_initial(const SceneObservation& obs);

inline constexpr int kRecoveryThreshold = 2;  // failed inserts before flatten

/// Rule-based policy: advance past routed clips; flatten after
/// kRecoveryThreshold consecutive failed inserts; insert when the head is
/// staged in the region; pull otherwise; done when everything is routed.
Decision decide_next(const SceneObservation& obs, const RoutePlan& plan,
                     const PlannerHistory& history,
                     int recovery_threshold = kRecoveryThreshold);

/// Ablation: same rules with the flatten branch removed.
Decision decide_next_no_recovery(const SceneObservation& obs, const RoutePlan& plan,
                                 const PlannerHistory& history);

/// Ablation: strict pull/insert alternation per clip, advancing on rope_out.
Decision decide_fixed_order(const SceneObservation& obs, const RoutePlan& plan,
                            const PlannerHistory& history);

/// Planner interface used by the episode harness.
class Planner {
public:
    virtual ~Planner() = default;
    virtual std::string name() const = 0;
    virtual RoutePlan plan(const SceneObservation& obs) = 0;
    virtual Decision decide(const SceneObservation& obs, const RoutePlan& plan,
                            const PlannerHistory& history) = 0;
};

std::unique_ptr<Planner> make_rule_planner();         // with failure recovery
std::unique_ptr<Planner> make_no_recovery_planner();
std::unique_ptr<Planner> make_fixed_order_planner();

/// Open-loop insertion script: grasp the head, stage on the center line 4 cm
/// before the floor, then drive to channel_depth + 3 cm past it.
InsertParams visual_baseline_insert(const World& world, const Clip& clip);

}  // namespace dlo
