#include "dlo/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

const ClipObservation* find_clip(const SceneObservation& obs, int id) {
    for (const auto& c : obs.clips)
        if (c.id == id) return &c;
    return nullptr;
}

// First unrouted clip in plan order; -1 when everything is routed.
int current_target(const SceneObservation& obs, const RoutePlan& plan) {
    for (int id : plan.order) {
        const ClipObservation* c = find_clip(obs, id);
        if (!c) throw StateError("plan references clip " + std::to_string(id) +
                                 " absent from the observation");
        if (!c->routed) return id;
    }
    return -1;
}

int trailing_failed_inserts(const PlannerHistory& history, int target) {
    int n = 0;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->decision.kind == Decision::Kind::insert &&
            it->decision.target_clip == target && !it->outcome.indicators_after.rope_out)
            ++n;
        else
            break;
    }
    return n;
}

}  // namespace

const char* decision_name(Decision::Kind k) {
    switch (k) {
        case Decision::Kind::insert: return "insert";
        case Decision::Kind::pull: return "pull";
        case Decision::Kind::flatten: return "flatten";
        case Decision::Kind::done: return "done";
    }
    return "?";
}

SceneObservation observe(const World& world, const RoutePlan& plan,
                         const PlannerStatus& status, const RewardConfig& rcfg) {
    SceneObservation obs;
    obs.workspace = world.scene.workspace;
    obs.rope = world.rope.p;
    obs.status = status;
    obs.instruction = world.scene.instruction;
    for (const auto& clip : world.scene.clips) {
        ClipObservation c;
        c.id = clip.id;
        c.pose = clip.pose;
        c.scale = clip.scale;
        c.color = clip.color;
        for (std::size_t i = 0; i < plan.order.size(); ++i)
            if (plan.order[i] == clip.id) c.reversed = plan.reversed[i];
        c.indicators = compute_indicators(world.rope, clip, c.reversed, false, rcfg);
        c.routed = c.indicators.rope_out;
        obs.clips.push_back(c);
    }
    obs.zoom_window = obs.workspace;
    int target = -1;
    for (int id : plan.order) {
        const ClipObservation* c = find_clip(obs, id);
        if (c && !c->routed) {
            target = id;
            break;
        }
    }
    if (target >= 0) {
        const ClipObservation& c = *find_clip(obs, target);
        double half = 0.05 + 0.04 * c.scale;  // covers the wall footprint at any scale
        obs.zoom_window = {{c.pose.pos.x - half, c.pose.pos.y - half},
                           {c.pose.pos.x + half, c.pose.pos.y + half}};
    }
    return obs;
}

RoutePlan plan_initial(const SceneObservation& obs) {
    Scene scene;
    scene.workspace = obs.workspace;
    for (const auto& c : obs.clips) {
        Clip clip;
        clip.id = c.id;
        clip.pose = c.pose;
        clip.scale = c.scale;
        clip.color = c.color;
        scene.clips.push_back(clip);
    }
    if (obs.rope.size() >= 2) {
        scene.rope_spawn.pose.pos = obs.rope.front();
        Vec2 d = obs.rope[0] - obs.rope[1];
        scene.rope_spawn.pose.heading = std::atan2(d.y, d.x);
    }
    scene.instruction = obs.instruction;
    return ground_truth_order(scene, parse_instruction(obs.instruction));
}

Decision decide_next(const SceneObservation& obs, const RoutePlan& plan,
                     const PlannerHistory& history, int recovery_threshold) {
    int target = current_target(obs, plan);
    if (target < 0) return {Decision::Kind::done, -1, "all clips routed"};
    const ClipObservation& c = *find_clip(obs, target);
    int fails = trailing_failed_inserts(history, target);
    if (fails >= recovery_threshold)
        return {Decision::Kind::flatten, target,
                std::to_string(fails) + " straight failed inserts; straightening the head"};
    if (c.indicators.in_region && c.indicators.r_flat >= 0.5)
        return {Decision::Kind::insert, target, "head staged and front flat"};
    if (!c.indicators.in_region)
        return {Decision::Kind::pull, target, "head not staged before the clip"};
    return {Decision::Kind::insert, target, "head staged; trying the insert as-is"};
}

Decision decide_next_no_recovery(const SceneObservation& obs, const RoutePlan& plan,
                                 const PlannerHistory& history) {
    return decide_next(obs, plan, history, std::numeric_limits<int>::max());
}

Decision decide_fixed_order(const SceneObservation& obs, const RoutePlan& plan,
                            const PlannerHistory& history) {
    int target = current_target(obs, plan);
    if (target < 0) return {Decision::Kind::done, -1, "all clips routed"};
    if (!history.empty() && history.back().decision.target_clip == target &&
        history.back().decision.kind == Decision::Kind::pull)
        return {Decision::Kind::insert, target, "fixed order: insert after pull"};
    return {Decision::Kind::pull, target, "fixed order: pull first"};
}

namespace {

using DecideFn = Decision (*)(const SceneObservation&, const RoutePlan&,
                              const PlannerHistory&);

class RulePlanner final : public Planner {
public:
    RulePlanner(std::string name, DecideFn fn) : name_(std::move(name)), fn_(fn) {}
    std::string name() const override { return name_; }
    RoutePlan plan(const SceneObservation& obs) override { return plan_initial(obs); }
    Decision decide(const SceneObservation& obs, const RoutePlan& plan,
                    const PlannerHistory& history) override {
        return fn_(obs, plan, history);
    }

private:
    std::string name_;
    DecideFn fn_;
};

}  // namespace

std::unique_ptr<Planner> make_rule_planner() {
    return std::make_unique<RulePlanner>(
        "rule", +[](const SceneObservation& o, const RoutePlan& p, const PlannerHistory& h) {
            return decide_next(o, p, h, kRecoveryThreshold);
        });
}

std::unique_ptr<Planner> make_no_recovery_planner() {
    return std::make_unique<RulePlanner>("no_recovery", &decide_next_no_recovery);
}

std::unique_ptr<Planner> make_fixed_order_planner() {
    return std::make_unique<RulePlanner>("fixed_order", &decide_fixed_order);
}

InsertParams visual_baseline_insert(const World&, const Clip& clip) {
    return InsertParams::clamped(0.0, {-0.04, 0.0, 0.0},
                                 {clip.channel_depth() + 0.03, 0.0, 0.0});
}

}  // namespace dlo
