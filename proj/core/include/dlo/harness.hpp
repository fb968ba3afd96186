#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlo/learn.hpp"
#include "dlo/planner.hpp"
#include "dlo/route.hpp"
#include "dlo/scene.hpp"

namespace dlo {

struct EpisodeLimits {
    int max_steps = 30;          // primitive calls
    int per_skill_timeout = 6000;  // sim ticks inside one primitive
};

enum class Termination { success, collision, timeout, early_termination };
const char* termination_name(Termination t);

struct EpisodeStep {
    Decision decision;
    SkillOutcome outcome;
    RewardBreakdown reward;  // insert decisions only (zeroes otherwise)
};

struct EpisodeLog {
    std::string family;
    std::string planner;
    std::string scene_json;
    uint64_t scene_hash = 0;
    uint64_t seed = 0;
    RoutePlan plan;
    std::vector<EpisodeStep> steps;
    std::vector<int> rope_out_step;  // per plan entry: step index of first rope_out, -1 never
    Termination termination = Termination::early_termination;
    bool success = false;
    int clips_inserted = 0;
    int episode_length = 0;          // primitive calls
    std::vector<std::vector<Vec2>> frames;  // optional rope snapshots for replay
};

/// Drives planner decisions through the skills until done/collision/timeout.
/// success requires every planned clip routed, in plan order (from the
/// rope_out history, not just final state).
EpisodeLog run_episode(const Scene& scene, uint64_t seed, Planner& planner,
                       const InsertActor& insert_actor,
                       const EpisodeLimits& limits = {}, bool dump_frames = false,
                       const RewardConfig& rcfg = {}, const SkillConfig& scfg = {});

void write_episode_jsonl(const EpisodeLog& log, const std::string& path);
EpisodeLog read_episode_jsonl(const std::string& path);

struct CellReport {
    std::string family;
    std::string planner;
    int episodes = 0;
    double success_rate = 0.0;
    double avg_clips_inserted = 0.0;
    double avg_episode_length = 0.0;
    int collisions = 0;
    int timeouts = 0;
};

struct RoutingReport {
    std::vector<CellReport> cells;
    uint64_t base_seed = 0;
    int episodes_per_cell = 0;
    std::string policy_name;
};

struct PlannerFactory {
    std::string name;
    std::function<std::unique_ptr<Planner>()> make;
};

PlannerFactory rule_planner_factory();
PlannerFactory no_recovery_planner_factory();
PlannerFactory fixed_order_planner_factory();

/// Paired evaluation: every planner sees the identical seeded scene list per
/// family. Episodes are deterministic, so the whole report is reproducible.
RoutingReport evaluate_routing(const std::vector<std::string>& families,
                               const std::vector<PlannerFactory>& planners,
                               const InsertActor& insert_actor, int episodes_per_cell,
                               uint64_t base_seed, int jobs = 1,
                               const EpisodeLimits& limits = {},
                               std::vector<EpisodeLog>* episode_sink = nullptr);

void write_report_csv(const RoutingReport& report, const std::string& path);
void write_report_markdown(const RoutingReport& report, const std::string& path);

}  // namespace dlo
