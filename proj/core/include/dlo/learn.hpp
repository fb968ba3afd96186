#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dlo/policy.hpp"
#include "dlo/reward.hpp"
#include "dlo/skills.hpp"

namespace dlo {

/// Single-clip insertion episode environment shared by SAC, CEM and the
/// low-level evaluator. One env step = one insertion primitive.
class InsertionEnv {
public:
    InsertionEnv(uint64_t seed, double clip_scale, const RewardConfig& rcfg = {},
                 const SkillConfig& scfg = {}, int max_calls = 7);

    Vec observe() const;
    struct StepResult {
        RewardBreakdown reward;
        InsertionIndicators indicators;
        bool done = false;       // success or collision
        bool truncated = false;  // call budget exhausted
        bool collided = false;
    };
    StepResult step(const InsertParams& action);

    int calls_used() const { return calls_; }
    const World& world() const { return world_; }
    const Clip& clip() const { return world_.scene.clips.front(); }

private:
    World world_;
    RewardConfig rcfg_;
    SkillConfig scfg_;
    int max_calls_ = 7;
    int calls_ = 0;
};

struct TrainerConfig {
    int total_steps = 6200;
    int curriculum_switch = 1600;   // env steps; phase 1 before, phase 2 after
    double phase1_scale_lo = 1.0;
    double phase1_scale_hi = 2.2;
    double phase2_scale_lo = 0.9;
    double phase2_scale_hi = 1.5;
    int max_primitive_calls = 7;
    double discount = 0.99;
    double lr = 3e-4;
    double tau = 0.005;
    int replay_capacity = 10000;
    int batch = 128;
    int warmup_steps = 200;
    int updates_per_step = 1;
    // Critic-only updates until this env step: the actor holds its
    // initialization while the value estimate settles, otherwise the first
    // few hundred actor steps follow an untrained critic away from the
    // narrow region where insertions happen and never find the way back.
    int critic_warmup_steps = 1200;
    double entropy_target = -7.0;   // -action dim
    int hidden = 64;
    RewardConfig reward;
    SkillConfig skills;
};

TrainerConfig trainer_config_from_json(const std::string& text);

struct StepRecord {
    int step = 0;
    double clip_scale = 0.0;
    double reward = 0.0;
    double critic_loss = 0.0;
    double episode_return = 0.0;  // return of the episode that ended here, else nan
    double success_ma = 0.0;      // moving average over the last 50 episodes
};

struct TrainResult {
    Policy policy;
    std::vector<StepRecord> curve;
    int episodes = 0;
};

/// Soft actor-critic over the insertion primitive. Deterministic per
/// (config, seed). Throws SimError("divergence...") on non-finite losses.
TrainResult train_insertion(const TrainerConfig& cfg, uint64_t seed);

void write_training_curve_csv(const std::vector<StepRecord>& curve,
                              const std::string& path);

/// Central finite differences (h = 1e-5) against the analytic gradients of
/// the critic and actor losses on a probe batch. Returns the max relative
/// error seen, per loss.
struct GradCheckReport {
    double critic_max_rel_err = 0.0;
    double actor_max_rel_err = 0.0;
};
GradCheckReport grad_check(const Policy& policy, uint64_t seed);

/// Population refit over a linear feature->action map; optimizer-independent
/// environment sanity check.
struct CemConfig {
    int population = 24;
    int elites = 6;
    int generations = 30;
    double init_std = 1.0;
    double min_std = 0.05;
    int episodes_per_candidate = 2;
    double clip_scale = 1.3;
    int max_primitive_calls = 4;
    RewardConfig reward;
    SkillConfig skills;
};

struct CemResult {
    Policy policy;                     // linear actor (23 -> 7)
    std::vector<double> best_returns;  // per generation
    std::vector<double> mean_returns;
};

CemResult cem_train(const CemConfig& cfg, uint64_t seed);
CemResult cem_train(const CemConfig& cfg, uint64_t seed, const Vec& init_mean,
                    double init_std);

using InsertActor = std::function<InsertParams(const World& world, const Clip& clip,
                                               bool reversed)>;

InsertActor actor_from_policy(const Policy& policy);

/// The open-loop center-line script used as the comparison baseline: grasp the
/// head, stage 4 cm before the floor, push toward channel_depth + 3 cm. One
/// call per attempt.
InsertActor visual_baseline_actor(const SkillConfig& cfg = {});

/// Hand-tuned closed-loop geometric script (stage the front on the axis, then
/// a deep push). Reference upper bound and test oracle, not a baseline.
InsertActor scripted_insert_actor(const SkillConfig& cfg = {});

struct LowLevelReport {
    int episodes = 0;
    double success_rate = 0.0;
    double avg_signed_distance = 0.0;
    double avg_episode_length = 0.0;  // primitive calls
    double collision_rate = 0.0;
};

/// Seeded single-clip episodes at scale 1.0 with the training spawn
/// randomization. Episodes are independent; jobs > 1 fans them out with
/// seed-ordered aggregation.
LowLevelReport evaluate_lowlevel(const InsertActor& actor, int episodes,
                                 uint64_t seed, int max_calls = 7, int jobs = 1,
                                 const RewardConfig& rcfg = {},
                                 const SkillConfig& scfg = {});

}  // namespace dlo
