#include "dlo/harness.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dlo/errors.hpp"
#include "dlo/scene_gen.hpp"

namespace dlo {

namespace {

using nlohmann::json;

json indicators_to_json(const InsertionIndicators& ind) {
    return {{"rope_in", ind.rope_in},   {"rope_out", ind.rope_out}, {"collide", ind.collide},
            {"in_region", ind.in_region}, {"d_floor", ind.d_floor},   {"d_ceil", ind.d_ceil},
            {"r_flat", ind.r_flat}};
}

InsertionIndicators indicators_from_json(const json& j) {
    InsertionIndicators ind;
    ind.rope_in = j.at("rope_in").get<bool>();
    ind.rope_out = j.at("rope_out").get<bool>();
    ind.collide = j.at("collide").get<bool>();
    ind.in_region = j.at("in_region").get<bool>();
    ind.d_floor = j.at("d_floor").get<double>();
    ind.d_ceil = j.at("d_ceil").get<double>();
    ind.r_flat = j.at("r_flat").get<double>();
    return ind;
}

Decision::Kind decision_kind_from_name(const std::string& s) {
    if (s == "insert") return Decision::Kind::insert;
    if (s == "pull") return Decision::Kind::pull;
    if (s == "flatten") return Decision::Kind::flatten;
    if (s == "done") return Decision::Kind::done;
    throw ParseError("unknown decision kind '" + s + "'");
}

SkillKind skill_kind_from_name(const std::string& s) {
    if (s == "insert") return SkillKind::insert;
    if (s == "pull") return SkillKind::pull;
    if (s == "flatten") return SkillKind::flatten;
    throw ParseError("unknown skill kind '" + s + "'");
}

Termination termination_from_name(const std::string& s) {
    if (s == "success") return Termination::success;
    if (s == "collision") return Termination::collision;
    if (s == "timeout") return Termination::timeout;
    if (s == "early_termination") return Termination::early_termination;
    throw ParseError("unknown termination '" + s + "'");
}

}  // namespace

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::success: return "success";
        case Termination::collision: return "collision";
        case Termination::timeout: return "timeout";
        case Termination::early_termination: return "early_termination";
    }
    return "?";
}

EpisodeLog run_episode(const Scene& scene, uint64_t seed, Planner& planner,
                       const InsertActor& insert_actor, const EpisodeLimits& limits,
                       bool dump_frames, const RewardConfig& rcfg, const SkillConfig& scfg) {
    EpisodeLog log;
    log.family = scene.family;
    log.planner = planner.name();
    log.scene_json = scene_to_json(scene);
    log.scene_hash = scene_content_hash(scene);
    log.seed = seed;

    World world = spawn_world(scene, seed);
    SkillConfig skill_cfg = scfg;
    skill_cfg.max_motion_steps = limits.per_skill_timeout;
    PlannerStatus status;
    status.max_steps = limits.max_steps;

    RoutePlan plan;
    try {
        plan = planner.plan(observe(world, RoutePlan{}, status, rcfg));
    } catch (const Error&) {
        log.termination = Termination::early_termination;
        return log;
    }
    log.plan = plan;
    log.rope_out_step.assign(plan.order.size(), -1);

    auto reversed_of = [&](int id) {
        for (std::size_t i = 0; i < plan.order.size(); ++i)
            if (plan.order[i] == id) return static_cast<bool>(plan.reversed[i]);
        return false;
    };
    auto stamp_rope_out = [&](int step_index) {
        for (std::size_t i = 0; i < plan.order.size(); ++i) {
            if (log.rope_out_step[i] >= 0) continue;
            const Clip& c = clip_by_id(scene, plan.order[i]);
            if (compute_indicators(world.rope, c, plan.reversed[i], false, rcfg).rope_out)
                log.rope_out_step[i] = step_index;
        }
    };
    auto ordered_success = [&] {
        if (plan.order.empty()) return false;
        for (std::size_t i = 0; i < plan.order.size(); ++i) {
            if (log.rope_out_step[i] < 0) return false;
            if (i > 0 && log.rope_out_step[i] < log.rope_out_step[i - 1]) return false;
        }
        return true;
    };

    stamp_rope_out(0);
    if (dump_frames) log.frames.push_back(world.rope.p);

    PlannerHistory history;
    int insert_calls = 0;
    log.termination = Termination::timeout;
    while (static_cast<int>(log.steps.size()) < limits.max_steps) {
        status.steps_used = static_cast<int>(log.steps.size());
        SceneObservation obs = observe(world, plan, status, rcfg);
        Decision d;
        try {
            d = planner.decide(obs, plan, history);
        } catch (const Error&) {
            log.termination = Termination::early_termination;
            break;
        }
        if (d.kind == Decision::Kind::done) {
            log.termination =
                ordered_success() ? Termination::success : Termination::early_termination;
            break;
        }

        SkillOutcome out;
        RewardBreakdown rb;
        try {
            const Clip& clip = clip_by_id(scene, d.target_clip);
            bool rev = reversed_of(d.target_clip);
            switch (d.kind) {
                case Decision::Kind::insert: {
                    InsertParams p = insert_actor(world, clip, rev);
                    out = execute_insert(world, clip, rev, p, skill_cfg, rcfg);
                    rb = reward_total(out.indicators_after, ++insert_calls, rcfg);
                    break;
                }
                case Decision::Kind::pull:
                    out = execute_pull(world, clip, rev, skill_cfg, rcfg);
                    break;
                case Decision::Kind::flatten:
                    out = execute_flatten(world, clip, rev, skill_cfg, rcfg);
                    break;
                case Decision::Kind::done:
                    break;
            }
        } catch (const SimError&) {
            log.termination = Termination::timeout;
            break;
        } catch (const Error&) {
            log.termination = Termination::early_termination;
            break;
        }

        history.push_back({d, out});
        log.steps.push_back({d, out, rb});
        if (d.kind == Decision::Kind::insert)
            ++status.consecutive_insert_attempts;
        else
            status.consecutive_insert_attempts = 0;
        stamp_rope_out(static_cast<int>(log.steps.size()));
        if (dump_frames) log.frames.push_back(world.rope.p);
        if (out.collided) {
            log.termination = Termination::collision;
            break;
        }
    }

    log.episode_length = static_cast<int>(log.steps.size());
    for (std::size_t i = 0; i < plan.order.size(); ++i) {
        const Clip& c = clip_by_id(scene, plan.order[i]);
        if (compute_indicators(world.rope, c, plan.reversed[i], false, rcfg).rope_out)
            ++log.clips_inserted;
    }
    log.success = log.termination == Termination::success && ordered_success();
    return log;
}

void write_episode_jsonl(const EpisodeLog& log, const std::string& path) {
    json steps = json::array();
    for (const auto& s : log.steps) {
        steps.push_back(
            {{"decision",
              {{"kind", decision_name(s.decision.kind)},
               {"target_clip", s.decision.target_clip},
               {"rationale", s.decision.rationale}}},
             {"outcome",
              {{"kind", skill_name(s.outcome.kind)},
               {"clip_id", s.outcome.clip_id},
               {"collided", s.outcome.collided},
               {"duration_steps", s.outcome.duration_steps},
               {"indicators", indicators_to_json(s.outcome.indicators_after)}}},
             {"reward",
              {{"r_inout", s.reward.r_inout},
               {"r_collide", s.reward.r_collide},
               {"r_hor", s.reward.r_hor},
               {"r_dist", s.reward.r_dist},
               {"r_flat_scaled", s.reward.r_flat_scaled}}}});
    }
    json frames = json::array();
    for (const auto& f : log.frames) {
        json fr = json::array();
        for (const auto& p : f) fr.push_back({p.x, p.y});
        frames.push_back(std::move(fr));
    }
    json j{{"family", log.family},
           {"planner", log.planner},
           {"scene", json::parse(log.scene_json)},
           {"scene_hash", log.scene_hash},
           {"seed", log.seed},
           {"plan", {{"order", log.plan.order}, {"reversed", log.plan.reversed}}},
           {"steps", std::move(steps)},
           {"rope_out_step", log.rope_out_step},
           {"termination", termination_name(log.termination)},
           {"success", log.success},
           {"clips_inserted", log.clips_inserted},
           {"episode_length", log.episode_length},
           {"frames", std::move(frames)}};
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump() << '\n';
    if (!os) throw IoError("short write to '" + path + "'");
}

EpisodeLog read_episode_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw IoError("'" + path + "' is empty");
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("episode log is not valid JSON: ") + e.what());
    }
    EpisodeLog log;
    try {
        log.family = j.at("family").get<std::string>();
        log.planner = j.at("planner").get<std::string>();
        log.scene_json = j.at("scene").dump();
        log.scene_hash = j.at("scene_hash").get<uint64_t>();
        log.seed = j.at("seed").get<uint64_t>();
        log.plan.order = j.at("plan").at("order").get<std::vector<int>>();
        log.plan.reversed = j.at("plan").at("reversed").get<std::vector<bool>>();
        for (const auto& s : j.at("steps")) {
            EpisodeStep step;
            step.decision.kind = decision_kind_from_name(s.at("decision").at("kind"));
            step.decision.target_clip = s.at("decision").at("target_clip").get<int>();
            step.decision.rationale = s.at("decision").at("rationale").get<std::string>();
            step.outcome.kind = skill_kind_from_name(s.at("outcome").at("kind"));
            step.outcome.clip_id = s.at("outcome").at("clip_id").get<int>();
            step.outcome.collided = s.at("outcome").at("collided").get<bool>();
            step.outcome.duration_steps = s.at("outcome").at("duration_steps").get<int>();
            step.outcome.indicators_after = indicators_from_json(s.at("outcome").at("indicators"));
            step.reward.r_inout = s.at("reward").at("r_inout").get<double>();
            step.reward.r_collide = s.at("reward").at("r_collide").get<double>();
            step.reward.r_hor = s.at("reward").at("r_hor").get<double>();
            step.reward.r_dist = s.at("reward").at("r_dist").get<double>();
            step.reward.r_flat_scaled = s.at("reward").at("r_flat_scaled").get<double>();
            log.steps.push_back(std::move(step));
        }
        log.rope_out_step = j.at("rope_out_step").get<std::vector<int>>();
        log.termination = termination_from_name(j.at("termination"));
        log.success = j.at("success").get<bool>();
        log.clips_inserted = j.at("clips_inserted").get<int>();
        log.episode_length = j.at("episode_length").get<int>();
        for (const auto& f : j.at("frames")) {
            std::vector<Vec2> frame;
            for (const auto& p : f) frame.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            log.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("episode log missing field: ") + e.what());
    }
    return log;
}

PlannerFactory rule_planner_factory() { return {"rule", &make_rule_planner}; }
PlannerFactory no_recovery_planner_factory() {
    return {"no_recovery", &make_no_recovery_planner};
}
PlannerFactory fixed_order_planner_factory() {
    return {"fixed_order", &make_fixed_order_planner};
}

RoutingReport evaluate_routing(const std::vector<std::string>& families,
                               const std::vector<PlannerFactory>& planners,
                               const InsertActor& insert_actor, int episodes_per_cell,
                               uint64_t base_seed, int jobs, const EpisodeLimits& limits,
                               std::vector<EpisodeLog>* episode_sink) {
    RoutingReport report;
    report.base_seed = base_seed;
    report.episodes_per_cell = episodes_per_cell;

    for (const auto& family : families) {
        // Every planner sees the identical seeded scene list for this family.
        std::vector<Scene> scenes;
        for (int e = 0; e < episodes_per_cell; ++e)
            scenes.push_back(generate_scene(family, base_seed + static_cast<uint64_t>(e)));

        for (const auto& factory : planners) {
            std::vector<EpisodeLog> logs(static_cast<std::size_t>(episodes_per_cell));
            auto run_one = [&](int e) {
                auto planner = factory.make();
                logs[static_cast<std::size_t>(e)] =
                    run_episode(scenes[static_cast<std::size_t>(e)], scenes[static_cast<std::size_t>(e)].seed,
                                *planner, insert_actor, limits);
            };
            if (jobs <= 1) {
                for (int e = 0; e < episodes_per_cell; ++e) run_one(e);
            } else {
                int workers = std::min(jobs, std::max(episodes_per_cell, 1));
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w)
                    pool.emplace_back([&, w] {
                        for (int e = w; e < episodes_per_cell; e += workers) run_one(e);
                    });
                for (auto& th : pool) th.join();
            }

            CellReport cell;
            cell.family = family;
            cell.planner = factory.name;
            cell.episodes = episodes_per_cell;
            for (const auto& log : logs) {
                cell.success_rate += log.success ? 1.0 : 0.0;
                cell.avg_clips_inserted += log.clips_inserted;
                cell.avg_episode_length += log.episode_length;
                if (log.termination == Termination::collision) ++cell.collisions;
                if (log.termination == Termination::timeout) ++cell.timeouts;
            }
            if (episodes_per_cell > 0) {
                cell.success_rate /= episodes_per_cell;
                cell.avg_clips_inserted /= episodes_per_cell;
                cell.avg_episode_length /= episodes_per_cell;
            }
            report.cells.push_back(cell);
            if (episode_sink)
                episode_sink->insert(episode_sink->end(), logs.begin(), logs.end());
        }
    }
    return report;
}

void write_report_csv(const RoutingReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "family,planner,episodes,success_rate,avg_clips_inserted,avg_episode_length,"
          "collisions,timeouts\n";
    for (const auto& c : report.cells) {
        os << c.family << ',' << c.planner << ',' << c.episodes << ',' << c.success_rate << ','
           << c.avg_clips_inserted << ',' << c.avg_episode_length << ',' << c.collisions << ','
           << c.timeouts << '\n';
    }
    if (!os) throw IoError("short write to '" + path + "'");
}

void write_report_markdown(const RoutingReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "| family | planner | episodes | success | avg clips | avg length | collisions | "
          "timeouts |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : report.cells) {
        os << "| " << c.family << " | " << c.planner << " | " << c.episodes << " | "
           << c.success_rate << " | " << c.avg_clips_inserted << " | " << c.avg_episode_length
           << " | " << c.collisions << " | " << c.timeouts << " |\n";
    }
    if (!os) throw IoError("short write to '" + path + "'");
}

}  // namespace dlo
