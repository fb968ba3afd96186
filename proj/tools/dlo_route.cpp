#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dlo/config.hpp"
#include "dlo/errors.hpp"
#include "dlo/harness.hpp"
#include "dlo/learn.hpp"
#include "dlo/llm.hpp"
#include "dlo/render.hpp"
#include "dlo/scene_gen.hpp"

namespace {

struct GlobalOpts {
    bool quiet = false;
    int jobs = 1;
    std::string config_path;
};

std::ostream& info(const GlobalOpts& g) {
    static std::ofstream null_sink;
    if (g.quiet) {
        null_sink.setstate(std::ios::badbit);
        return null_sink;
    }
    return std::cout;
}

dlo::InsertActor resolve_actor(const std::string& policy_path, bool baseline, bool scripted) {
    int picked = (baseline ? 1 : 0) + (scripted ? 1 : 0) + (policy_path.empty() ? 0 : 1);
    if (picked != 1)
        throw dlo::ConfigError("pass exactly one of --policy, --baseline or --scripted");
    if (baseline) return dlo::visual_baseline_actor();
    if (scripted) return dlo::scripted_insert_actor();
    return dlo::actor_from_policy(dlo::load_policy(policy_path));
}

int cmd_gen_scenes(const GlobalOpts& g, const std::string& family, int count, uint64_t seed,
                   const std::string& out_dir, bool render) {
    if (!dlo::is_known_family(family))
        throw dlo::ConfigError("unknown scene family '" + family + "'");
    std::filesystem::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        uint64_t s = seed + static_cast<uint64_t>(i);
        dlo::Scene scene = dlo::generate_scene(family, s);
        std::string stem = out_dir + "/" + family + "_" + std::to_string(s);
        dlo::save_scene(scene, stem + ".json");
        if (render) {
            dlo::World w = dlo::spawn_world(scene, s);
            dlo::write_png(dlo::render_view(scene, w.rope.p, scene.workspace, 720), stem + ".png");
        }
        info(g) << stem << ".json  \"" << scene.instruction << "\"\n";
    }
    return 0;
}

int cmd_train(const GlobalOpts& g, uint64_t seed, const std::string& policy_out,
              const std::string& curve_out) {
    dlo::TrainerConfig cfg;
    if (!g.config_path.empty())
        cfg = dlo::trainer_config_from_json(dlo::load_config_text(g.config_path, "dlo-train/1"));
    info(g) << "training sac for " << cfg.total_steps << " env steps (seed " << seed << ")\n";
    dlo::TrainResult result = dlo::train_insertion(cfg, seed);
    dlo::save_policy(result.policy, policy_out);
    if (!curve_out.empty()) dlo::write_training_curve_csv(result.curve, curve_out);
    double ma = result.curve.empty() ? 0.0 : result.curve.back().success_ma;
    info(g) << "episodes " << result.episodes << "  final success moving-avg " << ma
            << "  policy -> " << policy_out << "\n";
    return 0;
}

int cmd_eval_lowlevel(const GlobalOpts& g, const std::string& policy_path, bool baseline,
                       bool scripted, int episodes, uint64_t seed, int max_calls,
                       const std::string& json_out) {
    dlo::InsertActor actor = resolve_actor(policy_path, baseline, scripted);
    dlo::LowLevelReport rep =
        dlo::evaluate_lowlevel(actor, episodes, seed, max_calls, g.jobs);
    info(g) << "episodes " << rep.episodes << "\nsuccess_rate " << rep.success_rate
            << "\navg_signed_distance_m " << rep.avg_signed_distance << "\navg_episode_length "
            << rep.avg_episode_length << "\ncollision_rate " << rep.collision_rate << "\n";
    if (!json_out.empty()) {
        nlohmann::json j{{"episodes", rep.episodes},
                         {"success_rate", rep.success_rate},
                         {"avg_signed_distance", rep.avg_signed_distance},
                         {"avg_episode_length", rep.avg_episode_length},
                         {"collision_rate", rep.collision_rate}};
        dlo::write_text_file(json_out, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_eval_routing(const GlobalOpts& g, const std::vector<std::string>& families,
                     const std::vector<std::string>& planner_names, const std::string& policy_path,
                     bool baseline, bool scripted, int episodes, uint64_t seed,
                     const std::string& csv_out, const std::string& md_out,
                     const std::string& episodes_dir) {
    dlo::InsertActor actor = resolve_actor(policy_path, baseline, scripted);
    std::vector<dlo::PlannerFactory> planners;
    for (const auto& name : planner_names) {
        if (name == "rule") planners.push_back(dlo::rule_planner_factory());
        else if (name == "no_recovery") planners.push_back(dlo::no_recovery_planner_factory());
        else if (name == "fixed_order") planners.push_back(dlo::fixed_order_planner_factory());
        else if (name == "llm") {
            dlo::LlmConfig cfg;
            if (!g.config_path.empty())
                cfg = dlo::llm_config_from_json(dlo::load_config_text(g.config_path, "dlo-llm/1"));
            planners.push_back({"llm", [cfg] { return std::make_unique<dlo::LlmPlanner>(cfg); }});
        } else {
            throw dlo::ConfigError("unknown planner '" + name + "'");
        }
    }
    for (const auto& f : families)
        if (!dlo::is_known_family(f)) throw dlo::ConfigError("unknown scene family '" + f + "'");

    std::vector<dlo::EpisodeLog> logs;
    dlo::RoutingReport rep = dlo::evaluate_routing(families, planners, actor, episodes, seed,
                                                   g.jobs, {}, &logs);
    rep.policy_name = baseline ? "baseline" : (scripted ? "scripted" : policy_path);
    for (const auto& c : rep.cells)
        info(g) << c.family << " / " << c.planner << ": success " << c.success_rate
                << ", avg clips " << c.avg_clips_inserted << ", avg len " << c.avg_episode_length
                << "\n";
    if (!csv_out.empty()) dlo::write_report_csv(rep, csv_out);
    if (!md_out.empty()) dlo::write_report_markdown(rep, md_out);
    if (!episodes_dir.empty()) {
        std::filesystem::create_directories(episodes_dir);
        for (std::size_t i = 0; i < logs.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "episode_%04zu.jsonl", i);
            dlo::write_episode_jsonl(logs[i], episodes_dir + "/" + name);
        }
    }
    return 0;
}

int cmd_replay(const GlobalOpts& g, const std::string& episode_path, const std::string& out_dir,
               int width_px) {
    dlo::EpisodeLog log = dlo::read_episode_jsonl(episode_path);
    if (log.frames.empty())
        throw dlo::StateError("episode log has no frames; re-run with frame dumping on");
    dlo::Scene scene = dlo::scene_from_json(log.scene_json);
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < log.frames.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "frame_%04zu.png", i);
        dlo::write_png(dlo::render_view(scene, log.frames[i], scene.workspace, width_px),
                       out_dir + "/" + name);
    }
    info(g) << log.frames.size() << " frames -> " << out_dir << "\n";
    return 0;
}

int cmd_grad_check(const GlobalOpts& g, const std::string& policy_path, uint64_t seed) {
    dlo::Policy policy =
        policy_path.empty() ? dlo::make_untrained_policy(seed) : dlo::load_policy(policy_path);
    dlo::GradCheckReport rep = dlo::grad_check(policy, seed);
    info(g) << "critic max rel err " << rep.critic_max_rel_err << "\nactor max rel err "
            << rep.actor_max_rel_err << "\n";
    return rep.critic_max_rel_err < 1e-4 && rep.actor_max_rel_err < 1e-4 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dlo-route: deterministic rope routing with hierarchical skills"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_flag("-q,--quiet", g.quiet, "suppress progress output");
    app.add_option("-j,--jobs", g.jobs, "worker threads for evaluation fan-out")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", g.config_path, "JSON config file for the subcommand");

    auto* gen = app.add_subcommand("gen-scenes", "generate seeded scenes");
    std::string gen_family = "implicit3", gen_out = "scenes";
    int gen_count = 10;
    uint64_t gen_seed = 1;
    bool gen_render = false;
    gen->add_option("--family", gen_family, "implicit3|spatial3|attribute3|clip4|single");
    gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out-dir", gen_out);
    gen->add_flag("--render", gen_render, "also write a PNG per scene");

    auto* train = app.add_subcommand("train", "train the insertion policy (sac)");
    uint64_t train_seed = 7;
    std::string train_policy = "policy.dlo", train_curve;
    train->add_option("--seed", train_seed);
    train->add_option("--policy-out", train_policy);
    train->add_option("--curve-out", train_curve, "training curve CSV path");

    auto* ell = app.add_subcommand("eval-lowlevel", "single-clip insertion evaluation");
    std::string ell_policy, ell_json;
    bool ell_baseline = false, ell_scripted = false;
    int ell_episodes = 100, ell_max_calls = 7;
    uint64_t ell_seed = 7;
    ell->add_option("--policy", ell_policy, "policy file");
    ell->add_flag("--baseline", ell_baseline, "open-loop visual baseline (one call per episode)");
    ell->add_flag("--scripted", ell_scripted, "closed-loop geometric oracle script");
    ell->add_option("--episodes", ell_episodes)->check(CLI::PositiveNumber);
    ell->add_option("--seed", ell_seed);
    ell->add_option("--max-calls", ell_max_calls)->check(CLI::PositiveNumber);
    ell->add_option("--json-out", ell_json);

    auto* evr = app.add_subcommand("eval-routing", "multi-clip routing evaluation");
    std::vector<std::string> evr_families{"implicit3", "spatial3", "attribute3"};
    std::vector<std::string> evr_planners{"rule"};
    std::string evr_policy, evr_csv, evr_md, evr_episodes_dir;
    bool evr_baseline = false, evr_scripted = false;
    int evr_episodes = 40;
    uint64_t evr_seed = 7;
    evr->add_option("--families", evr_families)->delimiter(',');
    evr->add_option("--planners", evr_planners, "rule|no_recovery|fixed_order|llm")
        ->delimiter(',');
    evr->add_option("--policy", evr_policy);
    evr->add_flag("--baseline", evr_baseline);
    evr->add_flag("--scripted", evr_scripted);
    evr->add_option("--episodes", evr_episodes)->check(CLI::PositiveNumber);
    evr->add_option("--seed", evr_seed);
    evr->add_option("--csv-out", evr_csv);
    evr->add_option("--md-out", evr_md);
    evr->add_option("--episodes-dir", evr_episodes_dir, "write one JSONL per episode");

    auto* rep = app.add_subcommand("replay", "render episode frames to PNGs");
    std::string rep_episode, rep_out = "replay";
    int rep_width = 720;
    rep->add_option("--episode", rep_episode)->required();
    rep->add_option("--out-dir", rep_out);
    rep->add_option("--width", rep_width)->check(CLI::PositiveNumber);

    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient check");
    std::string gc_policy;
    uint64_t gc_seed = 7;
    gc->add_option("--policy", gc_policy, "policy file (default: fresh init)");
    gc->add_option("--seed", gc_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_scenes(g, gen_family, gen_count, gen_seed, gen_out, gen_render);
        if (train->parsed()) return cmd_train(g, train_seed, train_policy, train_curve);
        if (ell->parsed()) {
            if (ell_baseline && ell->count("--max-calls") == 0) ell_max_calls = 1;
            return cmd_eval_lowlevel(g, ell_policy, ell_baseline, ell_scripted, ell_episodes,
                                     ell_seed, ell_max_calls, ell_json);
        }
        if (evr->parsed())
            return cmd_eval_routing(g, evr_families, evr_planners, evr_policy, evr_baseline,
                                    evr_scripted, evr_episodes, evr_seed, evr_csv, evr_md,
                                    evr_episodes_dir);
        if (rep->parsed()) return cmd_replay(g, rep_episode, rep_out, rep_width);
        if (gc->parsed()) return cmd_grad_check(g, gc_policy, gc_seed);
    } catch (const dlo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dlo::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const dlo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
