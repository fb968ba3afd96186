#include "dlo/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dlo/errors.hpp"
#include "dlo/instruction.hpp"
#include "dlo/rng.hpp"
#include "dlo/route.hpp"
#include "dlo/skills.hpp"

namespace dlo {

namespace {

constexpr int kMaxAttempts = 200000;  // attempts are ~microseconds; clip4 packs tightly
constexpr double kSpawnLead = 0.12;       // head spawns this far before clip 0
constexpr double kClipMargin = 0.02;      // footprint to workspace edge
constexpr double kPointMargin = 0.03;     // gripper waypoints to workspace edge
constexpr double kPairClearance = 0.06;   // between clip footprints
constexpr double kSpawnClearance = 0.05;  // spawn line to any footprint
constexpr double kRankSeparation = 0.02;  // spatial tokens stay resolvable

constexpr double kMildTurn = 0.2617993877991494;   // 15 deg
constexpr double kSharpTurnLo = 1.6580627893946132;  // 95 deg
constexpr double kSharpTurnHi = 2.2689280275926285;  // 130 deg

struct ChainSpec {
    int n = 3;
    int sharp_at = -1;  // index whose approach turns sharply, -1 for none
    double mild_lo = 0.16, mild_hi = 0.18;
    double sharp_lo = 0.21, sharp_hi = 0.22;
    double rope_length = 0.54;
};

template <typename T>
void shuffle_with(Rng& rng, std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
        std::swap(v[i], v[static_cast<std::size_t>(rng.uniform_int(0, i))]);
}

double segment_quad_distance(Vec2 a, Vec2 b, const Quad& q) {
    if (point_in_quad(q, a) || point_in_quad(q, b)) return 0.0;
    double best = segment_point_distance(a, b, q[0]);
    for (int i = 0; i < 4; ++i) {
        best = std::min(best, segment_segment_distance(a, b, q[i], q[(i + 1) % 4]));
    }
    return best;
}

double point_to_clips_distance(Vec2 p, const std::vector<Clip>& clips, int skip_id) {
    double best = 1e9;
    for (const auto& c : clips) {
        if (c.id == skip_id) continue;
        for (const auto& q : c.footprint()) {
            double d = segment_quad_distance(p, p, q);
            best = std::min(best, d);
        }
    }
    return best;
}

bool footprints_in_workspace(const Scene& scene) {
    Rect shrunk{scene.workspace.lo + Vec2{kClipMargin, kClipMargin},
                scene.workspace.hi - Vec2{kClipMargin, kClipMargin}};
    for (const auto& c : scene.clips) {
        for (const auto& q : c.footprint()) {
            for (const auto& v : q) {
                if (!shrunk.contains(v)) return false;
            }
        }
    }
    return true;
}

bool skill_points_ok(const Scene& scene, int sharp_at, const SkillConfig& skills) {
    Rect shrunk{scene.workspace.lo + Vec2{kPointMargin, kPointMargin},
                scene.workspace.hi - Vec2{kPointMargin, kPointMargin}};
    for (const auto& c : scene.clips) {
        Vec2 axis = dir_of(c.pose.heading);
        Vec2 staging = c.pose.pos - skills.staging_distance * axis;
        Vec2 rear = c.pose.pos - skills.flatten_align * axis;
        Vec2 exit = c.pose.pos + (c.channel_depth() + 0.04) * axis;
        if (!shrunk.contains(staging) || !shrunk.contains(rear) || !shrunk.contains(exit))
            return false;
        // pull goal must sit outside the inflated obstacles of other clips
        if (point_to_clips_distance(staging, scene.clips, c.id) < skills.clearance + 0.015)
            return false;
        // the flatten run has to start on-axis; guarantee that where it matters
        if (c.id == sharp_at &&
            point_to_clips_distance(rear, scene.clips, c.id) < 0.02)
            return false;
    }
    return true;
}

bool spawn_line_clear(const Scene& scene) {
    const auto& sp = scene.rope_spawn;
    Vec2 head = sp.pose.pos;
    Vec2 tail = head - (sp.length - 0.01) * dir_of(sp.pose.heading);
    for (const auto& c : scene.clips) {
        for (const auto& q : c.footprint()) {
            if (segment_quad_distance(head, tail, q) < kSpawnClearance) return false;
        }
    }
    return true;
}

bool pick_spawn_heading(Rng& rng, Scene& scene, double chain_heading) {
    std::vector<double> offsets;
    for (double deg : {90.0, 75.0, 105.0, 60.0, 120.0, 45.0, 135.0, 30.0, 150.0}) {
        offsets.push_back(deg * M_PI / 180.0);
        offsets.push_back(-deg * M_PI / 180.0);
    }
    shuffle_with(rng, offsets);

    const auto& sp = scene.rope_spawn;
    double rest = sp.length / (sp.particles - 1);
    for (double off : offsets) {
        double heading = wrap_angle(chain_heading + off);
        Vec2 body = dir_of(heading);
        bool ok = true;
        for (int i = 0; i < sp.particles; ++i) {
            // worst-case jitter: whole-pose shift plus rotation about the head
            double m = std::max(sp.jitter_x, sp.jitter_y) +
                       i * rest * sp.jitter_heading + 0.005;
            Vec2 p = sp.pose.pos - (i * rest) * body;
            Rect shrunk{scene.workspace.lo + Vec2{m, m}, scene.workspace.hi - Vec2{m, m}};
            if (shrunk.lo.x >= shrunk.hi.x || shrunk.lo.y >= shrunk.hi.y || !shrunk.contains(p)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        scene.rope_spawn.pose.heading = heading;
        if (spawn_line_clear(scene)) return true;
    }
    return false;
}

std::vector<ClipColor> pick_colors(Rng& rng, int n) {
    std::vector<ClipColor> palette = {ClipColor::red, ClipColor::green, ClipColor::blue,
                                      ClipColor::yellow};
    shuffle_with(rng, palette);
    palette.resize(static_cast<std::size_t>(n));
    return palette;
}

// Spatial rank tokens for the 3 chain clips, or empty when clips are too
// close on both axes to name unambiguously.
std::vector<std::string> spatial_tokens(Rng& rng, const std::vector<Clip>& clips) {
    auto ranks_on = [&](bool on_x) -> std::vector<int> {
        std::vector<int> idx = {0, 1, 2};
        auto val = [&](int i) {
            return on_x ? clips[static_cast<std::size_t>(i)].pose.pos.x
                        : clips[static_cast<std::size_t>(i)].pose.pos.y;
        };
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val(a) < val(b); });
        if (val(idx[1]) - val(idx[0]) < kRankSeparation ||
            val(idx[2]) - val(idx[1]) < kRankSeparation)
            return {};
        std::vector<int> rank(3);
        for (int r = 0; r < 3; ++r) rank[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] = r;
        return rank;
    };

    std::vector<std::string> names;
    std::vector<int> rank = ranks_on(true);
    if (!rank.empty()) {
        names = {"leftmost", "middle", "rightmost"};
    } else {
        rank = ranks_on(false);
        if (rank.empty()) return {};
        names = rng.uniform01() < 0.5 ? std::vector<std::string>{"bottom", "middle", "top"}
                                      : std::vector<std::string>{"front", "middle", "back"};
    }
    std::vector<std::string> tokens;
    for (int i = 0; i < 3; ++i) tokens.push_back(names[static_cast<std::size_t>(rank[static_cast<std::size_t>(i)])]);
    return tokens;
}

std::string join_instruction(const std::vector<std::string>& tokens) {
    std::string text = "route the cable through the " + tokens[0] + " clip";
    for (std::size_t i = 1; i < tokens.size(); ++i) text += ", then the " + tokens[i] + " clip";
    return text;
}

bool verify_ground_truth(const Scene& scene) {
    try {
        Instruction ins = parse_instruction(scene.instruction);
        RoutePlan plan = ground_truth_order(scene, ins);
        for (std::size_t i = 0; i < plan.order.size(); ++i) {
            if (plan.order[i] != static_cast<int>(i)) return false;
            if (plan.reversed[i]) return false;
        }
        return plan.order.size() == scene.clips.size();
    } catch (const Error&) {
        return false;
    }
}

bool try_generate(const std::string& family, uint64_t seed, Rng& rng, Scene& out) {
    SkillConfig skills;
    ChainSpec spec;
    bool want_spatial_tokens = false, want_color_tokens = false;
    if (family == "implicit3") {
        spec.n = 3;
        spec.rope_length = 0.52;
    } else if (family == "spatial3") {
        spec.n = 3;
        spec.sharp_at = rng.uniform_int(1, 2);
        want_spatial_tokens = true;
    } else if (family == "attribute3") {
        spec.n = 3;
        spec.sharp_at = rng.uniform_int(1, 2);
        want_color_tokens = true;
    } else if (family == "clip4") {
        spec.n = 4;
        spec.sharp_at = rng.uniform01() < 0.5 ? 1 : 3;
        spec.mild_hi = 0.175;
        spec.rope_length = 0.66;
        want_color_tokens = true;
    } else if (family == "single") {
        spec.n = 1;
        spec.rope_length = 0.40;
    }

    Scene scene;
    scene.family = family;
    scene.seed = seed;

    Rect spawn_box{scene.workspace.lo + Vec2{0.10, 0.10}, scene.workspace.hi - Vec2{0.10, 0.10}};
    Vec2 center{rng.uniform(spawn_box.lo.x, spawn_box.hi.x),
                rng.uniform(spawn_box.lo.y, spawn_box.hi.y)};
    double heading = rng.uniform(-M_PI, M_PI);

    auto colors = pick_colors(rng, spec.n);
    for (int i = 0; i < spec.n; ++i) {
        if (i > 0) {
            bool sharp = (i == spec.sharp_at);
            double turn = sharp ? (rng.uniform01() < 0.5 ? 1.0 : -1.0) *
                                      rng.uniform(kSharpTurnLo, kSharpTurnHi)
                                : rng.uniform(-kMildTurn, kMildTurn);
            double spacing = sharp ? rng.uniform(spec.sharp_lo, spec.sharp_hi)
                                   : rng.uniform(spec.mild_lo, spec.mild_hi);
            heading = wrap_angle(heading + turn);
            center += spacing * dir_of(heading);
        }
        Clip c;
        c.id = i;
        c.pose = {center, heading};
        c.scale = 1.0;
        c.color = colors[static_cast<std::size_t>(i)];
        scene.clips.push_back(c);
    }

    if (!footprints_in_workspace(scene)) return false;
    for (std::size_t i = 0; i < scene.clips.size(); ++i) {
        for (std::size_t j = i + 1; j < scene.clips.size(); ++j) {
            if (clip_clearance(scene.clips[i], scene.clips[j]) < kPairClearance) return false;
        }
    }
    if (!skill_points_ok(scene, spec.sharp_at, skills)) return false;

    const Clip& first = scene.clips.front();
    scene.rope_spawn.length = spec.rope_length;
    scene.rope_spawn.particles = static_cast<int>(std::lround(spec.rope_length / 0.01));
    scene.rope_spawn.pose.pos = first.pose.pos - kSpawnLead * dir_of(first.pose.heading);
    if (!pick_spawn_heading(rng, scene, first.pose.heading)) return false;

    if (want_spatial_tokens) {
        auto tokens = spatial_tokens(rng, scene.clips);
        if (tokens.empty()) return false;
        scene.instruction = join_instruction(tokens);
    } else if (want_color_tokens) {
        std::vector<std::string> tokens;
        for (const auto& c : scene.clips) tokens.push_back(color_name(c.color));
        scene.instruction = join_instruction(tokens);
    } else {
        scene.instruction = "route the cable through all clips in a natural order";
    }

    if (!verify_ground_truth(scene)) return false;
    out = scene;
    return true;
}

uint64_t family_salt(const std::string& family) {
    uint64_t h = 1469598103934665603ull;
    for (char c : family) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

bool is_known_family(const std::string& family) {
    return family == "implicit3" || family == "spatial3" || family == "attribute3" ||
           family == "clip4" || family == "single";
}

double max_consecutive_turn(const std::vector<Clip>& clips) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < clips.size(); ++i) {
        worst = std::max(
            worst, std::abs(wrap_angle(clips[i + 1].pose.heading - clips[i].pose.heading)));
    }
    return worst;
}

bool family_constraint_ok(const Scene& scene) {
    constexpr double kMild = M_PI / 4.0, kSharp = M_PI / 2.0;
    const auto& clips = scene.clips;
    auto turn = [&](std::size_t i) {
        return std::abs(wrap_angle(clips[i + 1].pose.heading - clips[i].pose.heading));
    };
    auto colors_distinct = [&] {
        for (std::size_t i = 0; i < clips.size(); ++i) {
            for (std::size_t j = i + 1; j < clips.size(); ++j) {
                if (clips[i].color == clips[j].color) return false;
            }
        }
        return true;
    };

    if (scene.family == "single") return clips.size() == 1;
    if (scene.family == "implicit3")
        return clips.size() == 3 && max_consecutive_turn(clips) <= kMild;
    if (scene.family == "spatial3")
        return clips.size() == 3 && max_consecutive_turn(clips) > kSharp;
    if (scene.family == "attribute3")
        return clips.size() == 3 && max_consecutive_turn(clips) > kSharp && colors_distinct();
    if (scene.family == "clip4") {
        if (clips.size() != 4 || !colors_distinct()) return false;
        bool front_mild = turn(0) <= kMild && turn(1) <= kMild;  // clip 3 appended at the back
        bool back_mild = turn(1) <= kMild && turn(2) <= kMild;   // clip 0 joined at the front
        return front_mild || back_mild;
    }
    return false;
}

Scene generate_scene(const std::string& family, uint64_t seed) {
    if (!is_known_family(family)) throw GenerationError("unknown scene family '" + family + "'");
    Rng rng(family_salt(family) ^ (seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    Scene scene;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        if (try_generate(family, seed, rng, scene)) return scene;
    }
    throw GenerationError("could not generate a '" + family + "' scene for seed " +
                          std::to_string(seed) + " within " + std::to_string(kMaxAttempts) +
                          " attempts");
}

}  // namespace dlo
