#include "dlo/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dlo/errors.hpp"

namespace dlo {

using nlohmann::json;

const char* color_name(ClipColor c) {
    switch (c) {
        case ClipColor::red: return "red";
        case ClipColor::green: return "green";
        case ClipColor::blue: return "blue";
        case ClipColor::yellow: return "yellow";
    }
    return "red";
}

ClipColor color_from_name(const std::string& name) {
    if (name == "red") return ClipColor::red;
    if (name == "green") return ClipColor::green;
    if (name == "blue") return ClipColor::blue;
    if (name == "yellow") return ClipColor::yellow;
    throw ParseError("unknown clip color: " + name);
}

std::array<Quad, 2> Clip::footprint() const {
    auto rects = wall_rects_local();
    std::array<Quad, 2> out;
    for (int i = 0; i < 2; ++i) {
        const Rect& r = rects[i];
        out[i] = {to_world({r.lo.x, r.lo.y}), to_world({r.hi.x, r.lo.y}),
                  to_world({r.hi.x, r.hi.y}), to_world({r.lo.x, r.hi.y})};
    }
    return out;
}

Pose2 effective_clip_pose(const Clip& clip, bool reversed) {
    if (!reversed) return clip.pose;
    return {clip.to_world({clip.channel_depth(), 0.0}),
            wrap_angle(clip.pose.heading + M_PI)};
}

double clip_clearance(const Clip& a, const Clip& b) {
    auto fa = a.footprint();
    auto fb = b.footprint();
    double best = 1e300;
    for (const auto& qa : fa)
        for (const auto& qb : fb) best = std::min(best, quad_distance(qa, qb));
    return best;
}

const Clip& clip_by_id(const Scene& scene, int id) {
    for (const auto& c : scene.clips)
        if (c.id == id) return c;
    throw StateError("no clip with id " + std::to_string(id));
}

namespace {

json rect_to_json(const Rect& r) {
    return {{"min_x", r.lo.x}, {"min_y", r.lo.y}, {"max_x", r.hi.x}, {"max_y", r.hi.y}};
}

Rect rect_from_json(const json& j) {
    Rect r{{j.at("min_x").get<double>(), j.at("min_y").get<double>()},
           {j.at("max_x").get<double>(), j.at("max_y").get<double>()}};
    if (!(r.lo.x < r.hi.x) || !(r.lo.y < r.hi.y))
        throw ParseError("scene: degenerate workspace rect");
    return r;
}

double finite(const json& j, const char* field) {
    double v = j.at(field).get<double>();
    if (!std::isfinite(v)) throw ParseError(std::string("scene: non-finite field ") + field);
    return v;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
    json j;
    j["schema"] = "dlo-scene/1";
    j["family"] = scene.family;
    j["seed"] = scene.seed;
    j["workspace"] = rect_to_json(scene.workspace);
    j["instruction"] = scene.instruction;
    json clips = json::array();
    for (const auto& c : scene.clips) {
        clips.push_back({{"id", c.id},
                         {"x", c.pose.pos.x},
                         {"y", c.pose.pos.y},
                         {"heading_rad", c.pose.heading},
                         {"scale", c.scale},
                         {"color", color_name(c.color)}});
    }
    j["clips"] = clips;
    const RopeSpawn& s = scene.rope_spawn;
    j["rope_spawn"] = {{"x", s.pose.pos.x},
                       {"y", s.pose.pos.y},
                       {"heading_rad", s.pose.heading},
                       {"jitter_x", s.jitter_x},
                       {"jitter_y", s.jitter_y},
                       {"jitter_heading_rad", s.jitter_heading},
                       {"length", s.length},
                       {"particles", s.particles}};
    return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene: invalid json: ") + e.what());
    }
    try {
        if (!j.contains("schema")) throw ParseError("scene: missing field schema");
        if (j.at("schema").get<std::string>() != "dlo-scene/1")
            throw ParseError("scene: unsupported schema " + j.at("schema").dump());
        Scene s;
        s.family = j.value("family", std::string("custom"));
        s.seed = j.value("seed", 0ull);
        s.workspace = rect_from_json(j.at("workspace"));
        s.instruction = j.value("instruction", std::string());
        int expected_id = 0;
        for (const auto& cj : j.at("clips")) {
            Clip c;
            c.id = cj.at("id").get<int>();
            if (c.id != expected_id++)
                throw ParseError("scene: clip ids must be contiguous from 0, got id " +
                                 std::to_string(c.id));
            c.pose.pos = {finite(cj, "x"), finite(cj, "y")};
            c.pose.heading = finite(cj, "heading_rad");
            c.scale = finite(cj, "scale");
            if (c.scale <= 0.0) throw ParseError("scene: clip scale must be positive");
            c.color = color_from_name(cj.at("color").get<std::string>());
            s.clips.push_back(c);
        }
        const json& sp = j.at("rope_spawn");
        s.rope_spawn.pose.pos = {finite(sp, "x"), finite(sp, "y")};
        s.rope_spawn.pose.heading = finite(sp, "heading_rad");
        s.rope_spawn.jitter_x = sp.value("jitter_x", 0.05);
        s.rope_spawn.jitter_y = sp.value("jitter_y", 0.025);
        s.rope_spawn.jitter_heading = sp.value("jitter_heading_rad", 0.17453292519943295);
        s.rope_spawn.length = sp.value("length", 0.40);
        s.rope_spawn.particles = sp.value("particles", 40);
        if (s.rope_spawn.particles < 2) throw ParseError("scene: rope needs >= 2 particles");
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene: ") + e.what());
    }
}

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << scene_to_json(scene) << "\n";
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str());
}

uint64_t scene_content_hash(const Scene& scene) {
    // FNV-1a 64
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : scene_to_json(scene)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace dlo
