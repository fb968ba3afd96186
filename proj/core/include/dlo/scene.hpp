#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlo/geometry.hpp"

namespace dlo {

enum class ClipColor { red, green, blue, yellow };

const char* color_name(ClipColor c);
ClipColor color_from_name(const std::string& name);

/// A routing clip: two parallel walls forming a straight channel along the
/// clip-frame x axis. The floor plane is x = 0, the ceiling plane
/// x = channel_depth(); the rope passes between the walls.
struct Clip {
    int id = 0;
    Pose2 pose;
    double scale = 1.0;
    ClipColor color = ClipColor::red;

    double opening_width() const { return 0.022 * scale; }
    double channel_depth() const { return 0.020 * scale; }
    double wall_thickness() const { return 0.008 * scale; }
    double wall_length() const { return 0.030 * scale; }

    /// Wall rectangles in the clip frame; walls overhang the channel equally
    /// on both sides so the geometry is symmetric under direction reversal.
    std::array<Rect, 2> wall_rects_local() const {
        double x0 = -(wall_length() - channel_depth()) * 0.5;
        double x1 = x0 + wall_length();
        double half = opening_width() * 0.5;
        return {Rect{{x0, half}, {x1, half + wall_thickness()}},
                Rect{{x0, -half - wall_thickness()}, {x1, -half}}};
    }

    /// World-frame wall quads (counter-clockwise).
    std::array<Quad, 2> footprint() const;

    Vec2 to_clip(Vec2 world) const { return pose.to_local(world); }
    Vec2 to_world(Vec2 local) const { return pose.to_world(local); }
};

/// Pose of the clip as seen from the chosen insertion side. For reversed
/// insertion the frame origin moves to the ceiling and flips, so all skill
/// and reward geometry can stay written for the forward case.
Pose2 effective_clip_pose(const Clip& clip, bool reversed);

struct RopeSpawn {
    Pose2 pose;                    // head position + heading (rope trails behind)
    double jitter_x = 0.05;        // half-extents of the spawn box
    double jitter_y = 0.025;
    double jitter_heading = 0.17453292519943295;  // 10 deg
    double length = 0.40;
    int particles = 40;
};

struct Scene {
    std::string family;            // implicit3 | spatial3 | attribute3 | clip4 | single
    uint64_t seed = 0;
    Rect workspace{{-0.45, -0.30}, {0.45, 0.30}};
    std::vector<Clip> clips;
    RopeSpawn rope_spawn;
    std::string instruction;
};

/// Minimum distance between the wall footprints of two clips (0 if touching).
double clip_clearance(const Clip& a, const Clip& b);

const Clip& clip_by_id(const Scene& scene, int id);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

/// FNV-1a over the canonical JSON form; stable across platforms.
uint64_t scene_content_hash(const Scene& scene);

}  // namespace dlo
