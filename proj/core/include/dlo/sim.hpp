#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dlo/geometry.hpp"
#include "dlo/scene.hpp"

namespace dlo {

struct SimConfig {
    double dt = 1.0 / 120.0;
    int iterations = 10;            // constraint projection passes per step
    double ground_damping = 0.85;   // per-step velocity retention
    double wall_friction = 0.5;     // tangential damping at wall contacts
    double gripper_radius = 0.012;
    double gripper_speed = 0.30;     // m/s
    double gripper_ang_speed = 3.141592653589793;  // rad/s
    double instability_factor = 10.0;  // max displacement, units of rest_length
    double max_joint_angle = 0.2;      // rad; per-joint bend cap, enforced as a
                                       // second-neighbour distance floor
};

struct RopeState {
    std::vector<Vec2> p;   // p[0] is the head (1-based p_1 in the API)
    std::vector<Vec2> v;
    double rest_length = 0.01;

    int size() const { return static_cast<int>(p.size()); }
};

struct GripperState {
    Vec2 pos;
    double heading = 0.0;
    int grasped = 0;  // 1-based particle index, 0 = none
};

struct GripperWaypoint {
    Vec2 pos;
    double heading = 0.0;
};

struct MotionResult {
    bool collided = false;
    double path_length = 0.0;
    int steps = 0;
};

/// Largest |segment length - rest| over the rope, in meters.
double max_segment_residual(const RopeState& rope);

/// True if a gripper disc at pos intersects any clip wall.
bool gripper_pose_collides(const Scene& scene, Vec2 pos, double radius);

/// Deterministic position-based rope world. step() is a pure function of the
/// value; the only randomness lives in spawn jitter.
struct World {
    Scene scene;
    RopeState rope;
    GripperState gripper;
    SimConfig cfg;
    double sim_time = 0.0;
    uint64_t spawn_seed = 0;

    /// Semi-implicit update: damp + integrate, `iterations` interleaved
    /// distance/collision projection passes, grasp re-pin, velocity recompute.
    /// Throws SimError if any particle moves more than
    /// instability_factor * rest_length in one step.
    void step();

    void settle(int steps);

    /// Teleports the gripper to the particle (the rope does not move) and
    /// aligns the gripper heading with the local segment.
    void attach_grasp(int index_1based);
    void detach_grasp();

    /// Drive the gripper through the waypoints at bounded linear/angular
    /// rates, stepping the world each control tick. Halts at the first tick
    /// whose pose would put the gripper disc inside a wall.
    MotionResult move_gripper_along(const std::vector<GripperWaypoint>& waypoints);

    bool grasped() const { return gripper.grasped != 0; }
};

/// Straight rope at the spawn pose jittered by the scene's spawn ranges
/// (position within the box, heading within +-jitter). Particles are clamped
/// to the workspace. rest_length below 5 mm is an error.
World spawn_world(const Scene& scene, uint64_t seed, const SimConfig& cfg = {});

}  // namespace dlo
