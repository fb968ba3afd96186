#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "dlo/mlp.hpp"
#include "dlo/scene.hpp"
#include "dlo/sim.hpp"
#include "dlo/skills.hpp"

namespace dlo {

inline constexpr int kFeatureParticles = 10;
inline constexpr int kFeatureDim = 2 * kFeatureParticles + 3;  // 23
inline constexpr int kActionDim = 7;

std::array<double, kActionDim> action_lo();
std::array<double, kActionDim> action_hi();

/// First 10 particle positions in the effective clip frame, head-segment
/// heading as (sin, cos), and the clip scale.
Vec featurize(const RopeState& rope, const Clip& clip, bool reversed = false);

/// Squash an unbounded pre-action into the action box, per dimension:
/// lo + (hi - lo) * (tanh(u) + 1) / 2.
std::array<double, kActionDim> squash_action(const Vec& u);

/// Deterministic actor wrapper. The net maps features to either 7 outputs
/// (linear/CEM policies) or 14 (SAC mean + log-std; the mean half is used).
struct Policy {
    Mlp actor;
    std::map<std::string, std::string> metadata;  // seed, steps, phase, algo

    InsertParams act(const Vec& features) const;
};

Policy make_untrained_policy(uint64_t seed);

/// Binary format: "DLOP" magic, u16 version, JSON metadata, named tensors.
void save_policy(const Policy& policy, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace dlo
