#pragma once

#include <cstdint>
#include <string>

#include "dlo/scene.hpp"

namespace dlo {

/// Families: implicit3 (mild turns, natural-order instruction), spatial3 and
/// attribute3 (one >90 deg turn, fixed-order instruction), clip4 (implicit
/// chain plus a sharp clip appended at the front or back, color instruction),
/// single (one clip, used by low-level training/eval).
///
/// Rejection sampling; throws GenerationError after the attempt budget.
Scene generate_scene(const std::string& family, uint64_t seed);

bool is_known_family(const std::string& family);

/// Largest |heading change| between consecutive clips in chain order, 0 for
/// fewer than two clips.
double max_consecutive_turn(const std::vector<Clip>& clips);

/// Turn-shape constraint for scene.family: implicit3/single chains keep every
/// consecutive heading change <= 45 deg, spatial3/attribute3 have at least one
/// > 90 deg, clip4 embeds a mild 3-clip run with the fourth clip joined at the
/// chain's front or back. Families with color instructions also need pairwise
/// distinct colors.
bool family_constraint_ok(const Scene& scene);

}  // namespace dlo
