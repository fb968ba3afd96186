#pragma once

#include <vector>

#include "dlo/instruction.hpp"
#include "dlo/scene.hpp"

namespace dlo {

struct RoutePlan {
    std::vector<int> order;        // clip ids, head-first routing order
    std::vector<bool> reversed;    // per entry: insert against the clip +x axis?
};

/// Path length from the rope head through the clip centers in the given order,
/// plus 0.05 m/rad times the summed turning angle of that polyline.
double route_cost(const Scene& scene, const std::vector<int>& order);

/// Resolve an instruction to a routing order. Fixed kinds map tokens to clip
/// ids (ambiguity within 1 mm on the ranking axis is an error); the implicit
/// kind minimizes route_cost over all permutations, ties broken by smallest
/// lexicographic id sequence.
RoutePlan ground_truth_order(const Scene& scene, const Instruction& instruction);

}  // namespace dlo
