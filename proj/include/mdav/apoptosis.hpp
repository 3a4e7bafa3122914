#pragma once

#include "mdav/ensemble.hpp"

#include <utility>
#include <vector>

namespace mdav {

enum class RepresentativeRule { LowestIndex, LargestCoefficientNorm };

struct ApoptosisPolicy {
    bool enabled = true;
    double epsilon = 0.05;
    RepresentativeRule representative_rule = RepresentativeRule::LargestCoefficientNorm;
};

namespace apoptosis {

// All unordered pairs of *free* coherent states (group representatives)
// closer than policy.epsilon (strict).
std::vector<std::pair<int, int>> detect(const EnsembleState& state,
                                        const ApoptosisPolicy& policy);

// Merge the connected components induced by `pairs` (unioned with existing
// groups). Freezes offsets at the current time; coefficients and state values
// are untouched. Events are appended to the partition.
EnsembleState merge(const EnsembleState& state,
                    const std::vector<std::pair<int, int>>& pairs,
                    const ApoptosisPolicy& policy);

// In-place variant used by the propagator loop. Returns number of events.
int merge_in_place(EnsembleState& state,
                   const std::vector<std::pair<int, int>>& pairs,
                   const ApoptosisPolicy& policy, bool forced = false);

}  // namespace apoptosis
}  // namespace mdav
