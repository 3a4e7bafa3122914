#include "mdav/apoptosis.hpp"

#include <algorithm>
#include <numeric>

namespace mdav::apoptosis {

namespace {

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int x, int y) {
        x = find(x);
        y = find(y);
        if (x != y) parent_[std::max(x, y)] = std::min(x, y);
    }

private:
    std::vector<int> parent_;
};

int pick_representative(const std::vector<int>& group, const EnsembleState& state,
                        const ApoptosisPolicy& policy) {
    if (policy.representative_rule == RepresentativeRule::LowestIndex)
        return *std::min_element(group.begin(), group.end());
    // Ties fall back to the lowest index (groups are sorted ascending).
    int best = group.front();
    double best_norm = state.A.col(best).norm();
    for (int k : group) {
        const double nk = state.A.col(k).norm();
        if (nk > best_norm) {
            best = k;
            best_norm = nk;
        }
    }
    return best;
}

}  // namespace

std::vector<std::pair<int, int>> detect(const EnsembleState& state,
                                        const ApoptosisPolicy& policy) {
    std::vector<std::pair<int, int>> pairs;
    if (!policy.enabled) return pairs;
    const auto reps = state.partition.representatives();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            const double d = (state.F.row(reps[i]) - state.F.row(reps[j])).norm();
            if (d < policy.epsilon) pairs.emplace_back(reps[i], reps[j]);
        }
    return pairs;
}

int merge_in_place(EnsembleState& state, const std::vector<std::pair<int, int>>& pairs,
                   const ApoptosisPolicy& policy, bool forced) {
    if (pairs.empty()) return 0;
    const int m = state.multiplicity();
    UnionFind uf(m);
    // Existing groups stay connected.
    for (int k = 0; k < m; ++k) uf.unite(k, state.partition.representative_of(k));
    for (const auto& [a, b] : pairs)
        uf.unite(state.partition.representative_of(a), state.partition.representative_of(b));

    // Collect components that changed (gained members).
    std::vector<std::vector<int>> components(m);
    for (int k = 0; k < m; ++k) components[uf.find(k)].push_back(k);

    int events = 0;
    for (int root = 0; root < m; ++root) {
        const auto& group = components[root];
        if (group.size() < 2) continue;
        // Skip groups identical to an existing one.
        const int old_rep = state.partition.representative_of(group.front());
        const bool unchanged = std::all_of(group.begin(), group.end(), [&](int k) {
            return state.partition.representative_of(k) == old_rep;
        });
        if (unchanged && static_cast<int>(group.size()) ==
                             static_cast<int>(state.partition.members_of(old_rep).size()))
            continue;

        const int rep = pick_representative(group, state, policy);
        MergeEvent ev;
        ev.t = state.t;
        ev.merged = group;
        ev.representative = rep;
        ev.forced = forced;
        for (const auto& [a, b] : pairs) {
            if (uf.find(a) == root)
                ev.distances.push_back((state.F.row(a) - state.F.row(b)).norm());
        }
        state.partition.merge_group(group, rep, state.F);
        state.partition.record_event(std::move(ev));
        ++events;
    }
    return events;
}

EnsembleState merge(const EnsembleState& state, const std::vector<std::pair<int, int>>& pairs,
                    const ApoptosisPolicy& policy) {
    EnsembleState out = state;
    merge_in_place(out, pairs, policy);
    return out;
}

}  // namespace mdav::apoptosis
