#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "moonlight/errors.hpp"
#include "moonlight/matrix.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

// Provably minimum-weight cover of all non-singular live columns, found by
// branch and bound over row inclusion. Among equal-weight optima the
// lexicographically smallest id set wins, so results are stable enough to
// cite in tests. Refuses instances over row_limit to avoid accidental
// exponential runs.
inline Selection exact_minset(const CoverageMatrix& A, WeightScheme scheme,
                              std::uint32_t row_limit = 20) {
    const auto& live = A.live_rows();
    if (live.size() > row_limit)
        throw PreconditionError("exact solver limited to " + std::to_string(row_limit) +
                                " live rows, got " + std::to_string(live.size()));

    Selection sel;
    sel.dropped_singular_rows = A.dropped_singular_rows();

    // Universe: live columns covered by at least one live row, compacted.
    BitVec coverable(A.n_cols());
    for (auto r : live) coverable |= A.row_bits(r);
    coverable &= A.live_col_mask();
    std::vector<std::uint32_t> universe;
    coverable.for_each_set([&](std::uint32_t c) { universe.push_back(c); });
    const std::uint32_t n_univ = static_cast<std::uint32_t>(universe.size());
    if (n_univ == 0) return sel;  // nothing to cover

    std::vector<std::uint32_t> dense(A.n_cols(), 0);
    for (std::uint32_t u = 0; u < n_univ; ++u) dense[universe[u]] = u;

    const std::uint32_t n = static_cast<std::uint32_t>(live.size());
    std::vector<BitVec> rowset(n, BitVec(n_univ));
    std::vector<std::uint64_t> cost(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        A.row_bits(live[i]).for_each_set(A.live_col_mask(), [&](std::uint32_t c) {
            rowset[i].set(dense[c]);
        });
        cost[i] = scheme == WeightScheme::Unweighted ? 1 : A.weight(live[i]);
    }

    std::vector<std::vector<std::uint32_t>> coverers(n_univ);
    std::uint32_t max_pop = 1;
    std::uint64_t min_cost = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t i = 0; i < n; ++i) {
        rowset[i].for_each_set([&](std::uint32_t u) { coverers[u].push_back(i); });
        max_pop = std::max(max_pop, rowset[i].popcount());
        min_cost = std::min(min_cost, cost[i]);
    }

    std::optional<std::uint64_t> best_weight;
    std::vector<std::uint32_t> best_ids;

    std::vector<std::uint8_t> excluded(n, 0);
    std::vector<std::uint32_t> chosen;

    auto consider = [&](std::uint64_t weight) {
        std::vector<std::uint32_t> ids;
        ids.reserve(chosen.size());
        for (auto i : chosen) ids.push_back(live[i]);
        std::sort(ids.begin(), ids.end());
        if (!best_weight || weight < *best_weight ||
            (weight == *best_weight &&
             std::lexicographical_compare(ids.begin(), ids.end(), best_ids.begin(),
                                          best_ids.end()))) {
            best_weight = weight;
            best_ids = std::move(ids);
        }
    };

    auto dfs = [&](auto&& self, const BitVec& uncovered, std::uint64_t weight) -> void {
        if (uncovered.none()) {
            consider(weight);
            return;
        }
        // Crude but valid lower bound; ties are not pruned so every optimum
        // stays reachable for the lexicographic comparison.
        std::uint64_t need =
            (static_cast<std::uint64_t>(uncovered.popcount()) + max_pop - 1) / max_pop;
        if (best_weight && weight + need * min_cost > *best_weight) return;

        // Branch on the uncovered column with the fewest available coverers.
        std::uint32_t pick = 0;
        std::uint32_t pick_count = std::numeric_limits<std::uint32_t>::max();
        bool found = false;
        uncovered.for_each_set([&](std::uint32_t u) {
            std::uint32_t cnt = 0;
            for (auto i : coverers[u])
                if (!excluded[i]) ++cnt;
            if (cnt < pick_count) {
                pick_count = cnt;
                pick = u;
                found = true;
            }
        });
        if (!found || pick_count == 0) return;  // uncoverable branch

        // Partition covers by their smallest included coverer of the picked
        // column: branch k includes coverer k and bans coverers 0..k-1.
        std::vector<std::uint32_t> local;
        for (auto i : coverers[pick])
            if (!excluded[i]) local.push_back(i);
        for (std::size_t k = 0; k < local.size(); ++k) {
            std::uint32_t i = local[k];
            chosen.push_back(i);
            BitVec next = uncovered;
            rowset[i].for_each_set([&](std::uint32_t u) {
                if (next.test(u)) next.reset(u);
            });
            self(self, next, weight + cost[i]);
            chosen.pop_back();
            excluded[i] = 1;
        }
        for (auto i : local) excluded[i] = 0;
    };

    BitVec all_uncovered = BitVec::ones(n_univ);
    dfs(dfs, all_uncovered, 0);

    sel.chosen = std::move(best_ids);
    sel.total_weight = best_weight.value_or(0);
    return sel;
}

}  // namespace moonlight
