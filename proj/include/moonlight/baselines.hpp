#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "moonlight/errors.hpp"
#include "moonlight/matrix.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

// Classic greedy set cover followed by a reduction pass: repeatedly take the
// live row covering the most uncovered columns (ties to the lowest id), then
// drop any pick whose coverage the remaining picks already provide, scanning
// in reverse pick order.
inline Selection minset_unweighted(const CoverageMatrix& A) {
    Selection sel;
    sel.dropped_singular_rows = A.dropped_singular_rows();

    BitVec target(A.n_cols());
    for (auto r : A.live_rows()) target |= A.row_bits(r);
    target &= A.live_col_mask();

    std::vector<std::uint32_t> picks;
    BitVec uncovered = target;
    while (uncovered.any()) {
        std::uint32_t best = 0;
        std::uint32_t best_gain = 0;
        for (auto r : A.live_rows()) {
            std::uint32_t gain = A.row_bits(r).popcount_and(uncovered);
            if (gain > best_gain) {
                best_gain = gain;
                best = r;
            }
        }
        // target is the union of live rows, so progress is always possible
        picks.push_back(best);
        A.row_bits(best).for_each_set(uncovered, [&](std::uint32_t c) { uncovered.reset(c); });
    }

    std::vector<bool> kept(picks.size(), true);
    for (std::size_t k = picks.size(); k-- > 0;) {
        BitVec rest(A.n_cols());
        for (std::size_t j = 0; j < picks.size(); ++j)
            if (kept[j] && j != k) rest |= A.row_bits(picks[j]);
        if (target.subset_of(rest)) kept[k] = false;
    }

    for (std::size_t j = 0; j < picks.size(); ++j)
        if (kept[j]) sel.chosen.push_back(picks[j]);
    std::sort(sel.chosen.begin(), sel.chosen.end());
    sel.total_weight = sel.chosen.size();  // unweighted by definition
    return sel;
}

// afl-cmin-style distillation over (edge, bucket) tuples: each tuple
// nominates the smallest seed covering it (ties to the lowest id), then a
// sweep in ascending tuple order adds the nominee of every tuple not yet
// covered by the selection.
inline Selection cmin_distill(const std::vector<std::vector<CminTuple>>& tuple_traces,
                              const std::vector<SeedRecord>& seeds) {
    if (tuple_traces.size() != seeds.size())
        throw std::invalid_argument("tuple trace/seed count mismatch");

    struct Nominee {
        std::uint64_t size;
        std::uint32_t id;
    };
    std::map<CminTuple, Nominee> nominee;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (const auto& t : tuple_traces[i]) {
            auto [it, fresh] = nominee.try_emplace(t, Nominee{seeds[i].size_bytes,
                                                              static_cast<std::uint32_t>(i)});
            if (!fresh && (seeds[i].size_bytes < it->second.size ||
                           (seeds[i].size_bytes == it->second.size && i < it->second.id)))
                it->second = {seeds[i].size_bytes, static_cast<std::uint32_t>(i)};
        }
    }

    Selection sel;
    std::map<CminTuple, bool> covered;
    for (const auto& [t, nom] : nominee) covered[t] = false;
    std::vector<bool> selected(seeds.size(), false);
    for (const auto& [t, nom] : nominee) {  // std::map iterates in ascending tuple order
        if (covered[t]) continue;
        selected[nom.id] = true;
        for (const auto& owned : tuple_traces[nom.id]) covered[owned] = true;
    }
    for (std::uint32_t i = 0; i < selected.size(); ++i) {
        if (selected[i]) {
            sel.chosen.push_back(i);
            sel.total_weight += seeds[i].size_bytes;
        }
    }
    return sel;
}

// Same, but pulls the tuple sets out of full traces and rejects traces that
// lack them (binary traces do not carry hit counts).
inline Selection cmin_distill(const std::vector<CoverageTrace>& traces,
                              const std::vector<SeedRecord>& seeds) {
    std::vector<std::vector<CminTuple>> tuple_traces;
    tuple_traces.reserve(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (!traces[i].tuples)
            throw PreconditionError("seed " + std::to_string(i) +
                                    " has no tuple data; cmin needs showmap text traces");
        tuple_traces.push_back(*traces[i].tuples);
    }
    return cmin_distill(tuple_traces, seeds);
}

namespace detail {

// Unbiased bounded draw via rejection; written out so selections are
// identical across standard library implementations.
inline std::uint64_t bounded_rand(std::mt19937_64& gen, std::uint64_t n) {
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

}  // namespace detail

// Uniform sample of k seeds without replacement, reproducible from rng_seed.
inline Selection random_sample(const std::vector<SeedRecord>& seeds, std::uint32_t k,
                               std::uint64_t rng_seed) {
    if (k == 0) throw PreconditionError("sample size must be positive");
    if (k > seeds.size())
        throw PreconditionError("sample size " + std::to_string(k) + " exceeds corpus size " +
                                std::to_string(seeds.size()));
    std::mt19937_64 gen(rng_seed);
    std::vector<std::uint32_t> ids(seeds.size());
    for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
    for (std::uint32_t i = 0; i < k; ++i) {
        std::uint64_t j = i + detail::bounded_rand(gen, ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    Selection sel;
    sel.chosen.assign(ids.begin(), ids.begin() + k);
    std::sort(sel.chosen.begin(), sel.chosen.end());
    sel.total_weight = k;
    return sel;
}

// The identity selection (no distillation).
inline Selection full_selection(const std::vector<SeedRecord>& seeds) {
    Selection sel;
    sel.chosen.resize(seeds.size());
    for (std::uint32_t i = 0; i < sel.chosen.size(); ++i) sel.chosen[i] = i;
    sel.total_weight = seeds.size();
    return sel;
}

}  // namespace moonlight
