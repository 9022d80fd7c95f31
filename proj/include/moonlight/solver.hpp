#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "moonlight/errors.hpp"
#include "moonlight/matrix.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

enum class TieBreak { LowestId };

struct SolverConfig {
    WeightScheme scheme = WeightScheme::Unweighted;
    TieBreak tie_break = TieBreak::LowestId;
    bool record_steps = true;
};

namespace detail {

// pop_a / w_a > pop_b / w_b, exactly.
inline bool ratio_greater(std::uint64_t pop_a, std::uint64_t w_a, std::uint64_t pop_b,
                          std::uint64_t w_b) {
    return static_cast<unsigned __int128>(pop_a) * w_b >
           static_cast<unsigned __int128>(pop_b) * w_a;
}

// Marks every member of an identical-coverage row group except its survivor.
// The survivor is the member with the smallest weight (ties broken by lowest
// id); unweighted runs reduce this to lowest id. Keeping one member prevents
// a duplicate group from deleting itself through mutual domination. Rows are
// bucketed by live popcount first so only plausible twins get hashed.
inline void mark_identical_row_groups(const CoverageMatrix& A, WeightScheme scheme,
                                      const std::vector<std::uint32_t>& pops,
                                      std::vector<std::uint8_t>& submissive) {
    const bool weighted = scheme != WeightScheme::Unweighted;
    const BitVec& colmask = A.live_col_mask();

    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_pop;
    for (auto r : A.live_rows()) by_pop[pops[r]].push_back(r);

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    for (auto& [pop, pop_rows] : by_pop) {
        if (pop_rows.size() < 2) continue;
        buckets.clear();
        for (auto r : pop_rows) buckets[A.row_bits(r).hash_masked(colmask)].push_back(r);
        for (auto& [hash, rows] : buckets) {
            if (rows.size() < 2) continue;
            // Split hash buckets into true equality classes.
            std::vector<std::vector<std::uint32_t>> classes;
            for (auto r : rows) {
                bool placed = false;
                for (auto& cls : classes) {
                    if (A.row_bits(cls.front()).equals_masked(A.row_bits(r), colmask)) {
                        cls.push_back(r);
                        placed = true;
                        break;
                    }
                }
                if (!placed) classes.push_back({r});
            }
            for (auto& cls : classes) {
                if (cls.size() < 2) continue;
                std::uint32_t survivor = cls.front();
                for (auto r : cls) {
                    bool better = weighted
                                      ? (A.weight(r) < A.weight(survivor) ||
                                         (A.weight(r) == A.weight(survivor) && r < survivor))
                                      : r < survivor;
                    if (better) survivor = r;
                }
                for (auto r : cls)
                    if (r != survivor) submissive[r] = 1;
            }
        }
    }
}

}  // namespace detail

// Live columns whose sum over the live rows is zero.
inline std::vector<std::uint32_t> find_column_singularities(const CoverageMatrix& A) {
    BitVec covered(A.n_cols());
    for (auto r : A.live_rows()) covered |= A.row_bits(r);
    std::vector<std::uint32_t> out;
    for (auto c : A.live_cols())
        if (!covered.test(c)) out.push_back(c);
    return out;
}

// Rows that uniquely cover at least one live column. Expects no live singular
// columns (the solver eliminates those first).
inline std::vector<std::uint32_t> find_exotic_rows(const CoverageMatrix& A) {
    std::vector<std::uint32_t> cover_count(A.n_cols(), 0);
    std::vector<std::uint32_t> last_coverer(A.n_cols(), 0);
    const BitVec& colmask = A.live_col_mask();
    for (auto r : A.live_rows()) {
        A.row_bits(r).for_each_set(colmask, [&](std::uint32_t c) {
            ++cover_count[c];
            last_coverer[c] = r;
        });
    }
    std::vector<std::uint32_t> out;
    for (auto c : A.live_cols())
        if (cover_count[c] == 1) out.push_back(last_coverer[c]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Every live row whose live coverage is contained in some other live row's,
// subject to the weight rule: a submissive row is deletable only when its
// weight is >= its dominator's (no condition in the unweighted case).
inline std::vector<std::uint32_t> find_submissive_rows(const CoverageMatrix& A,
                                                       WeightScheme scheme) {
    const auto& live = A.live_rows();
    if (live.size() < 2) return {};
    const bool weighted = scheme != WeightScheme::Unweighted;
    const BitVec& colmask = A.live_col_mask();

    std::vector<std::uint32_t> pop(A.n_rows(), 0);
    for (auto r : live) pop[r] = A.row_bits(r).popcount_and(colmask);

    std::vector<std::uint8_t> submissive(A.n_rows(), 0);
    detail::mark_identical_row_groups(A, scheme, pop, submissive);

    for (auto r : live) {
        if (submissive[r]) continue;
        for (auto d : live) {
            if (d == r) continue;
            if (pop[d] <= pop[r]) continue;  // proper containment needs a strictly larger row
            if (weighted && A.weight(r) < A.weight(d)) continue;
            if (A.row_bits(r).subset_of(A.row_bits(d), colmask)) {
                submissive[r] = 1;
                break;
            }
        }
    }

    std::vector<std::uint32_t> out;
    for (auto r : live)
        if (submissive[r]) out.push_back(r);
    return out;
}

// Every live column whose live row set strictly contains some other live
// column's (the dominant side is the redundant one). Identical-column groups
// keep only the lowest id.
inline std::vector<std::uint32_t> find_dominant_columns(const CoverageMatrix& A) {
    const auto& live_cols = A.live_cols();
    if (live_cols.size() < 2) return {};

    std::vector<BitVec> col_rows(A.n_cols());
    for (auto c : live_cols) col_rows[c] = BitVec(A.n_rows());
    const BitVec& colmask = A.live_col_mask();
    for (auto r : A.live_rows())
        A.row_bits(r).for_each_set(colmask, [&](std::uint32_t c) { col_rows[c].set(r); });

    std::vector<std::uint32_t> count(A.n_cols(), 0);
    for (auto c : live_cols) count[c] = col_rows[c].popcount();

    std::vector<std::uint8_t> dominant(A.n_cols(), 0);

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    BitVec rowmask = BitVec::ones(A.n_rows());
    for (auto c : live_cols) buckets[col_rows[c].hash_masked(rowmask)].push_back(c);
    for (auto& [hash, cols] : buckets) {
        if (cols.size() < 2) continue;
        std::vector<std::uint32_t> reps;
        for (auto c : cols) {
            bool placed = false;
            for (auto rep : reps) {
                if (col_rows[rep] == col_rows[c]) {
                    dominant[c] = 1;  // cols arrive in ascending order; rep is the lowest id
                    placed = true;
                    break;
                }
            }
            if (!placed) reps.push_back(c);
        }
    }

    for (auto sub : live_cols) {
        for (auto dom : live_cols) {
            if (dom == sub || dominant[dom]) continue;
            if (count[dom] <= count[sub]) continue;
            if (col_rows[sub].subset_of(col_rows[dom])) dominant[dom] = 1;
        }
    }

    std::vector<std::uint32_t> out;
    for (auto c : live_cols)
        if (dominant[c]) out.push_back(c);
    return out;
}

// Union of live columns covered by the given (live) rows.
inline std::vector<std::uint32_t> contained_columns(const CoverageMatrix& A,
                                                    std::span<const std::uint32_t> rows) {
    BitVec acc(A.n_cols());
    for (auto r : rows) {
        if (!A.row_live(r)) throw std::out_of_range("row " + std::to_string(r) + " not live");
        acc |= A.row_bits(r);
    }
    acc &= A.live_col_mask();
    std::vector<std::uint32_t> out;
    acc.for_each_set([&](std::uint32_t c) { out.push_back(c); });
    return out;
}

// Fallback pick when no optimal operation applies: the live row with the
// largest live popcount (unweighted) or largest popcount/weight (weighted),
// ties to the lowest id.
inline std::uint32_t heuristic_row(const CoverageMatrix& A, WeightScheme scheme) {
    if (A.live_rows().empty()) throw PreconditionError("heuristic pick on an empty matrix");
    const bool weighted = scheme != WeightScheme::Unweighted;
    const BitVec& colmask = A.live_col_mask();
    std::uint32_t best = A.live_rows().front();
    std::uint32_t best_pop = A.row_bits(best).popcount_and(colmask);
    for (auto r : A.live_rows()) {
        if (r == best) continue;
        std::uint32_t pop = A.row_bits(r).popcount_and(colmask);
        bool better = weighted ? detail::ratio_greater(pop, A.weight(r), best_pop, A.weight(best))
                               : pop > best_pop;
        if (better) {
            best = r;
            best_pop = pop;
        }
    }
    return best;
}

namespace detail {

// Incremental solver state. Maintains, across reductions:
//   col_cover[j]  live rows covering live column j
//   row_pop[r]    live columns covered by live row r
//   transpose     column -> row bit vectors for candidate lookups
// plus scan-skip bookkeeping: new row-dominance pairs can only appear after a
// column removal, and new column-dominance pairs only after a row removal
// that leaves the row's columns live (a submissive deletion), so a scan that
// came up empty stays empty until the corresponding event fires.
class DistillEngine {
public:
    DistillEngine(CoverageMatrix& A, const SolverConfig& cfg)
        : A_(A), cfg_(cfg), weighted_(cfg.scheme != WeightScheme::Unweighted) {
        col_cover_.assign(A_.n_cols(), 0);
        row_pop_.assign(A_.n_rows(), 0);
        transpose_.assign(A_.n_cols(), BitVec(A_.n_rows()));
        for (auto r : A_.live_rows()) {
            row_pop_[r] = A_.row_bits(r).popcount();
            A_.row_bits(r).for_each_set([&](std::uint32_t c) {
                ++col_cover_[c];
                transpose_[c].set(r);
            });
        }
    }

    Selection run() {
        Selection sel;
        sel.dropped_singular_rows = A_.dropped_singular_rows();

        while (!A_.live_cols().empty()) {
            [[maybe_unused]] std::size_t before =
                A_.live_rows().size() + A_.live_cols().size();

            if (step_singularities(sel) || step_exotic(sel) || step_submissive(sel) ||
                step_dominant_cols(sel) || step_heuristic(sel)) {
                assert(A_.live_rows().size() + A_.live_cols().size() < before);
                continue;
            }
            assert(false && "no reduction applies to a non-empty matrix");
            break;
        }

        std::sort(sel.chosen.begin(), sel.chosen.end());
        for (auto r : sel.chosen) sel.total_weight += A_.weight(r);
        return sel;
    }

private:
    bool step_singularities(Selection& sel) {
        std::vector<std::uint32_t> cols;
        for (auto c : A_.live_cols())
            if (col_cover_[c] == 0) cols.push_back(c);
        if (cols.empty()) return false;
        remove_cols(cols);
        log(sel, StepKind::ColSingularity, {}, cols, {}, 0);
        return true;
    }

    bool step_exotic(Selection& sel) {
        std::vector<std::uint32_t> rows;
        for (auto c : A_.live_cols()) {
            if (col_cover_[c] != 1) continue;
            std::uint32_t owner = 0;
            bool found = false;
            transpose_[c].for_each_set(A_.live_row_mask(), [&](std::uint32_t r) {
                if (!found) {
                    owner = r;
                    found = true;
                }
            });
            assert(found);
            rows.push_back(owner);
        }
        if (rows.empty()) return false;
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

        std::vector<std::uint32_t> cols = contained_of(rows);
        sel.chosen.insert(sel.chosen.end(), rows.begin(), rows.end());
        remove_rows(rows);
        remove_cols(cols);
        log(sel, StepKind::ExoticRow, rows, cols, rows, 0);
        return true;
    }

    bool step_submissive(Selection& sel) {
        if (rowdom_empty_epoch_ && *rowdom_empty_epoch_ == col_epoch_) return false;
        std::vector<std::uint32_t> rows = scan_submissive();
        if (rows.empty()) {
            rowdom_empty_epoch_ = col_epoch_;
            return false;
        }
        remove_rows(rows);
        ++bare_row_epoch_;
        // Removing every submissive row leaves no submissive rows behind, so
        // the relation is empty again until columns change.
        rowdom_empty_epoch_ = col_epoch_;
        log(sel, StepKind::DominantRowDelete, rows, {}, {}, 0);
        return true;
    }

    bool step_dominant_cols(Selection& sel) {
        if (coldom_empty_epoch_ && *coldom_empty_epoch_ == bare_row_epoch_) return false;
        std::vector<std::uint32_t> cols = scan_dominant_cols();
        coldom_empty_epoch_ = bare_row_epoch_;  // empty either way after a full sweep
        if (cols.empty()) return false;
        remove_cols(cols);
        log(sel, StepKind::DominantColDelete, {}, cols, {}, 0);
        return true;
    }

    bool step_heuristic(Selection& sel) {
        const auto& live = A_.live_rows();
        assert(!live.empty());
        std::uint32_t best = live.front();
        for (auto r : live) {
            if (r == best) continue;
            bool better = weighted_
                              ? ratio_greater(row_pop_[r], A_.weight(r), row_pop_[best],
                                              A_.weight(best))
                              : row_pop_[r] > row_pop_[best];
            if (better) best = r;
        }
        assert(row_pop_[best] > 0);

        std::uint32_t picked[1] = {best};
        std::vector<std::uint32_t> cols = contained_of(picked);
        std::uint64_t cost = weighted_ ? A_.weight(best) : 1;
        sel.chosen.push_back(best);
        sel.heuristic_cost += cost;
        remove_rows(picked);
        remove_cols(cols);
        log(sel, StepKind::HeuristicRow, {best}, cols, {best}, cost);
        return true;
    }

    std::vector<std::uint32_t> contained_of(std::span<const std::uint32_t> rows) const {
        BitVec acc(A_.n_cols());
        for (auto r : rows) acc |= A_.row_bits(r);
        acc &= A_.live_col_mask();
        std::vector<std::uint32_t> out;
        acc.for_each_set([&](std::uint32_t c) { out.push_back(c); });
        return out;
    }

    void remove_rows(std::span<const std::uint32_t> rows) {
        for (auto r : rows)
            A_.row_bits(r).for_each_set(A_.live_col_mask(),
                                        [&](std::uint32_t c) { --col_cover_[c]; });
        A_.remove_rows(rows);
    }

    void remove_cols(std::span<const std::uint32_t> cols) {
        if (cols.empty()) return;
        for (auto c : cols)
            transpose_[c].for_each_set(A_.live_row_mask(),
                                       [&](std::uint32_t r) { --row_pop_[r]; });
        A_.remove_cols(cols);
        ++col_epoch_;
    }

    std::vector<std::uint32_t> scan_submissive() const {
        const auto& live = A_.live_rows();
        if (live.size() < 2) return {};
        const BitVec& colmask = A_.live_col_mask();
        const BitVec& rowmask = A_.live_row_mask();

        std::vector<std::uint8_t> submissive(A_.n_rows(), 0);
        mark_identical_row_groups(A_, cfg_.scheme, row_pop_, submissive);

        bool any_positive = false;
        std::uint64_t min_weight_positive = std::numeric_limits<std::uint64_t>::max();
        for (auto r : live) {
            if (row_pop_[r] > 0) {
                any_positive = true;
                min_weight_positive = std::min(min_weight_positive, A_.weight(r));
            }
        }

        for (auto r : live) {
            if (submissive[r]) continue;
            if (row_pop_[r] == 0) {
                // Empty live coverage submits to any covering row.
                if (any_positive && (!weighted_ || A_.weight(r) >= min_weight_positive))
                    submissive[r] = 1;
                continue;
            }
            // Any dominator must cover r's rarest live column.
            std::uint32_t rare_col = 0;
            std::uint32_t rare_count = std::numeric_limits<std::uint32_t>::max();
            A_.row_bits(r).for_each_set(colmask, [&](std::uint32_t c) {
                if (col_cover_[c] < rare_count) {
                    rare_count = col_cover_[c];
                    rare_col = c;
                }
            });
            if (rare_count <= 1) continue;  // r is the sole coverer of rare_col
            bool found = false;
            transpose_[rare_col].for_each_set(rowmask, [&](std::uint32_t d) {
                if (found || d == r) return;
                if (row_pop_[d] <= row_pop_[r]) return;
                if (weighted_ && A_.weight(r) < A_.weight(d)) return;
                if (A_.row_bits(r).subset_of(A_.row_bits(d), colmask)) found = true;
            });
            if (found) submissive[r] = 1;
        }

        std::vector<std::uint32_t> out;
        for (auto r : live)
            if (submissive[r]) out.push_back(r);
        return out;
    }

    std::vector<std::uint32_t> scan_dominant_cols() const {
        const auto& live_cols = A_.live_cols();
        if (live_cols.size() < 2) return {};
        const BitVec& rowmask = A_.live_row_mask();
        const BitVec& colmask = A_.live_col_mask();

        std::vector<std::uint8_t> dominant(A_.n_cols(), 0);

        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
        for (auto c : live_cols) buckets[transpose_[c].hash_masked(rowmask)].push_back(c);
        for (auto& [hash, cols] : buckets) {
            if (cols.size() < 2) continue;
            std::vector<std::uint32_t> reps;
            for (auto c : cols) {
                bool placed = false;
                for (auto rep : reps) {
                    if (transpose_[rep].equals_masked(transpose_[c], rowmask)) {
                        dominant[c] = 1;
                        placed = true;
                        break;
                    }
                }
                if (!placed) reps.push_back(c);
            }
        }

        constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
        for (auto sub : live_cols) {
            if (col_cover_[sub] == 0) continue;
            // A dominator of sub is covered by every row covering sub, so the
            // two smallest covering rows cut the candidate set down hard.
            std::uint32_t r1 = kNone, r2 = kNone;
            transpose_[sub].for_each_set(rowmask, [&](std::uint32_t r) {
                if (r1 == kNone || row_pop_[r] < row_pop_[r1]) {
                    r2 = r1;
                    r1 = r;
                } else if (r2 == kNone || row_pop_[r] < row_pop_[r2]) {
                    r2 = r;
                }
            });
            const BitVec& second = A_.row_bits(r2 == kNone ? r1 : r2);
            A_.row_bits(r1).for_each_set(colmask, [&](std::uint32_t dom) {
                if (dom == sub || dominant[dom]) return;
                if (!second.test(dom)) return;
                if (col_cover_[dom] <= col_cover_[sub]) return;
                if (transpose_[sub].subset_of(transpose_[dom], rowmask)) dominant[dom] = 1;
            });
        }

        std::vector<std::uint32_t> out;
        for (auto c : live_cols)
            if (dominant[c]) out.push_back(c);
        return out;
    }

    void log(Selection& sel, StepKind kind, std::vector<std::uint32_t> rows_removed,
             std::vector<std::uint32_t> cols_removed, std::vector<std::uint32_t> rows_selected,
             std::uint64_t cost_delta) {
        if (!cfg_.record_steps) return;
        sel.steps.push_back({kind, std::move(rows_removed), std::move(cols_removed),
                             std::move(rows_selected), cost_delta});
    }

    CoverageMatrix& A_;
    SolverConfig cfg_;
    bool weighted_;
    std::vector<std::uint32_t> col_cover_;
    std::vector<std::uint32_t> row_pop_;
    std::vector<BitVec> transpose_;
    std::uint64_t col_epoch_ = 0;
    std::uint64_t bare_row_epoch_ = 0;
    std::optional<std::uint64_t> rowdom_empty_epoch_;
    std::optional<std::uint64_t> coldom_empty_epoch_;
};

}  // namespace detail

// Runs the full reduction to the empty matrix, applying one operation family
// per round in fixed priority order: column singularities, exotic rows (plus
// their contained columns), submissive-row deletion, dominant-column
// deletion, and only then a heuristic pick. The matrix's live sets are
// consumed in place; bit data is untouched.
inline Selection moonlight_distill(CoverageMatrix& A, const SolverConfig& config = {}) {
    detail::DistillEngine engine(A, config);
    return engine.run();
}

}  // namespace moonlight
