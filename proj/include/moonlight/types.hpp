#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "moonlight/bitvec.hpp"

namespace moonlight {

// Width of the edge space used when nothing else is requested (AFL's map).
inline constexpr std::uint32_t kDefaultMapSize = 65536;

enum class WeightScheme {
    Unweighted,  // c_i = 1
    Size,        // c_i = size_bytes
    Time,        // c_i = exec_time_us
};

// One candidate seed. Ids are dense and contiguous from 0 within a corpus.
struct SeedRecord {
    std::uint32_t id = 0;
    std::string path;
    std::uint64_t size_bytes = 0;
    std::optional<std::uint64_t> exec_time_us;
    std::array<std::uint8_t, 32> content_hash{};
};

// An (edge, bucketed hit count) pair; the cover universe used by cmin.
struct CminTuple {
    std::uint32_t edge_id = 0;
    std::uint8_t bucket = 0;

    friend auto operator<=>(const CminTuple&, const CminTuple&) = default;
};

// Edge coverage of one seed: bit j is set iff the seed traverses edge j.
// Tuples are only present when the trace came from showmap text; the binary
// trace format does not carry them.
struct CoverageTrace {
    std::uint32_t map_size = kDefaultMapSize;
    BitVec bits;
    std::optional<std::vector<CminTuple>> tuples;
};

enum class StepKind {
    ColSingularity,
    RowSingularity,
    ExoticRow,
    DominantRowDelete,
    DominantColDelete,
    ContainedCols,
    HeuristicRow,
};

inline const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::ColSingularity: return "COL_SINGULARITY";
        case StepKind::RowSingularity: return "ROW_SINGULARITY";
        case StepKind::ExoticRow: return "EXOTIC_ROW";
        case StepKind::DominantRowDelete: return "DOMINANT_ROW_DELETE";
        case StepKind::DominantColDelete: return "DOMINANT_COL_DELETE";
        case StepKind::ContainedCols: return "CONTAINED_COLS";
        case StepKind::HeuristicRow: return "HEURISTIC_ROW";
    }
    return "?";
}

// One audited matrix operation. cost_delta is zero for every kind except
// HeuristicRow, where it is 1 (unweighted) or the selected row's weight.
struct ReductionStep {
    StepKind kind{};
    std::vector<std::uint32_t> rows_removed;
    std::vector<std::uint32_t> cols_removed;
    std::vector<std::uint32_t> rows_selected;
    std::uint64_t cost_delta = 0;
};

// A distilled corpus: the chosen seed ids plus the audit trail that produced
// them. heuristic_cost == 0 certifies the selection is an exact optimum.
struct Selection {
    std::vector<std::uint32_t> chosen;  // ascending
    std::uint64_t total_weight = 0;
    std::uint64_t heuristic_cost = 0;
    std::vector<ReductionStep> steps;
    std::vector<std::uint32_t> dropped_singular_rows;
};

}  // namespace moonlight
