#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moonlight/errors.hpp"
#include "moonlight/matrix.hpp"
#include "moonlight/solver.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

struct CorpusStats {
    std::uint64_t file_count = 0;
    std::uint64_t total_size_bytes = 0;
};

// File count and byte total over a selection, or over the whole corpus when
// no selection is given. Sizes come from the manifest, not from traces.
inline CorpusStats corpus_stats(const std::vector<SeedRecord>& seeds,
                                const Selection* selection = nullptr) {
    CorpusStats stats;
    if (!selection) {
        stats.file_count = seeds.size();
        for (const auto& s : seeds) stats.total_size_bytes += s.size_bytes;
        return stats;
    }
    for (auto id : selection->chosen) {
        if (id >= seeds.size()) throw std::out_of_range("seed id " + std::to_string(id));
        ++stats.file_count;
        stats.total_size_bytes += seeds[id].size_bytes;
    }
    return stats;
}

struct CoverVerdict {
    bool ok = true;
    std::vector<std::uint32_t> missing_cols;  // ascending
};

// Checks that the selection's union coverage includes every non-singular
// column of the matrix.
inline CoverVerdict verify_cover(const CoverageMatrix& A, const Selection& selection) {
    BitVec target(A.n_cols());
    for (auto r : A.live_rows()) target |= A.row_bits(r);
    target &= A.live_col_mask();

    BitVec got = union_coverage(A, selection.chosen);
    CoverVerdict verdict;
    target.for_each_set([&](std::uint32_t c) {
        if (!got.test(c)) verdict.missing_cols.push_back(c);
    });
    verdict.ok = verdict.missing_cols.empty();
    return verdict;
}

// One comparison-table row.
struct AlgoRun {
    std::string algo;
    Selection selection;
    std::uint64_t wall_ms = 0;
    bool coverage_ok = false;
    bool coverage_exempt = false;  // random sampling does not promise coverage
};

inline constexpr const char* kReportHeader =
    "algo,files,bytes,cost,steps_singularity,steps_exotic,steps_row_dom,steps_col_dom,"
    "steps_heuristic,wall_ms,coverage_ok";

struct ComparisonReport {
    std::string csv;
    nlohmann::ordered_json json;
};

// Renders the comparison table in both formats. Refuses any non-exempt row
// that failed coverage verification.
inline ComparisonReport compare_report(const std::vector<AlgoRun>& runs,
                                       const std::vector<SeedRecord>& seeds) {
    for (const auto& run : runs)
        if (!run.coverage_ok && !run.coverage_exempt)
            throw PreconditionError("selection from " + run.algo +
                                    " does not preserve coverage; refusing to report it");

    ComparisonReport report;
    std::ostringstream csv;
    csv << kReportHeader << '\n';
    report.json = nlohmann::ordered_json::array();

    for (const auto& run : runs) {
        CorpusStats stats = corpus_stats(seeds, &run.selection);
        std::uint64_t by_kind[5] = {0, 0, 0, 0, 0};
        for (const auto& step : run.selection.steps) {
            switch (step.kind) {
                case StepKind::ColSingularity: ++by_kind[0]; break;
                case StepKind::ExoticRow: ++by_kind[1]; break;
                case StepKind::DominantRowDelete: ++by_kind[2]; break;
                case StepKind::DominantColDelete: ++by_kind[3]; break;
                case StepKind::HeuristicRow: ++by_kind[4]; break;
                default: break;
            }
        }
        csv << run.algo << ',' << stats.file_count << ',' << stats.total_size_bytes << ','
            << run.selection.heuristic_cost << ',' << by_kind[0] << ',' << by_kind[1] << ','
            << by_kind[2] << ',' << by_kind[3] << ',' << by_kind[4] << ',' << run.wall_ms << ','
            << (run.coverage_ok ? "true" : "false") << '\n';

        nlohmann::ordered_json row;
        row["algo"] = run.algo;
        row["files"] = stats.file_count;
        row["bytes"] = stats.total_size_bytes;
        row["cost"] = run.selection.heuristic_cost;
        row["steps_singularity"] = by_kind[0];
        row["steps_exotic"] = by_kind[1];
        row["steps_row_dom"] = by_kind[2];
        row["steps_col_dom"] = by_kind[3];
        row["steps_heuristic"] = by_kind[4];
        row["wall_ms"] = run.wall_ms;
        row["coverage_ok"] = run.coverage_ok;
        report.json.push_back(std::move(row));
    }
    report.csv = csv.str();
    return report;
}

// Selection files: one decimal seed id per line, ascending.

inline void write_selection_file(const Selection& selection, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    for (auto id : selection.chosen) out << id << '\n';
    if (!out) throw ConfigError("selection write failed for " + path.string());
}

inline std::vector<std::uint32_t> read_selection_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::uint32_t> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::uint64_t v = 0;
        bool ok = !line.empty();
        for (char ch : line) {
            if (ch < '0' || ch > '9' || v > 0xffffffffull) {
                ok = false;
                break;
            }
            v = v * 10 + static_cast<std::uint64_t>(ch - '0');
        }
        if (!ok || v > 0xffffffffull)
            throw FormatError("selection file " + path.string() + " line " +
                              std::to_string(line_no) + ": expected a decimal seed id");
        ids.push_back(static_cast<std::uint32_t>(v));
    }
    return ids;
}

}  // namespace moonlight
