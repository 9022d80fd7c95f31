#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "moonlight/errors.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

// One line of afl-showmap output: `<edge_id>:<hit_count>`.
struct ShowmapRecord {
    std::uint32_t edge_id = 0;
    std::uint32_t hit_count = 0;
};

// AFL's 8-class quantization of hit counts.
inline std::uint8_t hit_bucket(std::uint32_t count) {
    if (count <= 3) return static_cast<std::uint8_t>(count - 1);  // 1, 2, 3
    if (count <= 7) return 3;
    if (count <= 15) return 4;
    if (count <= 31) return 5;
    if (count <= 127) return 6;
    return 7;
}

namespace detail {

// Parses a run of decimal digits at text[pos..]; fails on empty or overflow.
inline bool parse_decimal(std::string_view text, std::size_t& pos, std::uint64_t& out) {
    std::size_t start = pos;
    std::uint64_t v = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        v = v * 10 + static_cast<std::uint64_t>(text[pos] - '0');
        if (v > 0xffffffffull) return false;
        ++pos;
    }
    if (pos == start) return false;
    out = v;
    return true;
}

}  // namespace detail

// Parses showmap text: one `edge:count` pair per non-empty line, edge ids
// zero-padded or not, counts >= 1. Duplicate edge ids within one trace and
// anything that does not match the line grammar are format errors; messages
// carry the 1-based line number.
inline std::vector<ShowmapRecord> parse_showmap(std::string_view text) {
    std::vector<ShowmapRecord> records;
    std::unordered_set<std::uint32_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;

        auto fail = [&](const std::string& why) {
            throw FormatError("showmap line " + std::to_string(line_no) + ": " + why);
        };

        std::size_t p = 0;
        std::uint64_t edge = 0, count = 0;
        std::size_t digits_start = p;
        if (!detail::parse_decimal(line, p, edge)) fail("expected decimal edge id");
        if (p - digits_start > 6) fail("edge id has more than 6 digits");
        if (p >= line.size() || line[p] != ':') fail("expected ':' after edge id");
        ++p;
        if (!detail::parse_decimal(line, p, count)) fail("expected decimal hit count");
        if (p != line.size()) fail("trailing characters");
        if (count == 0) fail("hit count of 0");
        if (!seen.insert(static_cast<std::uint32_t>(edge)).second)
            fail("duplicate edge id " + std::to_string(edge));

        records.push_back({static_cast<std::uint32_t>(edge), static_cast<std::uint32_t>(count)});
    }
    return records;
}

// Canonical text form: 6-digit zero-padded edge ids, LF line endings.
inline std::string render_showmap(std::span<const ShowmapRecord> records) {
    std::string out;
    for (const auto& rec : records) {
        std::string edge = std::to_string(rec.edge_id);
        if (edge.size() < 6) edge.insert(0, 6 - edge.size(), '0');
        out += edge;
        out += ':';
        out += std::to_string(rec.hit_count);
        out += '\n';
    }
    return out;
}

// Builds the bit-vector trace plus cmin tuples for one seed.
inline CoverageTrace to_trace(std::span<const ShowmapRecord> records, std::uint32_t map_size) {
    if (map_size == 0) throw ConfigError("map size must be positive");
    CoverageTrace trace;
    trace.map_size = map_size;
    trace.bits = BitVec(map_size);
    std::vector<CminTuple> tuples;
    tuples.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.edge_id >= map_size)
            throw FormatError("edge id " + std::to_string(rec.edge_id) +
                              " out of range for map size " + std::to_string(map_size));
        trace.bits.set(rec.edge_id);
        tuples.push_back({rec.edge_id, hit_bucket(rec.hit_count)});
    }
    std::sort(tuples.begin(), tuples.end());
    trace.tuples = std::move(tuples);
    return trace;
}

}  // namespace moonlight
