#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "moonlight/errors.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

// Binary trace format ("MLBV"):
//   4 bytes  magic "MLBV"
//   1 byte   version (0x01)
//   4 bytes  map_size, unsigned little-endian
//   ceil(map_size / 8) payload bytes; bit j lives at byte j/8, bit j%8
//   (LSB-first).
// Tuples are not persisted; cmin runs need the showmap text.

inline constexpr char kTraceMagic[4] = {'M', 'L', 'B', 'V'};
inline constexpr std::uint8_t kTraceVersion = 1;

inline void write_trace(const CoverageTrace& trace, std::ostream& out) {
    out.write(kTraceMagic, 4);
    char ver = static_cast<char>(kTraceVersion);
    out.write(&ver, 1);
    char size_le[4];
    for (int i = 0; i < 4; ++i)
        size_le[i] = static_cast<char>((trace.map_size >> (8 * i)) & 0xff);
    out.write(size_le, 4);

    std::uint32_t n_bytes = (trace.map_size + 7u) / 8u;
    for (std::uint32_t k = 0; k < n_bytes; ++k) {
        std::uint64_t word = trace.bits.words()[k / 8];
        char byte = static_cast<char>((word >> ((k % 8) * 8)) & 0xff);
        out.write(&byte, 1);
    }
    if (!out) throw FormatError("trace write failed");
}

inline CoverageTrace read_trace(std::istream& in) {
    char header[9];
    in.read(header, 9);
    if (in.gcount() != 9) throw FormatError("trace truncated in header");
    if (header[0] != 'M' || header[1] != 'L' || header[2] != 'B' || header[3] != 'V')
        throw FormatError("bad trace magic");
    if (static_cast<std::uint8_t>(header[4]) != kTraceVersion)
        throw FormatError("unsupported trace version " +
                          std::to_string(static_cast<unsigned>(static_cast<std::uint8_t>(header[4]))));
    std::uint32_t map_size = 0;
    for (int i = 0; i < 4; ++i)
        map_size |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(header[5 + i])) << (8 * i);
    if (map_size == 0) throw FormatError("trace map size of 0");

    CoverageTrace trace;
    trace.map_size = map_size;
    trace.bits = BitVec(map_size);
    std::uint32_t n_bytes = (map_size + 7u) / 8u;
    std::string payload(n_bytes, '\0');
    in.read(payload.data(), n_bytes);
    if (static_cast<std::uint32_t>(in.gcount()) != n_bytes)
        throw FormatError("trace payload truncated: expected " + std::to_string(n_bytes) +
                          " bytes, got " + std::to_string(in.gcount()));
    for (std::uint32_t k = 0; k < n_bytes; ++k) {
        std::uint8_t byte = static_cast<std::uint8_t>(payload[k]);
        while (byte) {
            unsigned b = static_cast<unsigned>(std::countr_zero(static_cast<unsigned>(byte)));
            std::uint32_t bit = k * 8 + b;
            if (bit >= map_size) throw FormatError("payload has bits past map size");
            trace.bits.set(bit);
            byte = static_cast<std::uint8_t>(byte & (byte - 1));
        }
    }
    return trace;
}

inline void write_trace_file(const CoverageTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    write_trace(trace, out);
}

inline CoverageTrace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    CoverageTrace trace = read_trace(in);
    // One trace per file; anything after the payload is an error.
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw FormatError("trailing bytes after trace payload in " + path.string());
    return trace;
}

}  // namespace moonlight
