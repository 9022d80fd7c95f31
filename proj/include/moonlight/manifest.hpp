#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "moonlight/errors.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

using Manifest = std::vector<SeedRecord>;

inline std::string hex_encode(const std::array<std::uint8_t, 32>& digest) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

inline std::array<std::uint8_t, 32> hex_decode(const std::string& hex) {
    if (hex.size() != 64) throw FormatError("content hash must be 64 hex characters");
    auto nibble = [&](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw FormatError("content hash has non-hex character");
    };
    std::array<std::uint8_t, 32> out{};
    for (std::size_t i = 0; i < 32; ++i)
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return out;
}

inline std::array<std::uint8_t, 32> sha256_bytes(const void* data, std::size_t len) {
    std::array<std::uint8_t, 32> digest{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, digest.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != 32)
        throw std::runtime_error("sha256 failed");
    return digest;
}

// Streams the file through SHA-256; throws ConfigError if unreadable.
inline std::array<std::uint8_t, 32> sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("sha256 context");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    bool read_ok = in.eof() && !in.bad();
    std::array<std::uint8_t, 32> digest{};
    unsigned int out_len = 0;
    EVP_DigestFinal_ex(ctx, digest.data(), &out_len);
    EVP_MD_CTX_free(ctx);
    if (!read_ok || out_len != 32) throw ConfigError("read failed for " + path.string());
    return digest;
}

// Manifest JSON: an array of objects with keys exactly
// {"id","path","size_bytes","exec_time_us","sha256"}; exec_time_us may be null.

inline nlohmann::ordered_json manifest_to_json(const Manifest& manifest) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& seed : manifest) {
        nlohmann::ordered_json entry;
        entry["id"] = seed.id;
        entry["path"] = seed.path;
        entry["size_bytes"] = seed.size_bytes;
        if (seed.exec_time_us)
            entry["exec_time_us"] = *seed.exec_time_us;
        else
            entry["exec_time_us"] = nullptr;
        entry["sha256"] = hex_encode(seed.content_hash);
        arr.push_back(std::move(entry));
    }
    return arr;
}

inline Manifest manifest_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw FormatError("manifest must be a JSON array");
    static const std::unordered_set<std::string> kKeys = {"id", "path", "size_bytes",
                                                          "exec_time_us", "sha256"};
    Manifest manifest;
    std::unordered_set<std::string> paths;
    for (const auto& entry : doc) {
        if (!entry.is_object()) throw FormatError("manifest entry is not an object");
        for (const auto& [key, value] : entry.items())
            if (!kKeys.contains(key)) throw FormatError("unexpected manifest key \"" + key + "\"");
        for (const auto& key : kKeys)
            if (!entry.contains(key)) throw FormatError("manifest entry missing key \"" + key + "\"");

        SeedRecord seed;
        if (!entry["id"].is_number_unsigned()) throw FormatError("manifest id must be unsigned");
        seed.id = entry["id"].get<std::uint32_t>();
        seed.path = entry["path"].get<std::string>();
        if (!entry["size_bytes"].is_number_unsigned())
            throw FormatError("size_bytes must be unsigned");
        seed.size_bytes = entry["size_bytes"].get<std::uint64_t>();
        if (entry["exec_time_us"].is_null())
            seed.exec_time_us = std::nullopt;
        else if (entry["exec_time_us"].is_number_unsigned())
            seed.exec_time_us = entry["exec_time_us"].get<std::uint64_t>();
        else
            throw FormatError("exec_time_us must be unsigned or null");
        seed.content_hash = hex_decode(entry["sha256"].get<std::string>());

        if (seed.id != manifest.size())
            throw FormatError("manifest ids must be contiguous from 0 (got " +
                              std::to_string(seed.id) + " at position " +
                              std::to_string(manifest.size()) + ")");
        if (!paths.insert(seed.path).second)
            throw FormatError("duplicate manifest path " + seed.path);
        manifest.push_back(std::move(seed));
    }
    return manifest;
}

inline void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << manifest_to_json(manifest).dump(2) << '\n';
    if (!out) throw ConfigError("manifest write failed for " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(doc);
}

struct PrepResult {
    Manifest manifest;
    std::vector<std::string> warnings;
};

// Scans a corpus directory: files over max_size_bytes are dropped, exact
// duplicates (by content hash) keep only the lexicographically first path,
// and ids are assigned in lexicographic path order so the result does not
// depend on directory enumeration order. Unreadable files are skipped with
// a warning rather than failing the whole run.
inline PrepResult prep_corpus(const std::filesystem::path& input_dir,
                              std::uint64_t max_size_bytes) {
    if (max_size_bytes == 0) throw ConfigError("max size must be positive");
    std::error_code ec;
    if (!std::filesystem::is_directory(input_dir, ec))
        throw ConfigError(input_dir.string() + " is not a readable directory");

    std::vector<std::filesystem::path> paths;
    auto it = std::filesystem::recursive_directory_iterator(input_dir, ec);
    if (ec) throw ConfigError("cannot scan " + input_dir.string() + ": " + ec.message());
    for (; it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw ConfigError("cannot scan " + input_dir.string() + ": " + ec.message());
        if (it->is_regular_file(ec)) paths.push_back(it->path());
    }
    std::sort(paths.begin(), paths.end(),
              [](const auto& a, const auto& b) { return a.generic_string() < b.generic_string(); });

    PrepResult result;
    std::unordered_set<std::string> seen_hashes;
    for (const auto& path : paths) {
        std::uint64_t size = std::filesystem::file_size(path, ec);
        if (ec) {
            result.warnings.push_back("skipped " + path.string() + ": " + ec.message());
            continue;
        }
        if (size > max_size_bytes) continue;
        std::array<std::uint8_t, 32> digest;
        try {
            digest = sha256_file(path);
        } catch (const ConfigError& e) {
            result.warnings.push_back(std::string("skipped: ") + e.what());
            continue;
        }
        if (!seen_hashes.insert(hex_encode(digest)).second) continue;  // duplicate content

        SeedRecord seed;
        seed.id = static_cast<std::uint32_t>(result.manifest.size());
        seed.path = path.generic_string();
        seed.size_bytes = size;
        seed.content_hash = digest;
        result.manifest.push_back(std::move(seed));
    }
    return result;
}

}  // namespace moonlight
