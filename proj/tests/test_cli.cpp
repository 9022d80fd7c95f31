#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include "moonlight/manifest.hpp"
#include "moonlight/trace_io.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using namespace moonlight;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& stdout_file = {},
        const fs::path& stderr_file = {}) {
    std::string cmd = std::string(MOONLIGHT_BIN_PATH) + " " + args;
    if (!stdout_file.empty()) cmd += " >" + stdout_file.string();
    if (!stderr_file.empty()) cmd += " 2>" + stderr_file.string();
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Writes the canonical fixture corpus to disk: five seed files with sizes
// 10,1,2,2,100, a manifest, and per-seed showmap text over an 8-edge map.
struct FixtureCorpus {
    TempDir dir;
    fs::path manifest_file;
    fs::path showmap_dir;

    FixtureCorpus() {
        showmap_dir = dir.path / "showmap";
        fs::create_directories(showmap_dir);
        Manifest manifest;
        auto weights = a0_weights();
        for (std::uint32_t i = 0; i < 5; ++i) {
            fs::path seed_file = dir.path / "corpus" / ("s" + std::to_string(i) + ".bin");
            write_file(seed_file, std::string(weights[i], 'a' + static_cast<char>(i)));
            SeedRecord rec;
            rec.id = i;
            rec.path = seed_file.string();
            rec.size_bytes = weights[i];
            rec.content_hash = sha256_file(seed_file);
            manifest.push_back(std::move(rec));

            std::string text;
            for (auto e : a0_rows()[i]) {
                std::string edge = std::to_string(e);
                text += std::string(6 - edge.size(), '0') + edge + ":1\n";
            }
            write_file(showmap_dir / (std::to_string(i) + ".showmap"), text);
        }
        manifest_file = dir.path / "manifest.json";
        write_manifest(manifest, manifest_file);
    }

    std::string base_args() const {
        return "--manifest " + manifest_file.string();
    }
};

}  // namespace

TEST_CASE("cli: trace conversion and the full distill pipeline") {
    FixtureCorpus fx;
    fs::path traces = fx.dir.path / "traces";

    REQUIRE(run("trace " + fx.base_args() + " --showmap-dir " + fx.showmap_dir.string() +
                " --out " + traces.string() + " --map-size 8") == 0);

    // popcount of each binary trace equals its showmap line count
    for (std::uint32_t i = 0; i < 5; ++i) {
        CoverageTrace t = read_trace_file(traces / (std::to_string(i) + ".mlbv"));
        REQUIRE(t.map_size == 8);
        REQUIRE(t.bits.popcount() == a0_rows()[i].size());
    }

    fs::path out = fx.dir.path / "selection.txt";
    REQUIRE(run("distill --algo moonlight --weight none " + fx.base_args() + " --traces " +
                traces.string() + " --out " + out.string()) == 0);
    REQUIRE(slurp(out) == "0\n4\n");

    // byte-identical on a second run
    fs::path out2 = fx.dir.path / "selection2.txt";
    REQUIRE(run("distill --algo moonlight --weight none " + fx.base_args() + " --traces " +
                traces.string() + " --out " + out2.string()) == 0);
    REQUIRE(slurp(out) == slurp(out2));

    // weighted run, with a report
    fs::path wout = fx.dir.path / "weighted.txt";
    fs::path report = fx.dir.path / "report.json";
    REQUIRE(run("distill --algo moonlight --weight size " + fx.base_args() + " --traces " +
                traces.string() + " --out " + wout.string() + " --report " + report.string()) ==
            0);
    REQUIRE(slurp(wout) == "0\n1\n2\n3\n");
    auto doc = nlohmann::json::parse(slurp(report));
    REQUIRE(doc.is_array());
    REQUIRE(doc[0]["algo"] == "moonlight");
    REQUIRE(doc[0]["files"] == 4);
    REQUIRE(doc[0]["bytes"] == 15);
    REQUIRE(doc[0]["cost"] == 3);
    REQUIRE(doc[0]["coverage_ok"] == true);

    // verify the unweighted selection
    REQUIRE(run("verify --selection " + out.string() + " " + fx.base_args() + " --traces " +
                traces.string()) == 0);

    // a broken selection fails with the missing column on stderr
    fs::path bad = fx.dir.path / "bad.txt";
    write_file(bad, "4\n");
    fs::path err = fx.dir.path / "err.txt";
    REQUIRE(run("verify --selection " + bad.string() + " " + fx.base_args() + " --traces " +
                traces.string(), {}, err) == 5);
    REQUIRE(slurp(err).find("missing columns: 2") != std::string::npos);

    // stats, full corpus and selection
    fs::path stats_out = fx.dir.path / "stats.txt";
    REQUIRE(run("stats " + fx.base_args(), stats_out) == 0);
    REQUIRE(slurp(stats_out) == "{\"files\":5,\"bytes\":115}\n");
    REQUIRE(run("stats " + fx.base_args() + " --selection " + out.string(), stats_out) == 0);
    REQUIRE(slurp(stats_out) == "{\"files\":2,\"bytes\":110}\n");
}

TEST_CASE("cli: full, random, cmin and exact algorithms") {
    FixtureCorpus fx;
    fs::path out = fx.dir.path / "sel.txt";
    std::string traces_args = " --traces " + fx.showmap_dir.string() + " --map-size 8";

    REQUIRE(run("distill --algo full " + fx.base_args() + traces_args + " --out " +
                out.string()) == 0);
    REQUIRE(slurp(out) == "0\n1\n2\n3\n4\n");

    // random: deterministic under a fixed seed
    fs::path r1 = fx.dir.path / "r1.txt";
    fs::path r2 = fx.dir.path / "r2.txt";
    REQUIRE(run("distill --algo random --k 3 --rng-seed 7 " + fx.base_args() + traces_args +
                " --out " + r1.string()) == 0);
    REQUIRE(run("distill --algo random --k 3 --rng-seed 7 " + fx.base_args() + traces_args +
                " --out " + r2.string()) == 0);
    REQUIRE(slurp(r1) == slurp(r2));
    REQUIRE(run("distill --algo random " + fx.base_args() + traces_args + " --out " +
                r1.string()) == 2);  // no --k

    // cmin works from showmap text, refuses binary-only traces
    REQUIRE(run("distill --algo cmin " + fx.base_args() + traces_args + " --out " +
                out.string()) == 0);
    fs::path bintraces = fx.dir.path / "bintraces";
    REQUIRE(run("trace " + fx.base_args() + " --showmap-dir " + fx.showmap_dir.string() +
                " --out " + bintraces.string() + " --map-size 8") == 0);
    REQUIRE(run("distill --algo cmin " + fx.base_args() + " --traces " + bintraces.string() +
                " --out " + out.string()) == 4);

    // exact agrees with moonlight on the fixture
    REQUIRE(run("distill --algo exact --weight size " + fx.base_args() + traces_args +
                " --out " + out.string()) == 0);
    REQUIRE(slurp(out) == "0\n1\n2\n3\n");

    // time weighting without exec times in the manifest
    REQUIRE(run("distill --algo moonlight --weight time " + fx.base_args() + traces_args +
                " --out " + out.string()) == 4);

    // unknown algorithm
    REQUIRE(run("distill --algo peachy " + fx.base_args() + traces_args + " --out " +
                out.string()) == 2);
}

TEST_CASE("cli: copy-to disambiguates basename collisions") {
    TempDir dir;
    Manifest manifest;
    for (std::uint32_t i = 0; i < 2; ++i) {
        fs::path seed_file = dir.path / ("sub" + std::to_string(i)) / "seed.bin";
        write_file(seed_file, std::string(8 + i, 'x'));
        SeedRecord rec;
        rec.id = i;
        rec.path = seed_file.string();
        rec.size_bytes = 8 + i;
        rec.content_hash = sha256_file(seed_file);
        manifest.push_back(std::move(rec));
        write_file(dir.path / "showmap" / (std::to_string(i) + ".showmap"),
                   std::string("00000") + std::to_string(i) + ":1\n");
    }
    fs::path manifest_file = dir.path / "m.json";
    write_manifest(manifest, manifest_file);

    fs::path out = dir.path / "sel.txt";
    fs::path copies = dir.path / "copies";
    REQUIRE(run("distill --algo full --manifest " + manifest_file.string() + " --traces " +
                (dir.path / "showmap").string() + " --map-size 8 --out " + out.string() +
                " --copy-to " + copies.string()) == 0);
    REQUIRE(fs::exists(copies / "seed.bin"));
    REQUIRE(fs::exists(copies / "1_seed.bin"));
}

TEST_CASE("cli: prep deduplicates, filters by size, and validates flags") {
    TempDir dir;
    fs::path corpus = dir.path / "corpus";
    write_file(corpus / "a", std::string(100, 'z'));
    write_file(corpus / "b", std::string(100, 'z'));
    write_file(corpus / "c", std::string(400000, 'q'));
    fs::path manifest_file = dir.path / "manifest.json";

    REQUIRE(run("prep --in " + corpus.string() + " --out " + manifest_file.string()) == 0);
    Manifest manifest = read_manifest(manifest_file);
    REQUIRE(manifest.size() == 1);
    REQUIRE(fs::path(manifest[0].path).filename() == "a");

    REQUIRE(run("prep --in " + corpus.string() + " --out " + manifest_file.string() +
                " --max-size 0") == 2);
    REQUIRE(run("prep --in " + (dir.path / "absent").string() + " --out " +
                manifest_file.string()) == 2);

    // empty directory: empty manifest, success
    fs::path empty_dir = dir.path / "empty";
    fs::create_directories(empty_dir);
    REQUIRE(run("prep --in " + empty_dir.string() + " --out " + manifest_file.string()) == 0);
    REQUIRE(read_manifest(manifest_file).empty());
}

TEST_CASE("cli: trace ingestion failures exit 3") {
    FixtureCorpus fx;
    fs::path out_dir = fx.dir.path / "t";
    fs::path err = fx.dir.path / "err.txt";

    // map too small for the fixture's edge ids
    REQUIRE(run("trace " + fx.base_args() + " --showmap-dir " + fx.showmap_dir.string() +
                " --out " + out_dir.string() + " --map-size 4", {}, err) == 3);

    // missing showmap file
    fs::remove(fx.showmap_dir / "3.showmap");
    REQUIRE(run("trace " + fx.base_args() + " --showmap-dir " + fx.showmap_dir.string() +
                " --out " + out_dir.string() + " --map-size 8", {}, err) == 3);
    REQUIRE(slurp(err).find("3") != std::string::npos);

    // malformed line, reported with file and line number
    write_file(fx.showmap_dir / "3.showmap", "000003:1\nnope\n");
    REQUIRE(run("trace " + fx.base_args() + " --showmap-dir " + fx.showmap_dir.string() +
                " --out " + out_dir.string() + " --map-size 8", {}, err) == 3);
    std::string message = slurp(err);
    REQUIRE(message.find("3.showmap") != std::string::npos);
    REQUIRE(message.find("line 2") != std::string::npos);
}

TEST_CASE("cli: empty showmap becomes an all-zero trace that distillation drops") {
    TempDir dir;
    Manifest manifest;
    for (std::uint32_t i = 0; i < 2; ++i) {
        SeedRecord rec;
        rec.id = i;
        rec.path = (dir.path / ("s" + std::to_string(i))).string();
        rec.size_bytes = 4;
        manifest.push_back(rec);
    }
    write_file(dir.path / "showmap" / "0.showmap", "000000:1\n");
    write_file(dir.path / "showmap" / "1.showmap", "");  // no coverage at all
    fs::path manifest_file = dir.path / "m.json";
    write_manifest(manifest, manifest_file);

    std::string base = "--manifest " + manifest_file.string();
    fs::path traces = dir.path / "traces";
    REQUIRE(run("trace " + base + " --showmap-dir " + (dir.path / "showmap").string() +
                " --out " + traces.string() + " --map-size 8") == 0);
    CoverageTrace empty = read_trace_file(traces / "1.mlbv");
    REQUIRE(empty.bits.none());

    fs::path out = dir.path / "sel.txt";
    REQUIRE(run("distill --algo moonlight " + base + " --traces " + traces.string() + " --out " +
                out.string()) == 0);
    REQUIRE(slurp(out) == "0\n");
    REQUIRE(run("verify --selection " + out.string() + " " + base + " --traces " +
                traces.string()) == 0);
}

TEST_CASE("cli: exact refuses corpora over the row limit") {
    TempDir dir;
    Manifest manifest;
    for (std::uint32_t i = 0; i < 25; ++i) {
        SeedRecord rec;
        rec.id = i;
        rec.path = (dir.path / ("s" + std::to_string(i))).string();
        rec.size_bytes = 1;
        manifest.push_back(rec);
        write_file(dir.path / "showmap" / (std::to_string(i) + ".showmap"),
                   render_showmap(std::vector<ShowmapRecord>{{i, 1}}));
    }
    fs::path manifest_file = dir.path / "m.json";
    write_manifest(manifest, manifest_file);
    fs::path out = dir.path / "sel.txt";
    REQUIRE(run("distill --algo exact --manifest " + manifest_file.string() + " --traces " +
                (dir.path / "showmap").string() + " --map-size 32 --out " + out.string()) == 4);
}

TEST_CASE("cli: prep output is byte-identical across runs") {
    TempDir dir;
    fs::path corpus = dir.path / "corpus";
    write_file(corpus / "one", "alpha");
    write_file(corpus / "two", "beta");
    fs::path m1 = dir.path / "m1.json";
    fs::path m2 = dir.path / "m2.json";
    REQUIRE(run("prep --in " + corpus.string() + " --out " + m1.string()) == 0);
    REQUIRE(run("prep --in " + corpus.string() + " --out " + m2.string()) == 0);
    REQUIRE(slurp(m1) == slurp(m2));
}

TEST_CASE("cli: compare emits one row per algorithm") {
    FixtureCorpus fx;
    fs::path csv = fx.dir.path / "table.csv";
    fs::path json = fx.dir.path / "table.json";
    REQUIRE(run("compare " + fx.base_args() + " --traces " + fx.showmap_dir.string() +
                " --map-size 8 --algos moonlight,minset,cmin,full --weight size --csv " +
                csv.string() + " --json " + json.string()) == 0);

    std::string table = slurp(csv);
    REQUIRE(table.find("algo,files,bytes,cost") == 0);
    REQUIRE(table.find("moonlight,4,15,3") != std::string::npos);
    REQUIRE(table.find("minset,2,110,0") != std::string::npos);
    REQUIRE(table.find("full,5,115,0") != std::string::npos);

    auto doc = nlohmann::json::parse(slurp(json));
    REQUIRE(doc.size() == 4);
    for (const auto& row : doc) REQUIRE(row["coverage_ok"] == true);
}
