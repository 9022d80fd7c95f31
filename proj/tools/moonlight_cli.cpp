// Command-line surface for the corpus distillation pipeline:
//   prep -> trace -> distill -> verify / stats / compare
//
// Exit codes: 0 ok, 2 usage or configuration, 3 ingestion or format,
// 4 distillation precondition, 5 verification failure.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "moonlight/baselines.hpp"
#include "moonlight/exact.hpp"
#include "moonlight/manifest.hpp"
#include "moonlight/matrix.hpp"
#include "moonlight/report.hpp"
#include "moonlight/showmap.hpp"
#include "moonlight/solver.hpp"
#include "moonlight/trace_io.hpp"

namespace fs = std::filesystem;
using namespace moonlight;

namespace {

WeightScheme parse_scheme(const std::string& name) {
    if (name == "none") return WeightScheme::Unweighted;
    if (name == "size") return WeightScheme::Size;
    if (name == "time") return WeightScheme::Time;
    throw ConfigError("unknown weight scheme \"" + name + "\" (expected none|size|time)");
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Loads one trace per manifest entry from <id>.mlbv or <id>.showmap.
// Binary traces carry their own map size; text traces use map_size.
// When tuples are required (cmin) only text traces qualify.
std::vector<CoverageTrace> load_traces(const Manifest& manifest, const fs::path& dir,
                                       std::uint32_t map_size, bool want_tuples) {
    std::vector<CoverageTrace> traces(manifest.size());
    std::vector<std::uint32_t> missing;
    for (const auto& seed : manifest) {
        fs::path bin = dir / (std::to_string(seed.id) + ".mlbv");
        fs::path txt = dir / (std::to_string(seed.id) + ".showmap");
        bool has_bin = fs::exists(bin);
        bool has_txt = fs::exists(txt);
        if (want_tuples) {
            if (!has_txt) {
                missing.push_back(seed.id);
                continue;
            }
            has_bin = false;  // tuples only come from text
        } else if (!has_bin && !has_txt) {
            missing.push_back(seed.id);
            continue;
        }
        if (has_bin) {
            traces[seed.id] = read_trace_file(bin);
        } else {
            try {
                traces[seed.id] = to_trace(parse_showmap(read_text_file(txt)), map_size);
            } catch (const FormatError& e) {
                throw FormatError(txt.string() + ": " + e.what());
            }
        }
    }
    if (!missing.empty()) {
        std::string ids;
        for (auto id : missing) ids += (ids.empty() ? "" : " ") + std::to_string(id);
        if (want_tuples)
            throw PreconditionError(
                "cmin needs showmap text traces; none found for ids: " + ids);
        throw FormatError("no trace (.mlbv or .showmap) found for ids: " + ids);
    }
    return traces;
}

struct DistillOutcome {
    Selection selection;
    std::uint64_t wall_ms = 0;
};

DistillOutcome run_algo(const std::string& algo, WeightScheme scheme, const Manifest& manifest,
                        const std::vector<CoverageTrace>& traces,
                        std::optional<std::uint32_t> k, std::uint64_t rng_seed) {
    auto start = std::chrono::steady_clock::now();
    DistillOutcome out;
    if (algo == "moonlight") {
        CoverageMatrix A = build_matrix(traces, manifest, scheme);
        out.selection = moonlight_distill(A, SolverConfig{scheme});
    } else if (algo == "minset") {
        CoverageMatrix A = build_matrix(traces, manifest, WeightScheme::Unweighted);
        out.selection = minset_unweighted(A);
    } else if (algo == "cmin") {
        out.selection = cmin_distill(traces, manifest);
    } else if (algo == "random") {
        if (!k) throw ConfigError("--algo random needs --k");
        out.selection = random_sample(manifest, *k, rng_seed);
    } else if (algo == "exact") {
        CoverageMatrix A = build_matrix(traces, manifest, scheme);
        out.selection = exact_minset(A, scheme);
    } else if (algo == "full") {
        out.selection = full_selection(manifest);
    } else {
        throw ConfigError("unknown algorithm \"" + algo +
                          "\" (expected moonlight|minset|cmin|random|exact|full)");
    }
    out.wall_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                 std::chrono::steady_clock::now() - start)
                                                 .count());
    return out;
}

AlgoRun make_run(const std::string& algo, DistillOutcome outcome, const Manifest& manifest,
                 const std::vector<CoverageTrace>& traces) {
    CoverageMatrix check = build_matrix(traces, manifest, WeightScheme::Unweighted);
    AlgoRun run;
    run.algo = algo;
    run.wall_ms = outcome.wall_ms;
    run.coverage_ok = verify_cover(check, outcome.selection).ok;
    run.coverage_exempt = algo == "random";
    run.selection = std::move(outcome.selection);
    return run;
}

int cmd_prep(const fs::path& in_dir, const fs::path& out_file, std::uint64_t max_size) {
    if (max_size == 0) throw ConfigError("--max-size must be positive");
    PrepResult result = prep_corpus(in_dir, max_size);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    write_manifest(result.manifest, out_file);
    std::cerr << result.manifest.size() << " seeds kept";
    if (!result.warnings.empty()) std::cerr << ", " << result.warnings.size() << " skipped";
    std::cerr << '\n';
    return 0;
}

int cmd_trace(const fs::path& manifest_file, const fs::path& showmap_dir, const fs::path& out_dir,
              std::uint32_t map_size) {
    Manifest manifest = read_manifest(manifest_file);

    std::vector<std::uint32_t> missing;
    for (const auto& seed : manifest)
        if (!fs::exists(showmap_dir / (std::to_string(seed.id) + ".showmap")))
            missing.push_back(seed.id);
    if (!missing.empty()) {
        std::string ids;
        for (auto id : missing) ids += (ids.empty() ? "" : " ") + std::to_string(id);
        throw FormatError("missing showmap files for ids: " + ids);
    }

    fs::create_directories(out_dir);

    // Conversions are independent per file; fan out and surface the first
    // failure after all workers stop.
    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::optional<std::string> failure;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= manifest.size()) return;
            {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (failure) return;
            }
            fs::path txt = showmap_dir / (std::to_string(manifest[i].id) + ".showmap");
            try {
                CoverageTrace trace = to_trace(parse_showmap(read_text_file(txt)), map_size);
                write_trace_file(trace, out_dir / (std::to_string(manifest[i].id) + ".mlbv"));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = txt.string() + ": " + e.what();
            }
        }
    };
    unsigned n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                         static_cast<unsigned>(manifest.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) throw FormatError(*failure);
    return 0;
}

int cmd_distill(const std::string& algo, const std::string& weight, const fs::path& manifest_file,
                const fs::path& traces_dir, const fs::path& out_file,
                const std::optional<fs::path>& copy_to, const std::optional<fs::path>& report_file,
                std::optional<std::uint32_t> k, std::uint64_t rng_seed, std::uint32_t map_size) {
    WeightScheme scheme = parse_scheme(weight);
    Manifest manifest = read_manifest(manifest_file);
    std::vector<CoverageTrace> traces = load_traces(manifest, traces_dir, map_size, algo == "cmin");

    DistillOutcome outcome = run_algo(algo, scheme, manifest, traces, k, rng_seed);
    write_selection_file(outcome.selection, out_file);

    if (copy_to) {
        fs::create_directories(*copy_to);
        std::set<std::string> used;
        for (auto id : outcome.selection.chosen) {
            fs::path src = manifest[id].path;
            std::string name = src.filename().string();
            if (!used.insert(name).second) {
                name = std::to_string(id) + "_" + name;
                used.insert(name);
            }
            std::error_code ec;
            fs::copy_file(src, *copy_to / name, fs::copy_options::overwrite_existing, ec);
            if (ec)
                throw ConfigError("cannot copy " + src.string() + ": " + ec.message());
        }
    }

    if (report_file) {
        AlgoRun run = make_run(algo, std::move(outcome), manifest, traces);
        ComparisonReport report = compare_report({run}, manifest);
        std::ofstream out(*report_file);
        if (!out) throw ConfigError("cannot open " + report_file->string() + " for writing");
        out << report.json.dump(2) << '\n';
    }
    return 0;
}

int cmd_verify(const fs::path& selection_file, const fs::path& manifest_file,
               const fs::path& traces_dir, std::uint32_t map_size) {
    Manifest manifest = read_manifest(manifest_file);
    std::vector<CoverageTrace> traces = load_traces(manifest, traces_dir, map_size, false);
    Selection selection;
    selection.chosen = read_selection_file(selection_file);
    for (auto id : selection.chosen)
        if (id >= manifest.size())
            throw FormatError("selection references unknown seed id " + std::to_string(id));

    CoverageMatrix A = build_matrix(traces, manifest, WeightScheme::Unweighted);
    CoverVerdict verdict = verify_cover(A, selection);
    if (verdict.ok) {
        std::cout << "coverage preserved\n";
        return 0;
    }
    std::cerr << "missing columns:";
    for (auto c : verdict.missing_cols) std::cerr << ' ' << c;
    std::cerr << '\n';
    return 5;
}

int cmd_stats(const fs::path& manifest_file, const std::optional<fs::path>& selection_file) {
    Manifest manifest = read_manifest(manifest_file);
    CorpusStats stats;
    if (selection_file) {
        Selection selection;
        selection.chosen = read_selection_file(*selection_file);
        for (auto id : selection.chosen)
            if (id >= manifest.size())
                throw FormatError("selection references unknown seed id " + std::to_string(id));
        stats = corpus_stats(manifest, &selection);
    } else {
        stats = corpus_stats(manifest);
    }
    std::cout << "{\"files\":" << stats.file_count << ",\"bytes\":" << stats.total_size_bytes
              << "}\n";
    return 0;
}

int cmd_compare(const std::string& algos_csv, const std::string& weight,
                const fs::path& manifest_file, const fs::path& traces_dir,
                const std::optional<fs::path>& csv_file, const std::optional<fs::path>& json_file,
                std::optional<std::uint32_t> k, std::uint64_t rng_seed, std::uint32_t map_size) {
    WeightScheme scheme = parse_scheme(weight);
    Manifest manifest = read_manifest(manifest_file);

    std::vector<std::string> algos;
    std::stringstream ss(algos_csv);
    std::string name;
    while (std::getline(ss, name, ','))
        if (!name.empty()) algos.push_back(name);
    if (algos.empty()) throw ConfigError("--algos list is empty");

    bool any_cmin = std::find(algos.begin(), algos.end(), "cmin") != algos.end();
    std::vector<CoverageTrace> traces = load_traces(manifest, traces_dir, map_size, any_cmin);

    std::vector<AlgoRun> runs;
    for (const auto& algo : algos)
        runs.push_back(make_run(algo, run_algo(algo, scheme, manifest, traces, k, rng_seed),
                                manifest, traces));

    ComparisonReport report = compare_report(runs, manifest);
    if (csv_file) {
        std::ofstream out(*csv_file);
        if (!out) throw ConfigError("cannot open " + csv_file->string() + " for writing");
        out << report.csv;
    }
    if (json_file) {
        std::ofstream out(*json_file);
        if (!out) throw ConfigError("cannot open " + json_file->string() + " for writing");
        out << report.json.dump(2) << '\n';
    }
    if (!csv_file && !json_file) std::cout << report.csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus distillation toolkit for coverage-guided fuzzing"};
    app.require_subcommand(1);

    // prep
    auto* prep = app.add_subcommand("prep", "deduplicate and size-filter a corpus directory");
    std::string prep_in, prep_out;
    std::uint64_t prep_max_size = 307200;
    prep->add_option("--in", prep_in, "corpus directory")->required();
    prep->add_option("--out", prep_out, "manifest file to write")->required();
    prep->add_option("--max-size", prep_max_size, "size cutoff in bytes (default 307200)");

    // trace
    auto* trace = app.add_subcommand("trace", "convert showmap text to binary traces");
    std::string trace_manifest, trace_showmap_dir, trace_out;
    std::uint32_t trace_map_size = kDefaultMapSize;
    trace->add_option("--manifest", trace_manifest)->required();
    trace->add_option("--showmap-dir", trace_showmap_dir)->required();
    trace->add_option("--out", trace_out, "directory for .mlbv traces")->required();
    trace->add_option("--map-size", trace_map_size, "edge space width (default 65536)");

    // distill
    auto* distill = app.add_subcommand("distill", "select a coverage-preserving seed subset");
    std::string distill_algo, distill_weight = "none";
    std::string distill_manifest, distill_traces, distill_out;
    std::string distill_copy_to, distill_report;
    std::uint64_t distill_rng_seed = 0;
    std::uint32_t distill_k = 0;
    std::uint32_t distill_map_size = kDefaultMapSize;
    distill->add_option("--algo", distill_algo, "moonlight|minset|cmin|random|exact|full")
        ->required();
    distill->add_option("--weight", distill_weight, "none|size|time (default none)");
    distill->add_option("--manifest", distill_manifest)->required();
    distill->add_option("--traces", distill_traces, "directory of traces")->required();
    distill->add_option("--out", distill_out, "selection file to write")->required();
    distill->add_option("--copy-to", distill_copy_to, "copy selected seed files here");
    distill->add_option("--report", distill_report, "write a JSON report here");
    distill->add_option("--rng-seed", distill_rng_seed, "seed for --algo random");
    distill->add_option("--k", distill_k, "sample size for --algo random");
    distill->add_option("--map-size", distill_map_size, "edge space width (default 65536)");

    // verify
    auto* verify = app.add_subcommand("verify", "check a selection preserves corpus coverage");
    std::string verify_selection, verify_manifest, verify_traces;
    std::uint32_t verify_map_size = kDefaultMapSize;
    verify->add_option("--selection", verify_selection)->required();
    verify->add_option("--manifest", verify_manifest)->required();
    verify->add_option("--traces", verify_traces)->required();
    verify->add_option("--map-size", verify_map_size, "edge space width (default 65536)");

    // stats
    auto* stats = app.add_subcommand("stats", "print file count and byte total");
    std::string stats_manifest, stats_selection;
    stats->add_option("--manifest", stats_manifest)->required();
    stats->add_option("--selection", stats_selection, "restrict to a selection file");

    // compare
    auto* compare = app.add_subcommand("compare", "run several algorithms and tabulate them");
    std::string compare_algos = "moonlight,minset,full";
    std::string compare_weight = "none";
    std::string compare_manifest, compare_traces, compare_csv, compare_json;
    std::uint64_t compare_rng_seed = 0;
    std::uint32_t compare_k = 0;
    std::uint32_t compare_map_size = kDefaultMapSize;
    compare->add_option("--algos", compare_algos, "comma-separated list (default moonlight,minset,full)");
    compare->add_option("--weight", compare_weight, "none|size|time (default none)");
    compare->add_option("--manifest", compare_manifest)->required();
    compare->add_option("--traces", compare_traces)->required();
    compare->add_option("--csv", compare_csv, "write the CSV table here (default stdout)");
    compare->add_option("--json", compare_json, "write the JSON table here");
    compare->add_option("--rng-seed", compare_rng_seed, "seed for random sampling");
    compare->add_option("--k", compare_k, "sample size for random sampling");
    compare->add_option("--map-size", compare_map_size, "edge space width (default 65536)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (prep->parsed()) return cmd_prep(prep_in, prep_out, prep_max_size);
        if (trace->parsed())
            return cmd_trace(trace_manifest, trace_showmap_dir, trace_out, trace_map_size);
        if (distill->parsed()) {
            std::optional<fs::path> copy_to, report;
            if (!distill_copy_to.empty()) copy_to = distill_copy_to;
            if (!distill_report.empty()) report = distill_report;
            std::optional<std::uint32_t> k;
            if (distill->count("--k") > 0) k = distill_k;
            return cmd_distill(distill_algo, distill_weight, distill_manifest, distill_traces,
                               distill_out, copy_to, report, k, distill_rng_seed,
                               distill_map_size);
        }
        if (verify->parsed())
            return cmd_verify(verify_selection, verify_manifest, verify_traces, verify_map_size);
        if (stats->parsed()) {
            std::optional<fs::path> selection;
            if (!stats_selection.empty()) selection = stats_selection;
            return cmd_stats(stats_manifest, selection);
        }
        if (compare->parsed()) {
            std::optional<fs::path> csv, json;
            if (!compare_csv.empty()) csv = compare_csv;
            if (!compare_json.empty()) json = compare_json;
            std::optional<std::uint32_t> k;
            if (compare->count("--k") > 0) k = compare_k;
            return cmd_compare(compare_algos, compare_weight, compare_manifest, compare_traces,
                               csv, json, k, compare_rng_seed, compare_map_size);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
