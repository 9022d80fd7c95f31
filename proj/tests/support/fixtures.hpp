#pragma once

// Shared fixtures and generators for the test suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "moonlight/matrix.hpp"
#include "moonlight/showmap.hpp"
#include "moonlight/types.hpp"

namespace testsupport {

using namespace moonlight;

// The canonical 5x6 instance used across the suites (rows s0..s4, cols
// e0..e5):
//
//        e0 e1 e2 e3 e4 e5
//   s0:   0  0  1  0  1  0
//   s1:   0  1  0  0  0  0
//   s2:   1  0  0  0  1  0
//   s3:   0  0  0  1  1  0
//   s4:   1  1  0  1  1  0
//
// e5 is singular, s0 uniquely covers e2, s4 dominates {s1,s2,s3}, and e4
// dominates {e0,e2,e3} but not e1 (because of s1).
inline const std::vector<std::vector<std::uint32_t>>& a0_rows() {
    static const std::vector<std::vector<std::uint32_t>> rows = {
        {2, 4}, {1}, {0, 4}, {3, 4}, {0, 1, 3, 4}};
    return rows;
}

inline std::vector<CoverageTrace> a0_traces(std::uint32_t map_size = 6) {
    std::vector<CoverageTrace> traces;
    for (const auto& edges : a0_rows()) {
        CoverageTrace t;
        t.map_size = map_size;
        t.bits = BitVec(map_size);
        std::vector<CminTuple> tuples;
        for (auto e : edges) {
            t.bits.set(e);
            tuples.push_back({e, 0});
        }
        t.tuples = std::move(tuples);
        traces.push_back(std::move(t));
    }
    return traces;
}

inline std::vector<SeedRecord> make_seeds(const std::vector<std::uint64_t>& sizes) {
    std::vector<SeedRecord> seeds;
    for (std::uint32_t i = 0; i < sizes.size(); ++i) {
        SeedRecord s;
        s.id = i;
        s.path = "seed" + std::to_string(i);
        s.size_bytes = sizes[i];
        s.exec_time_us = sizes[i];
        seeds.push_back(std::move(s));
    }
    return seeds;
}

// The weighted variant: sizes chosen so the weighted and unweighted optima
// differ ({s0,s4} vs {s0,s1,s2,s3}).
inline std::vector<std::uint64_t> a0_weights() { return {10, 1, 2, 2, 100}; }

inline CoverageMatrix a0_matrix(WeightScheme scheme = WeightScheme::Unweighted,
                                std::vector<std::uint64_t> sizes = {1, 1, 1, 1, 1}) {
    return build_matrix(a0_traces(), make_seeds(sizes), scheme);
}

// Deterministic bounded draw (same rejection scheme as the library).
inline std::uint64_t rnd_below(std::mt19937_64& gen, std::uint64_t n) {
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

inline double rnd_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
}

struct RandomInstance {
    std::vector<CoverageTrace> traces;
    std::vector<SeedRecord> seeds;
};

// Independent random bits at a density drawn from [density_min, density_max];
// rows may come out empty (build_matrix drops those). Traces carry tuples so
// cmin can run on them too.
inline RandomInstance random_instance(std::mt19937_64& gen, std::uint32_t max_rows,
                                      std::uint32_t max_cols, double density_min,
                                      double density_max) {
    RandomInstance inst;
    std::uint32_t n = 1 + static_cast<std::uint32_t>(rnd_below(gen, max_rows));
    std::uint32_t m = 1 + static_cast<std::uint32_t>(rnd_below(gen, max_cols));
    double density = density_min + (density_max - density_min) * rnd_unit(gen);

    std::vector<std::uint64_t> sizes;
    for (std::uint32_t i = 0; i < n; ++i) {
        CoverageTrace t;
        t.map_size = m;
        t.bits = BitVec(m);
        std::vector<CminTuple> tuples;
        for (std::uint32_t j = 0; j < m; ++j) {
            if (rnd_unit(gen) < density) {
                t.bits.set(j);
                tuples.push_back({j, hit_bucket(1 + static_cast<std::uint32_t>(rnd_below(gen, 200)))});
            }
        }
        t.tuples = std::move(tuples);
        inst.traces.push_back(std::move(t));
        sizes.push_back(1 + rnd_below(gen, 999));
    }
    inst.seeds = make_seeds(sizes);
    return inst;
}

// Fixed-width corpus with sampled per-row coverage; cheaper than the
// bernoulli generator for wide maps.
inline RandomInstance random_corpus(std::mt19937_64& gen, std::uint32_t max_rows,
                                    std::uint32_t map_size, double density_min,
                                    double density_max) {
    RandomInstance inst;
    std::uint32_t n = 1 + static_cast<std::uint32_t>(rnd_below(gen, max_rows));
    double density = density_min + (density_max - density_min) * rnd_unit(gen);
    std::uint32_t per_row = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(static_cast<double>(map_size) * density));

    std::vector<std::uint64_t> sizes;
    for (std::uint32_t i = 0; i < n; ++i) {
        CoverageTrace t;
        t.map_size = map_size;
        t.bits = BitVec(map_size);
        for (std::uint32_t k = 0; k < per_row; ++k)
            t.bits.set(static_cast<std::uint32_t>(rnd_below(gen, map_size)));
        std::vector<CminTuple> tuples;
        t.bits.for_each_set([&](std::uint32_t e) {
            tuples.push_back({e, hit_bucket(1 + static_cast<std::uint32_t>(rnd_below(gen, 200)))});
        });
        t.tuples = std::move(tuples);
        inst.traces.push_back(std::move(t));
        sizes.push_back(1 + rnd_below(gen, 999));
    }
    inst.seeds = make_seeds(sizes);
    return inst;
}

// Redundancy-heavy corpus: a handful of behavior profiles, most seeds exact
// behavior duplicates of one profile, some supersets, some profile unions.
// Mirrors what crawled corpora look like, where thousands of files take the
// same parse path.
struct ClusteredSpec {
    std::uint32_t n_profiles = 10;
    std::uint32_t n_seeds = 200;
    std::uint32_t map_size = 512;
    double profile_density = 0.08;
    double dup_frac = 0.60;     // exact duplicate of a profile
    double extend_frac = 0.30;  // profile plus a few extra edges
    std::uint64_t max_size_bytes = 30000;
};

inline RandomInstance clustered_corpus(std::mt19937_64& gen, const ClusteredSpec& spec) {
    struct Profile {
        std::vector<std::uint32_t> edges;
        std::vector<std::uint32_t> counts;
    };
    std::vector<Profile> profiles(spec.n_profiles);
    for (auto& p : profiles) {
        for (std::uint32_t j = 0; j < spec.map_size; ++j) {
            if (rnd_unit(gen) < spec.profile_density) {
                p.edges.push_back(j);
                p.counts.push_back(1 + static_cast<std::uint32_t>(rnd_below(gen, 200)));
            }
        }
        if (p.edges.empty()) {
            p.edges.push_back(static_cast<std::uint32_t>(rnd_below(gen, spec.map_size)));
            p.counts.push_back(1);
        }
    }

    RandomInstance inst;
    std::vector<std::uint64_t> sizes;
    for (std::uint32_t i = 0; i < spec.n_seeds; ++i) {
        std::vector<std::uint32_t> edges;
        std::vector<std::uint32_t> counts;
        const Profile& base = profiles[rnd_below(gen, profiles.size())];
        edges = base.edges;
        counts = base.counts;

        double roll = rnd_unit(gen);
        if (roll >= spec.dup_frac) {
            // perturb: extra edges and shifted hit counts
            std::uint32_t extras = 1 + static_cast<std::uint32_t>(rnd_below(gen, 5));
            for (std::uint32_t x = 0; x < extras; ++x) {
                std::uint32_t e = static_cast<std::uint32_t>(rnd_below(gen, spec.map_size));
                if (std::find(edges.begin(), edges.end(), e) == edges.end()) {
                    edges.push_back(e);
                    counts.push_back(1 + static_cast<std::uint32_t>(rnd_below(gen, 200)));
                }
            }
            for (std::size_t k = 0; k < counts.size(); ++k)
                if (rnd_unit(gen) < 0.3)
                    counts[k] = 1 + static_cast<std::uint32_t>(rnd_below(gen, 200));
        }
        if (roll >= spec.dup_frac + spec.extend_frac) {
            const Profile& other = profiles[rnd_below(gen, profiles.size())];
            for (std::size_t k = 0; k < other.edges.size(); ++k) {
                if (std::find(edges.begin(), edges.end(), other.edges[k]) == edges.end()) {
                    edges.push_back(other.edges[k]);
                    counts.push_back(other.counts[k]);
                }
            }
        }

        CoverageTrace t;
        t.map_size = spec.map_size;
        t.bits = BitVec(spec.map_size);
        std::vector<CminTuple> tuples;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            t.bits.set(edges[k]);
            tuples.push_back({edges[k], hit_bucket(counts[k])});
        }
        std::sort(tuples.begin(), tuples.end());
        t.tuples = std::move(tuples);
        inst.traces.push_back(std::move(t));
        sizes.push_back(50 + rnd_below(gen, spec.max_size_bytes - 50));
    }
    inst.seeds = make_seeds(sizes);
    return inst;
}

struct EnumResult {
    bool feasible = false;
    std::uint64_t weight = 0;
    std::vector<std::uint32_t> ids;
};

// Exhaustive subset enumeration; the oracle for the oracle. Only sane for
// small live row counts.
inline EnumResult enumerate_minset(const CoverageMatrix& A, WeightScheme scheme) {
    const auto& live = A.live_rows();
    const std::uint32_t n = static_cast<std::uint32_t>(live.size());

    BitVec target(A.n_cols());
    for (auto r : live) target |= A.row_bits(r);
    target &= A.live_col_mask();

    EnumResult best;
    if (target.none()) {
        best.feasible = true;
        return best;  // nothing to cover: the empty set wins
    }

    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        BitVec got(A.n_cols());
        std::uint64_t weight = 0;
        std::vector<std::uint32_t> ids;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) {
                got |= A.row_bits(live[i]);
                weight += scheme == WeightScheme::Unweighted ? 1 : A.weight(live[i]);
                ids.push_back(live[i]);
            }
        }
        if (!target.subset_of(got)) continue;
        if (!best.feasible || weight < best.weight ||
            (weight == best.weight &&
             std::lexicographical_compare(ids.begin(), ids.end(), best.ids.begin(),
                                          best.ids.end()))) {
            best.feasible = true;
            best.weight = weight;
            best.ids = ids;
        }
    }
    return best;
}

}  // namespace testsupport
