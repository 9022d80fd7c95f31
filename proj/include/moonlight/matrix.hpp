#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moonlight/bitvec.hpp"
#include "moonlight/errors.hpp"
#include "moonlight/types.hpp"

namespace moonlight {

inline std::uint64_t resolve_weight(const SeedRecord& seed, WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::Unweighted:
            return 1;
        case WeightScheme::Size:
            if (seed.size_bytes == 0)
                throw PreconditionError("seed " + std::to_string(seed.id) +
                                        " has zero byte size; size-weighted distillation needs "
                                        "strictly positive weights");
            return seed.size_bytes;
        case WeightScheme::Time:
            if (!seed.exec_time_us.has_value())
                throw PreconditionError("seed " + std::to_string(seed.id) +
                                        " has no execution time in the manifest; required for "
                                        "time-weighted distillation");
            if (*seed.exec_time_us == 0)
                throw PreconditionError("seed " + std::to_string(seed.id) +
                                        " has zero execution time; time-weighted distillation "
                                        "needs strictly positive weights");
            return *seed.exec_time_us;
    }
    throw ConfigError("unknown weight scheme");
}

// The N x M boolean coverage matrix with positive row weights.
//
// Bit data and weights are immutable after construction; reductions only
// shrink the live row/column sets. Safe to share read-only across threads.
class CoverageMatrix {
public:
    CoverageMatrix() = default;

    std::uint32_t n_rows() const { return n_rows_; }
    std::uint32_t n_cols() const { return n_cols_; }

    const BitVec& row_bits(std::uint32_t row) const {
        if (row >= n_rows_) throw std::out_of_range("row id " + std::to_string(row));
        return rows_[row];
    }

    std::uint64_t weight(std::uint32_t row) const {
        if (row >= n_rows_) throw std::out_of_range("row id " + std::to_string(row));
        return weights_[row];
    }

    const std::vector<std::uint32_t>& live_rows() const { return live_rows_; }
    const std::vector<std::uint32_t>& live_cols() const { return live_cols_; }
    bool row_live(std::uint32_t row) const { return row < n_rows_ && live_row_mask_.test(row); }
    bool col_live(std::uint32_t col) const { return col < n_cols_ && live_col_mask_.test(col); }
    const BitVec& live_row_mask() const { return live_row_mask_; }
    const BitVec& live_col_mask() const { return live_col_mask_; }

    const std::vector<std::uint32_t>& dropped_singular_rows() const {
        return dropped_singular_rows_;
    }

    // Popcount of a row restricted to the live columns.
    std::uint32_t live_popcount(std::uint32_t row) const {
        return row_bits(row).popcount_and(live_col_mask_);
    }

    void remove_rows(std::span<const std::uint32_t> rows) {
        if (rows.empty()) return;
        for (auto r : rows) {
            if (!row_live(r)) throw std::out_of_range("row " + std::to_string(r) + " not live");
            live_row_mask_.reset(r);
        }
        std::erase_if(live_rows_, [&](std::uint32_t r) { return !live_row_mask_.test(r); });
    }

    void remove_cols(std::span<const std::uint32_t> cols) {
        if (cols.empty()) return;
        for (auto c : cols) {
            if (!col_live(c)) throw std::out_of_range("col " + std::to_string(c) + " not live");
            live_col_mask_.reset(c);
        }
        std::erase_if(live_cols_, [&](std::uint32_t c) { return !live_col_mask_.test(c); });
    }

    friend CoverageMatrix build_matrix(const std::vector<CoverageTrace>& traces,
                                       const std::vector<SeedRecord>& seeds,
                                       WeightScheme scheme);

private:
    std::uint32_t n_rows_ = 0;
    std::uint32_t n_cols_ = 0;
    std::vector<BitVec> rows_;
    std::vector<std::uint64_t> weights_;
    std::vector<std::uint32_t> live_rows_;  // ascending
    std::vector<std::uint32_t> live_cols_;  // ascending
    BitVec live_row_mask_;
    BitVec live_col_mask_;
    std::vector<std::uint32_t> dropped_singular_rows_;
};

// Builds the coverage matrix from per-seed traces. All columns start live,
// including singular ones (the solver eliminates those itself); rows with no
// coverage at all are dropped up front and recorded.
inline CoverageMatrix build_matrix(const std::vector<CoverageTrace>& traces,
                                   const std::vector<SeedRecord>& seeds,
                                   WeightScheme scheme) {
    if (traces.size() != seeds.size())
        throw std::invalid_argument("trace/seed count mismatch");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        if (seeds[i].id != i) throw std::invalid_argument("seed ids must be contiguous from 0");

    CoverageMatrix m;
    m.n_rows_ = static_cast<std::uint32_t>(traces.size());
    m.n_cols_ = traces.empty() ? 0 : traces.front().map_size;
    for (const auto& t : traces)
        if (t.map_size != m.n_cols_)
            throw FormatError("mixed trace map sizes: " + std::to_string(t.map_size) + " vs " +
                              std::to_string(m.n_cols_));

    m.rows_.reserve(traces.size());
    m.weights_.reserve(traces.size());
    m.live_row_mask_ = BitVec(m.n_rows_);
    m.live_col_mask_ = BitVec::ones(m.n_cols_);
    for (std::uint32_t i = 0; i < m.n_rows_; ++i) {
        m.rows_.push_back(traces[i].bits);
        m.weights_.push_back(resolve_weight(seeds[i], scheme));
        if (m.rows_.back().any()) {
            m.live_rows_.push_back(i);
            m.live_row_mask_.set(i);
        } else {
            m.dropped_singular_rows_.push_back(i);
        }
    }
    m.live_cols_.resize(m.n_cols_);
    for (std::uint32_t j = 0; j < m.n_cols_; ++j) m.live_cols_[j] = j;
    return m;
}

// Bitwise OR of the named rows' full bit vectors.
inline BitVec union_coverage(const CoverageMatrix& m, std::span<const std::uint32_t> row_ids) {
    BitVec acc(m.n_cols());
    for (auto r : row_ids) acc |= m.row_bits(r);
    return acc;
}

}  // namespace moonlight
