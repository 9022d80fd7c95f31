#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace moonlight {

// Fixed-width bit vector backed by 64-bit words.
//
// Invariant: bits past size() in the last word are always zero, so popcounts
// and word-wise set operations are exact without extra masking.
class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::uint32_t bits)
        : bits_(bits), words_((bits + 63u) / 64u, 0) {}

    static BitVec ones(std::uint32_t bits) {
        BitVec v(bits);
        for (auto& w : v.words_) w = ~std::uint64_t{0};
        v.clear_tail();
        return v;
    }

    std::uint32_t size() const { return bits_; }
    std::size_t word_count() const { return words_.size(); }
    std::span<const std::uint64_t> words() const { return words_; }

    bool test(std::uint32_t i) const {
        assert(i < bits_);
        return (words_[i >> 6] >> (i & 63u)) & 1u;
    }

    void set(std::uint32_t i) {
        assert(i < bits_);
        words_[i >> 6] |= std::uint64_t{1} << (i & 63u);
    }

    void reset(std::uint32_t i) {
        assert(i < bits_);
        words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63u));
    }

    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }

    bool none() const { return !any(); }

    std::uint32_t popcount() const {
        std::uint32_t n = 0;
        for (auto w : words_) n += static_cast<std::uint32_t>(std::popcount(w));
        return n;
    }

    // |this & mask|
    std::uint32_t popcount_and(const BitVec& mask) const {
        assert(mask.bits_ == bits_);
        std::uint32_t n = 0;
        for (std::size_t k = 0; k < words_.size(); ++k)
            n += static_cast<std::uint32_t>(std::popcount(words_[k] & mask.words_[k]));
        return n;
    }

    BitVec& operator|=(const BitVec& o) {
        assert(o.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
        return *this;
    }

    BitVec& operator&=(const BitVec& o) {
        assert(o.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
        return *this;
    }

    bool operator==(const BitVec& o) const = default;

    // this subset of other (no mask)
    bool subset_of(const BitVec& other) const {
        assert(other.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & ~other.words_[k]) return false;
        return true;
    }

    // (this & mask) subset of other
    bool subset_of(const BitVec& other, const BitVec& mask) const {
        assert(other.bits_ == bits_ && mask.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & mask.words_[k] & ~other.words_[k]) return false;
        return true;
    }

    bool equals_masked(const BitVec& other, const BitVec& mask) const {
        assert(other.bits_ == bits_ && mask.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k)
            if ((words_[k] ^ other.words_[k]) & mask.words_[k]) return false;
        return true;
    }

    // Content hash of (this & mask); used to group identical rows or columns.
    std::uint64_t hash_masked(const BitVec& mask) const {
        assert(mask.bits_ == bits_);
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t x = words_[k] & mask.words_[k];
            x ^= h;
            x *= 0xbf58476d1ce4e5b9ull;
            x ^= x >> 31;
            h = x + 0x94d049bb133111ebull;
        }
        return h;
    }

    template <typename Fn>
    void for_each_set(Fn&& fn) const {
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t w = words_[k];
            while (w) {
                unsigned b = static_cast<unsigned>(std::countr_zero(w));
                fn(static_cast<std::uint32_t>(k * 64 + b));
                w &= w - 1;
            }
        }
    }

    // Iterates set bits of (this & mask).
    template <typename Fn>
    void for_each_set(const BitVec& mask, Fn&& fn) const {
        assert(mask.bits_ == bits_);
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t w = words_[k] & mask.words_[k];
            while (w) {
                unsigned b = static_cast<unsigned>(std::countr_zero(w));
                fn(static_cast<std::uint32_t>(k * 64 + b));
                w &= w - 1;
            }
        }
    }

private:
    void clear_tail() {
        if (bits_ & 63u) words_.back() &= (std::uint64_t{1} << (bits_ & 63u)) - 1;
    }

    std::uint32_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace moonlight
