#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace mcre {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key; the i-th output is a pure
/// function of (key, i). Child streams are derived with `split(tag)`, so a
/// draw keyed by (seed, time index, replica index) is reproducible no matter
/// which thread computes it or in which order replicas are visited.
///
/// Satisfies the UniformRandomBitGenerator requirements, so it can drive the
/// standard `<random>` distributions.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x6A09E667F3BCC908ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ ^ mix64(counter_ * 0x9E3779B97F4A7C15ULL + 0x3C6EF372FE94F82BULL));
    }

    /// Independent child stream; does not advance this stream.
    Stream split(std::uint64_t tag) const noexcept {
        Stream child(0);
        child.key_ = mix64(key_ + mix64(tag ^ 0xA54FF53A5F1D36F1ULL));
        child.counter_ = 0;
        return child;
    }

    /// Child stream for a signed index (time indices may be negative).
    Stream split_signed(std::int64_t tag) const noexcept {
        return split(static_cast<std::uint64_t>(tag));
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return std::normal_distribution<double>{}(*this); }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Seed for replica `index` of an experiment driven by `master_seed`.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return mix64(mix64(master_seed) + 0xD1B54A32D192ED03ULL * (index + 1));
}

}  // namespace mcre
