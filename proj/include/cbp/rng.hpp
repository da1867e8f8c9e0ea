#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace cbp {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Folds a list of integers into one stream identifier, e.g. stream_id({point, replication}).
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

/// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Single-owner random stream (xoshiro256**). Streams built from the same
/// master seed with distinct ids are seeded through SplitMix64 and do not overlap
/// in practice; the same (seed, id) pair reproduces the same draws bit for bit.
///
/// All variate generators are implemented here rather than taken from <random>,
/// so sequences do not depend on the standard library vendor.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream);

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept;
    std::uint64_t stream() const noexcept { return stream_; }

    /// Uniform in [0, 1).
    double uniform() noexcept { return to_unit(next_u64()); }
    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_below(std::uint64_t bound) noexcept;
    /// Exponential with the given rate (> 0).
    double exponential(double rate) noexcept;
    /// Binomial(trials, prob).
    std::int64_t binomial(std::int64_t trials, double prob);

    /// Child stream for a sub-task; deterministic in (this stream's state, tag).
    RngStream split(std::uint64_t tag) noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t stream_ = 0;
};

/// Stateless counter-based draws: value depends only on (key, a, b).
/// Used for per-node clocks so that coupled runs see identical clock sequences.
constexpr std::uint64_t counter_bits(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(key ^ mix64(a)) + b * 0xD1B54A32D192ED03ULL);
}

/// Binomial sampler with per-(trials, prob) setup hoisted out of the draw.
/// Inversion for small means, BTRD (Hormann 1993) otherwise.
class BinomialSampler {
public:
    BinomialSampler(std::int64_t trials, double prob);

    std::int64_t operator()(RngStream& rng) const;

    std::int64_t trials() const noexcept { return n_; }
    double prob() const noexcept { return p_in_; }

private:
    std::int64_t draw_inversion(RngStream& rng) const;
    std::int64_t draw_btrd(RngStream& rng) const;

    std::int64_t n_ = 0;
    double p_in_ = 0.0;
    double p_ = 0.0;  // min(p, 1 - p)
    bool flipped_ = false;
    bool use_inversion_ = true;
    // inversion
    double q0_ = 1.0;
    double odds_ = 0.0;
    // BTRD
    double m_ = 0, r_ = 0, nr_ = 0, npq_ = 0, b_ = 0, a_ = 0, c_ = 0, alpha_ = 0, vr_ = 0, urvr_ = 0;
};

}  // namespace cbp
