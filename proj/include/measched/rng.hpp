#pragma once

#include <array>
#include <cstdint>

namespace measched {

/// Philox-4x32-10 counter-based generator.
///
/// A stream is identified by (key, stream id); draws walk a 64-bit block
/// counter inside that stream. `split` derives an independent child stream,
/// so work items (trajectories, episodes) can each own a substream whose
/// contents do not depend on the order in which they are processed.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key);

    /// Child stream keyed on (this stream, id). Does not advance this stream.
    Rng split(std::uint64_t id) const;

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_range(std::int64_t lo, std::int64_t hi);
    /// Standard normal (Marsaglia polar method).
    double normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next_u64(); }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace measched
