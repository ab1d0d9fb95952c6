#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace sdepth {

/// Philox4x32-10 block cipher used as a counter-based generator.
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
/// Streams built on top of it are addressed by (seed, stream id), so a
/// Monte Carlo sample's draws depend only on its index and never on how
/// the work was chunked across threads.
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key);
};

/// Mix a parent stream id with a child index into a new stream id.
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t child);

/// Convenience: fold a list of indices into one stream id.
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> path);

/// Sequential random stream addressed by (seed, stream id).
///
/// The 256-bit starting state is two Philox4x32-10 blocks of the counter
/// (stream id, 0..1) under the key `seed`; draws then follow xoshiro256++.
/// A stream's output depends only on its address, never on which thread
/// or in what order other streams were consumed.
///
/// Satisfies UniformRandomBitGenerator, so it can drive <random>
/// distributions, but `normal()` and `uniform()` are the fast paths used
/// throughout the library.
class RngStream
{
  public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()()
    {
        std::uint64_t const result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t const t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    //! Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    //! Standard normal deviate (ziggurat, 128 layers).
    double normal();

    //! Fill `out` with scale * N(0, 1); same sequence as repeated normal().
    void fill_normal(double* out, std::size_t count, double scale);

    //! Bernoulli(p) draw; p <= 0 never fires, p >= 1 always fires.
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

  private:
    double normal_slow(double u, int layer);

    static constexpr std::uint64_t rotl(std::uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace sdepth
