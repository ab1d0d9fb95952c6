#include "sdepth/rng.hpp"

#include <cmath>

namespace sdepth {
namespace {

constexpr std::uint64_t kMul0 = 0xD2511F53u;
constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
constexpr std::uint64_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint64_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint64_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo)
{
    std::uint64_t const prod = a * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Ziggurat tables (Marsaglia & Tsang layout, Doornik's double variant).
struct ZigguratTables
{
    static constexpr int kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;

    double x[kLayers + 1];
    double ratio[kLayers];

    ZigguratTables()
    {
        double f = std::exp(-0.5 * kR * kR);
        x[0] = kV / f;
        x[1] = kR;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i)
        {
            x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
            f = std::exp(-0.5 * x[i] * x[i]);
        }
        for (int i = 0; i < kLayers; ++i)
        {
            ratio[i] = x[i + 1] / x[i];
        }
    }
};

ZigguratTables const& zig()
{
    static ZigguratTables const tables;
    return tables;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key)
{
    for (int round = 0; round < 10; ++round)
    {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += static_cast<std::uint32_t>(kWeyl0);
        key[1] += static_cast<std::uint32_t>(kWeyl1);
    }
    return ctr;
}

std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t child)
{
    return splitmix64(splitmix64(parent) ^ (child + 0x632BE59BD9B4E019ull));
}

std::uint64_t derive_stream(std::initializer_list<std::uint64_t> path)
{
    std::uint64_t id = 0x5DEECE66Dull;
    for (auto p : path)
    {
        id = derive_stream(id, p);
    }
    return id;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream)
{
    Philox4x32::Key const key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    for (std::uint32_t half = 0; half < 2; ++half)
    {
        auto const out = Philox4x32::apply({static_cast<std::uint32_t>(stream),
                                            static_cast<std::uint32_t>(stream >> 32), half, 0},
                                           key);
        s_[2 * half] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        s_[2 * half + 1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0)
    {
        s_[0] = 1;  // xoshiro must not start from the all-zero state
    }
}

void RngStream::fill_normal(double* out, std::size_t count, double scale)
{
    auto const& t = zig();
    // Local copy of the state keeps it in registers across the loop.
    std::uint64_t s0 = s_[0], s1 = s_[1], s2 = s_[2], s3 = s_[3];
    for (std::size_t k = 0; k < count; ++k)
    {
        std::uint64_t const bits = rotl(s0 + s3, 23) + s0;
        std::uint64_t const shifted = s1 << 17;
        s2 ^= s0;
        s3 ^= s1;
        s1 ^= s2;
        s0 ^= s3;
        s2 ^= shifted;
        s3 = rotl(s3, 45);
        double const u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
        int const i = static_cast<int>(bits & 0x7F);
        if (std::fabs(u) < t.ratio[i]) [[likely]]
        {
            out[k] = scale * (u * t.x[i]);
        }
        else
        {
            s_ = {s0, s1, s2, s3};
            out[k] = scale * normal_slow(u, i);
            s0 = s_[0];
            s1 = s_[1];
            s2 = s_[2];
            s3 = s_[3];
        }
    }
    s_ = {s0, s1, s2, s3};
}

double RngStream::normal()
{
    auto const& t = zig();
    std::uint64_t const bits = (*this)();
    double const u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    int const i = static_cast<int>(bits & 0x7F);
    if (std::fabs(u) < t.ratio[i]) [[likely]]
    {
        return u * t.x[i];
    }
    return normal_slow(u, i);
}

double RngStream::normal_slow(double u, int i)
{
    auto const& t = zig();
    for (;;)
    {
        if (std::fabs(u) < t.ratio[i])
        {
            return u * t.x[i];
        }
        if (i == 0)
        {
            // Tail beyond R.
            double xt, yt;
            do
            {
                xt = std::log(1.0 - this->uniform()) / ZigguratTables::kR;
                yt = std::log(1.0 - this->uniform());
            } while (-2.0 * yt < xt * xt);
            return u < 0 ? xt - ZigguratTables::kR : ZigguratTables::kR - xt;
        }
        double const xx = u * t.x[i];
        double const f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - xx * xx));
        double const f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - xx * xx));
        if (f1 + this->uniform() * (f0 - f1) < 1.0)
        {
            return xx;
        }
        std::uint64_t const bits = (*this)();
        u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
        i = static_cast<int>(bits & 0x7F);
    }
}

}  // namespace sdepth
