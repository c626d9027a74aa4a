#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace kinlab {

/*!
 * Counter-based generator (Philox4x32-10).
 *
 * The output is a pure function of (seed, stream, position), so every Monte
 * Carlo sample owns an independent stream derived from the master seed and
 * results do not depend on how samples are distributed over workers.
 */
class CounterRng
{
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream)
    {
    }

    std::uint64_t seed() const { return static_cast<std::uint64_t>(key_[1]) << 32 | key_[0]; }
    std::uint64_t stream() const { return stream_; }

    std::uint32_t next_u32()
    {
        if (lane_ == 4)
            refill();
        return block_[lane_++];
    }

    std::uint64_t next_u64()
    {
        std::uint64_t hi = next_u32();
        return hi << 32 | next_u32();
    }

    //! Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    //! Standard normal by Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform()));
        double phi = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    //! Density s exp(-s^2/2) on s > 0.
    double rayleigh() { return std::sqrt(-2.0 * std::log(uniform())); }

    //! Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key)
    {
        constexpr std::uint32_t kMul0 = 0xD2511F53;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
        for (int round = 0; round < 10; ++round)
        {
            std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

  private:
    void refill()
    {
        block_ = philox({static_cast<std::uint32_t>(counter_),
                         static_cast<std::uint32_t>(counter_ >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)},
                        key_);
        ++counter_;
        lane_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kinlab
