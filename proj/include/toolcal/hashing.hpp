#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace toolcal {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Seed mixer used wherever a stream has to be a pure function of its inputs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Small portable generator (splitmix64 stream); identical output on every
// platform, unlike the distributions in <random>.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept
    {
        std::uint64_t out = splitmix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

    // Uniform in [0,1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0,n); n must be positive.
    std::size_t below(std::size_t n) noexcept { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t state_;
};

} // namespace toolcal
