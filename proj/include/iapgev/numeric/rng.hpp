#pragma once

#include <cstdint>
#include <random>

namespace iapgev::numeric {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic seed for sub-stream `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

// The only source of randomness in the library. Always seeded explicitly and
// passed by reference; Normal draws use Box-Muller so streams do not depend on
// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal();

    // Uniform on {0, ..., n - 1}; n must be positive.
    std::size_t index(std::size_t n);

    // Independent generator for sub-stream `stream`, derived from this
    // generator's seed (not its current state).
    Rng derive(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace iapgev::numeric
