#pragma once

#include <cstdint>
#include <span>

#include "medchain/digest.hpp"

namespace medchain {

/// Source of key material and nonces. The simulator injects a seeded
/// instance so that every run is reproducible.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// Operating-system CSPRNG.
class SystemRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

/// SHA-256 in counter mode over a 64-bit seed. Deterministic, not for production keys.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed) noexcept;
    void fill(std::span<std::uint8_t> out) override;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    Digest256 block_{};
    std::size_t used_ = sizeof(Digest256);
};

}  // namespace medchain
