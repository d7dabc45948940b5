#include "medchain/random.hpp"

#include <openssl/rand.h>

#include "medchain/bytes.hpp"

namespace medchain {

void SystemRandom::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
        throw std::runtime_error("RAND_bytes failed");
    }
}

SeededRandom::SeededRandom(std::uint64_t seed) noexcept : seed_(seed) {}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (used_ == block_.size()) {
            ByteWriter w;
            w.str("medchain/drbg").u64(seed_).u64(counter_++);
            block_ = sha256(w.bytes());
            used_ = 0;
        }
        b = block_[used_++];
    }
}

}  // namespace medchain
