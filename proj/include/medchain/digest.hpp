#pragma once

#include <array>
#include <cstdint>

#include "medchain/bytes.hpp"

namespace medchain {

using Digest256 = std::array<std::uint8_t, 32>;

Digest256 sha256(ByteView data);

}  // namespace medchain
