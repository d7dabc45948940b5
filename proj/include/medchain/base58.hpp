#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "medchain/bytes.hpp"

namespace medchain::base58 {

/// Bitcoin/IPFS alphabet: no 0, O, I or l.
inline constexpr std::string_view kAlphabet = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

constexpr bool is_digit(char c) noexcept { return kAlphabet.find(c) != std::string_view::npos; }

std::string encode(ByteView bytes);

/// std::nullopt if any character is outside the alphabet.
std::optional<Bytes> decode(std::string_view text);

}  // namespace medchain::base58
