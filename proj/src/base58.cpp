#include "medchain/base58.hpp"

#include <algorithm>

namespace medchain::base58 {

std::string encode(ByteView bytes) {
    std::size_t zeros = 0;
    while (zeros < bytes.size() && bytes[zeros] == 0) ++zeros;

    // log(256) / log(58) ~ 1.37
    std::vector<std::uint8_t> digits((bytes.size() - zeros) * 138 / 100 + 1, 0);
    std::size_t length = 0;
    for (std::size_t i = zeros; i < bytes.size(); ++i) {
        unsigned carry = bytes[i];
        std::size_t j = 0;
        for (auto it = digits.rbegin(); (carry != 0 || j < length) && it != digits.rend(); ++it, ++j) {
            carry += 256u * *it;
            *it = static_cast<std::uint8_t>(carry % 58);
            carry /= 58;
        }
        length = j;
    }

    auto it = digits.begin() + static_cast<std::ptrdiff_t>(digits.size() - length);
    std::string out(zeros, kAlphabet[0]);
    for (; it != digits.end(); ++it) out.push_back(kAlphabet[*it]);
    return out;
}

std::optional<Bytes> decode(std::string_view text) {
    std::size_t ones = 0;
    while (ones < text.size() && text[ones] == kAlphabet[0]) ++ones;

    // log(58) / log(256) ~ 0.733
    std::vector<std::uint8_t> b256((text.size() - ones) * 733 / 1000 + 1, 0);
    std::size_t length = 0;
    for (std::size_t i = ones; i < text.size(); ++i) {
        auto pos = kAlphabet.find(text[i]);
        if (pos == std::string_view::npos) return std::nullopt;
        unsigned carry = static_cast<unsigned>(pos);
        std::size_t j = 0;
        for (auto it = b256.rbegin(); (carry != 0 || j < length) && it != b256.rend(); ++it, ++j) {
            carry += 58u * *it;
            *it = static_cast<std::uint8_t>(carry % 256);
            carry /= 256;
        }
        length = j;
    }

    Bytes out(ones, 0);
    out.insert(out.end(), b256.end() - static_cast<std::ptrdiff_t>(length), b256.end());
    return out;
}

}  // namespace medchain::base58
