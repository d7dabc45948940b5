#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "medchain/base58.hpp"
#include "medchain/cas.hpp"
#include "medchain/error.hpp"

namespace medchain::contracts {

inline constexpr std::size_t kPartWidth = 32;
inline constexpr std::size_t kSplitAt = 23;
inline constexpr std::size_t kFragmentLength = kSplitAt + 1;

using PartField = std::array<std::uint8_t, kPartWidth>;

/// A content hash stored as two fixed-width fields. Each field holds 23 hash
/// characters plus one random base58 character, zero-padded on the right.
struct HashParts {
    PartField part1{};
    PartField part2{};

    /// "fragment1,fragment2" with the 24-character fragments.
    std::string text() const;
    /// Inverse of text(). Throws MalformedPart.
    static HashParts parse_text(std::string_view text);

    auto operator<=>(const HashParts&) const = default;
};

namespace detail {

inline PartField pack(std::string_view piece, char random_char) {
    PartField field{};
    for (std::size_t i = 0; i < piece.size(); ++i) field[i] = static_cast<std::uint8_t>(piece[i]);
    field[piece.size()] = static_cast<std::uint8_t>(random_char);
    return field;
}

/// The 24-character fragment in a field. Throws MalformedPart.
inline std::string_view fragment(const PartField& field) {
    for (std::size_t i = 0; i < kPartWidth; ++i) {
        bool in_fragment = i < kFragmentLength;
        if (in_fragment && !base58::is_digit(static_cast<char>(field[i]))) {
            throw Error(Errc::MalformedPart, "fragment byte " + std::to_string(i));
        }
        if (!in_fragment && field[i] != 0) throw Error(Errc::MalformedPart, "padding byte " + std::to_string(i));
    }
    return {reinterpret_cast<const char*>(field.data()), kFragmentLength};
}

}  // namespace detail

/// Throws BadHashLength or NonBase58Character.
template <std::uniform_random_bit_generator Gen>
HashParts split_hash(std::string_view hash, Gen& gen) {
    if (hash.size() != cas::kHashTextLength) throw Error(Errc::BadHashLength, std::string(hash));
    for (char c : hash) {
        if (!base58::is_digit(c)) throw Error(Errc::NonBase58Character, std::string(hash));
    }
    std::uniform_int_distribution<std::size_t> pick(0, base58::kAlphabet.size() - 1);
    HashParts parts;
    parts.part1 = detail::pack(hash.substr(0, kSplitAt), base58::kAlphabet[pick(gen)]);
    parts.part2 = detail::pack(hash.substr(kSplitAt), base58::kAlphabet[pick(gen)]);
    return parts;
}

template <std::uniform_random_bit_generator Gen>
HashParts split_hash(const cas::ContentHash& hash, Gen& gen) {
    return split_hash(std::string_view(hash.text()), gen);
}

/// The 46-character text the parts encode. Throws MalformedPart.
inline std::string join_hash_text(const HashParts& parts) {
    auto a = detail::fragment(parts.part1);
    auto b = detail::fragment(parts.part2);
    std::string out(a.substr(0, kSplitAt));
    out += b.substr(0, kSplitAt);
    return out;
}

/// Throws MalformedPart, or MalformedHash if the text is not a SHA-256 multihash.
inline cas::ContentHash join_hash(const HashParts& parts) { return cas::ContentHash::parse(join_hash_text(parts)); }

inline std::string HashParts::text() const {
    std::string out(detail::fragment(part1));
    out += ',';
    out += detail::fragment(part2);
    return out;
}

inline HashParts HashParts::parse_text(std::string_view text) {
    auto comma = text.find(',');
    if (comma == std::string_view::npos) throw Error(Errc::MalformedPart, "missing comma");
    auto a = text.substr(0, comma);
    auto b = text.substr(comma + 1);
    if (a.size() != kFragmentLength || b.size() != kFragmentLength) throw Error(Errc::MalformedPart, "fragment length");
    HashParts parts;
    parts.part1 = detail::pack(a.substr(0, kSplitAt), a.back());
    parts.part2 = detail::pack(b.substr(0, kSplitAt), b.back());
    detail::fragment(parts.part1);
    detail::fragment(parts.part2);
    return parts;
}

}  // namespace medchain::contracts
