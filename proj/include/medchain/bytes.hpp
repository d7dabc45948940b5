#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medchain/error.hpp"

namespace medchain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView bytes);

/// Throws Error(Errc::MalformedBlock) on odd length or a non-hex digit.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView b, Errc on_error) {
    if (b.size() != N) throw Error(on_error, "expected " + std::to_string(N) + " bytes");
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

/// Canonical big-endian encoder. Variable-length fields carry a u32 length prefix.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v) {
        out_.push_back(v);
        return *this;
    }
    ByteWriter& u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
        return *this;
    }
    ByteWriter& u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
        return *this;
    }
    ByteWriter& raw(ByteView b) {
        if (b.empty()) return *this;
        auto at = out_.size();
        out_.resize(at + b.size());
        std::memcpy(out_.data() + at, b.data(), b.size());
        return *this;
    }
    ByteWriter& blob(ByteView b) {
        out_.reserve(out_.size() + 4 + b.size());
        u32(static_cast<std::uint32_t>(b.size()));
        return raw(b);
    }
    ByteWriter& str(std::string_view s) { return blob(as_bytes(s)); }

    const Bytes& bytes() const& noexcept { return out_; }
    Bytes take() && noexcept { return std::move(out_); }

private:
    Bytes out_;
};

/// Decoder matching ByteWriter. Every short read throws Error(error_code).
class ByteReader {
public:
    ByteReader(ByteView in, Errc error_code) noexcept : in_(in), error_(error_code) {}

    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (auto b : need(4)) v = (v << 8) | b;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (auto b : need(8)) v = (v << 8) | b;
        return v;
    }
    ByteView raw(std::size_t n) { return need(n); }
    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        return to_array<N>(need(N), error_);
    }
    Bytes blob() {
        auto n = u32();
        auto v = need(n);
        return Bytes(v.begin(), v.end());
    }
    std::string str() {
        auto n = u32();
        return to_string(need(n));
    }

    bool done() const noexcept { return pos_ == in_.size(); }
    void expect_done() const {
        if (!done()) throw Error(error_, "trailing bytes");
    }

private:
    ByteView need(std::size_t n) {
        if (in_.size() - pos_ < n) throw Error(error_, "truncated input");
        auto v = in_.subspan(pos_, n);
        pos_ += n;
        return v;
    }

    ByteView in_;
    std::size_t pos_ = 0;
    Errc error_;
};

}  // namespace medchain
