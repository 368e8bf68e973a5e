#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wheelcomm {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Raised when a buffer does not hold a well-formed encoding. `offset` is the
/// byte position at which decoding gave up.
class DecodeError : public std::runtime_error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Little-endian append-only writer.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }
    void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

    std::size_t size() const noexcept { return out_.size(); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes& out_;
};

// Bounds-checked little-endian reader. Every accessor throws DecodeError on
// underrun, reporting the absolute offset (base + cursor).
class ByteReader {
public:
    explicit ByteReader(ByteView in, std::size_t base_offset = 0) : in_(in), base_(base_offset) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

    ByteView raw(std::size_t n) {
        need(n);
        auto view = in_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    std::string str(std::size_t n) {
        auto view = raw(n);
        return std::string(view.begin(), view.end());
    }

    std::size_t position() const noexcept { return base_ + pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    bool empty() const noexcept { return pos_ == in_.size(); }

    [[noreturn]] void fail(const std::string& what) const { throw DecodeError(what, position()); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) fail("truncated input");
    }

    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    ByteView in_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

}  // namespace wheelcomm
