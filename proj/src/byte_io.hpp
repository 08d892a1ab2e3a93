#pragma once

// Big-endian append/consume helpers shared by the snapshot and wire codecs.

#include <algorithm>
#include <span>
#include <string>
#include <string_view>

#include "gridse/bitblock.hpp"
#include "gridse/errors.hpp"

namespace gridse::detail {

class Writer {
public:
    explicit Writer(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        std::uint8_t b[2];
        put_be16(b, v);
        raw(b);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        put_be32(b, v);
        raw(b);
    }
    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        put_be64(b, v);
        raw(b);
    }
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void str(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

private:
    Bytes& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in, const char* what = "buffer") : in_(in), what_(what) {}

    std::uint8_t u8() { return *need(1); }
    std::uint16_t u16() { return get_be16(need(2)); }
    std::uint32_t u32() { return get_be32(need(4)); }
    std::uint64_t u64() { return get_be64(need(8)); }
    template <std::size_t N>
    void into(std::array<std::uint8_t, N>& dst) {
        const std::uint8_t* p = need(N);
        std::copy_n(p, N, dst.begin());
    }
    BitBlock block() {
        BitBlock b;
        into(b.bytes());
        return b;
    }
    std::span<const std::uint8_t> bytes(std::size_t n) { return {need(n), n}; }
    std::string str(std::size_t n) {
        const std::uint8_t* p = need(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) throw DecodeError(std::string(what_) + ": trailing bytes");
    }

private:
    const std::uint8_t* need(std::size_t n) {
        if (remaining() < n) throw DecodeError(std::string(what_) + ": truncated");
        const std::uint8_t* p = in_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    const char* what_;
};

}  // namespace gridse::detail
