#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridse {

constexpr std::size_t kBlockBits = 256;
constexpr std::size_t kBlockBytes = kBlockBits / 8;
constexpr std::size_t kKeyBytes = 32;

using Key = std::array<std::uint8_t, kKeyBytes>;
using Bytes = std::vector<std::uint8_t>;

// Half-open bit interval [start, end).
struct BitRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start; }
    bool operator==(const BitRange&) const = default;
};

// Variable-length bit string, MSB-first within each byte. Produced by slicing
// a BitBlock; also used for small hand-written toy values in tests.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::size_t nbits);

    // Parses a string of '0'/'1' characters.
    static BitString from_binary(std::string_view bits);

    std::size_t size() const noexcept { return nbits_; }
    bool bit(std::size_t i) const;
    void set_bit(std::size_t i, bool v);

    BitString sub(BitRange r) const;
    bool is_zero() const noexcept;
    std::string to_binary() const;

    BitString operator^(const BitString& other) const;
    BitString concat(const BitString& tail) const;

    bool operator==(const BitString&) const = default;

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

// Fixed 256-bit string. Bit 0 is the most significant bit of byte 0.
class BitBlock {
public:
    using Storage = std::array<std::uint8_t, kBlockBytes>;

    constexpr BitBlock() noexcept : bytes_{} {}
    explicit constexpr BitBlock(const Storage& bytes) noexcept : bytes_(bytes) {}

    static BitBlock from_hex(std::string_view hex);
    static BitBlock from_bytes(std::span<const std::uint8_t> bytes);
    static BitBlock from_bits(const BitString& bits);
    static BitBlock ones() noexcept;

    const Storage& bytes() const noexcept { return bytes_; }
    Storage& bytes() noexcept { return bytes_; }
    std::span<const std::uint8_t> span() const noexcept { return bytes_; }

    bool bit(std::size_t i) const;
    BitString to_bits() const;
    std::string to_hex() const;

    BitString sub(BitRange r) const;
    bool is_zero() const noexcept;
    // True iff every bit in [r.start, r.end) is zero. Allocation-free form of
    // sub(r).is_zero() used on the search hot path.
    bool is_zero_in(BitRange r) const;

    BitBlock& operator^=(const BitBlock& other) noexcept {
        for (std::size_t i = 0; i < kBlockBytes; ++i) bytes_[i] ^= other.bytes_[i];
        return *this;
    }
    friend BitBlock operator^(BitBlock a, const BitBlock& b) noexcept { return a ^= b; }

    bool operator==(const BitBlock&) const = default;
    auto operator<=>(const BitBlock&) const = default;

private:
    Storage bytes_;
};

inline BitBlock xor_blocks(const BitBlock& a, const BitBlock& b) noexcept { return a ^ b; }

// Throws RangeError unless 0 <= r.start < r.end <= limit.
void check_range(BitRange r, std::size_t limit = kBlockBits);

bool is_zero(const BitString& slice) noexcept;

// Takes bits [0, r.start) from `outer`, [r.start, r.end) from `inner` and
// [r.end, 256) from `outer` again. This is the a.sub(0,p1) || b.sub(p1,p2) ||
// a.sub(p2,l) composition used by both the decryption window and tokens.
BitBlock splice_window(const BitBlock& outer, const BitBlock& inner, BitRange r);

// (0^{(i-1)f} || h) truncated to 256 bits. `position` is 1-based.
BitBlock shifted_hash(std::size_t position, std::size_t f, const BitBlock& h);

// Domain separation byte prepended to every PRF input.
enum class PrfDomain : std::uint8_t {
    BlockMask = 0x01,  // G(sk1, m) and SE-f masks
    TokenMask = 0x02,  // eta = G(sk2, seq)
    ValueMask = 0x03,  // masks on encrypted (id || op) values
};

// G: HMAC-SHA-256(key, tag || input).
BitBlock prf_g(const Key& key, PrfDomain domain, std::span<const std::uint8_t> input);

// Same function as prf_g with the HMAC pads absorbed once up front, for keys
// that are used many times (K, sk1, sk2).
class KeyedPrf {
public:
    KeyedPrf();
    explicit KeyedPrf(const Key& key);
    KeyedPrf(const KeyedPrf& other) : KeyedPrf(other.key_) {}
    KeyedPrf& operator=(const KeyedPrf& other);
    KeyedPrf(KeyedPrf&&) noexcept;
    KeyedPrf& operator=(KeyedPrf&&) noexcept;
    ~KeyedPrf();

    BitBlock operator()(PrfDomain domain, std::span<const std::uint8_t> input) const;
    const Key& key() const noexcept { return key_; }
    bool ready() const noexcept { return state_ != nullptr; }
    bool operator==(const KeyedPrf& other) const noexcept { return key_ == other.key_; }

private:
    struct State;
    Key key_{};
    std::unique_ptr<State> state_;
};

// Evaluates G(key, ...) through `cached` when it was built for `key`, and
// through the one-shot prf_g otherwise.
BitBlock prf_g(const KeyedPrf& cached, const Key& key, PrfDomain domain, std::span<const std::uint8_t> input);

// H: SHA-256(key || BE64(seq) || BE64(position)).
BitBlock hash_h(const Key& key, std::uint64_t seq, std::uint64_t position);

void put_be64(std::uint8_t* out, std::uint64_t v) noexcept;
void put_be32(std::uint8_t* out, std::uint32_t v) noexcept;
void put_be16(std::uint8_t* out, std::uint16_t v) noexcept;
std::uint64_t get_be64(const std::uint8_t* in) noexcept;
std::uint32_t get_be32(const std::uint8_t* in) noexcept;
std::uint16_t get_be16(const std::uint8_t* in) noexcept;

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

struct BitBlockHash {
    std::size_t operator()(const BitBlock& b) const noexcept {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i) h = (h << 8) | b.bytes()[i];
        return h;
    }
};

}  // namespace gridse
