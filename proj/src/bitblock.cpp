#include "gridse/bitblock.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>

#include "gridse/errors.hpp"

namespace gridse {

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw DecodeError(std::string("invalid hex character '") + c + "'");
}

// Mask of the bits of byte `byte_index` that fall inside [start, end).
std::uint8_t window_mask(std::size_t byte_index, std::size_t start, std::size_t end) {
    std::size_t lo = std::max(start, byte_index * 8);
    std::size_t hi = std::min(end, byte_index * 8 + 8);
    if (lo >= hi) return 0;
    unsigned width = static_cast<unsigned>(hi - lo);
    unsigned offset = static_cast<unsigned>(lo - byte_index * 8);
    return static_cast<std::uint8_t>(((0xFFu << (8 - width)) & 0xFFu) >> offset);
}

}  // namespace

// ---- BitString ------------------------------------------------------------

BitString::BitString(std::size_t nbits) : bytes_((nbits + 7) / 8, 0), nbits_(nbits) {}

BitString BitString::from_binary(std::string_view bits) {
    BitString out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1') throw DecodeError("binary string must contain only 0/1");
        out.set_bit(i, bits[i] == '1');
    }
    return out;
}

bool BitString::bit(std::size_t i) const {
    if (i >= nbits_) throw RangeError("bit index out of range");
    return (bytes_[i / 8] >> (7 - i % 8)) & 1u;
}

void BitString::set_bit(std::size_t i, bool v) {
    if (i >= nbits_) throw RangeError("bit index out of range");
    auto m = static_cast<std::uint8_t>(1u << (7 - i % 8));
    if (v)
        bytes_[i / 8] |= m;
    else
        bytes_[i / 8] &= static_cast<std::uint8_t>(~m);
}

BitString BitString::sub(BitRange r) const {
    check_range(r, nbits_);
    BitString out(r.size());
    for (std::size_t i = r.start; i < r.end; ++i) out.set_bit(i - r.start, bit(i));
    return out;
}

bool BitString::is_zero() const noexcept {
    return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

std::string BitString::to_binary() const {
    std::string s(nbits_, '0');
    for (std::size_t i = 0; i < nbits_; ++i)
        if (bit(i)) s[i] = '1';
    return s;
}

BitString BitString::operator^(const BitString& other) const {
    if (other.nbits_ != nbits_) throw RangeError("xor of bit strings with different lengths");
    BitString out = *this;
    for (std::size_t i = 0; i < bytes_.size(); ++i) out.bytes_[i] ^= other.bytes_[i];
    return out;
}

BitString BitString::concat(const BitString& tail) const {
    BitString out(nbits_ + tail.nbits_);
    for (std::size_t i = 0; i < nbits_; ++i) out.set_bit(i, bit(i));
    for (std::size_t i = 0; i < tail.nbits_; ++i) out.set_bit(nbits_ + i, tail.bit(i));
    return out;
}

bool is_zero(const BitString& slice) noexcept { return slice.is_zero(); }

// ---- BitBlock -------------------------------------------------------------

BitBlock BitBlock::from_hex(std::string_view hex) {
    Bytes raw = gridse::from_hex(hex);
    if (raw.size() != kBlockBytes) throw DecodeError("BitBlock hex must encode exactly 32 bytes");
    return from_bytes(raw);
}

BitBlock BitBlock::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kBlockBytes) throw DecodeError("BitBlock requires exactly 32 bytes");
    Storage s;
    std::copy(bytes.begin(), bytes.end(), s.begin());
    return BitBlock(s);
}

BitBlock BitBlock::from_bits(const BitString& bits) {
    if (bits.size() != kBlockBits) throw RangeError("BitBlock requires exactly 256 bits");
    BitBlock out;
    for (std::size_t i = 0; i < kBlockBits; ++i)
        if (bits.bit(i)) out.bytes_[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
    return out;
}

BitBlock BitBlock::ones() noexcept {
    Storage s;
    s.fill(0xFF);
    return BitBlock(s);
}

bool BitBlock::bit(std::size_t i) const {
    if (i >= kBlockBits) throw RangeError("bit index out of range");
    return (bytes_[i / 8] >> (7 - i % 8)) & 1u;
}

BitString BitBlock::to_bits() const {
    BitString out(kBlockBits);
    for (std::size_t i = 0; i < kBlockBits; ++i) out.set_bit(i, bit(i));
    return out;
}

std::string BitBlock::to_hex() const { return gridse::to_hex(bytes_); }

BitString BitBlock::sub(BitRange r) const {
    check_range(r);
    BitString out(r.size());
    for (std::size_t i = r.start; i < r.end; ++i) out.set_bit(i - r.start, bit(i));
    return out;
}

bool BitBlock::is_zero() const noexcept {
    return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

bool BitBlock::is_zero_in(BitRange r) const {
    check_range(r);
    for (std::size_t b = r.start / 8; b <= (r.end - 1) / 8; ++b)
        if (bytes_[b] & window_mask(b, r.start, r.end)) return false;
    return true;
}

void check_range(BitRange r, std::size_t limit) {
    if (r.start >= r.end || r.end > limit)
        throw RangeError("invalid bit range [" + std::to_string(r.start) + ", " + std::to_string(r.end) +
                         ") for length " + std::to_string(limit));
}

BitBlock splice_window(const BitBlock& outer, const BitBlock& inner, BitRange r) {
    check_range(r);
    BitBlock out = outer;
    for (std::size_t b = r.start / 8; b <= (r.end - 1) / 8; ++b) {
        std::uint8_t m = window_mask(b, r.start, r.end);
        out.bytes()[b] = static_cast<std::uint8_t>((outer.bytes()[b] & ~m) | (inner.bytes()[b] & m));
    }
    return out;
}

BitBlock shifted_hash(std::size_t position, std::size_t f, const BitBlock& h) {
    if (position == 0) throw RangeError("character position is 1-based");
    std::size_t shift = (position - 1) * f;
    if (shift >= kBlockBits) throw RangeError("shift of " + std::to_string(shift) + " bits leaves nothing of the block");
    BitBlock out;
    const std::size_t byte_shift = shift / 8;
    const unsigned bit_shift = static_cast<unsigned>(shift % 8);
    const auto& in = h.bytes();
    auto& dst = out.bytes();
    for (std::size_t i = byte_shift; i < kBlockBytes; ++i) {
        std::size_t src = i - byte_shift;
        unsigned v = static_cast<unsigned>(in[src]) >> bit_shift;
        if (bit_shift != 0 && src > 0) v |= static_cast<unsigned>(in[src - 1]) << (8 - bit_shift);
        dst[i] = static_cast<std::uint8_t>(v & 0xFFu);
    }
    return out;
}

// ---- primitives -----------------------------------------------------------

BitBlock prf_g(const Key& key, PrfDomain domain, std::span<const std::uint8_t> input) {
    // Inputs here are at most a few dozen bytes; keep them on the stack.
    std::uint8_t buf[128];
    Bytes heap;
    std::uint8_t* msg = buf;
    if (input.size() + 1 > sizeof(buf)) {
        heap.resize(input.size() + 1);
        msg = heap.data();
    }
    msg[0] = static_cast<std::uint8_t>(domain);
    std::copy(input.begin(), input.end(), msg + 1);

    BitBlock out;
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg, input.size() + 1, out.bytes().data(),
             &len) == nullptr ||
        len != kBlockBytes)
        throw Error("HMAC-SHA-256 failed");
    return out;
}

struct KeyedPrf::State {
    EVP_MD_CTX* inner = nullptr;
    EVP_MD_CTX* outer = nullptr;
    ~State() {
        EVP_MD_CTX_free(inner);
        EVP_MD_CTX_free(outer);
    }
};

KeyedPrf::KeyedPrf(const Key& key) : key_(key), state_(std::make_unique<State>()) {
    // HMAC with a 32-byte key: the key is zero-padded to the 64-byte block.
    constexpr std::size_t kBlock = 64;
    std::uint8_t ipad[kBlock], opad[kBlock];
    for (std::size_t i = 0; i < kBlock; ++i) {
        std::uint8_t k = i < key.size() ? key[i] : 0;
        ipad[i] = k ^ 0x36;
        opad[i] = k ^ 0x5c;
    }
    state_->inner = EVP_MD_CTX_new();
    state_->outer = EVP_MD_CTX_new();
    if (!state_->inner || !state_->outer || EVP_DigestInit_ex(state_->inner, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(state_->inner, ipad, kBlock) != 1 ||
        EVP_DigestInit_ex(state_->outer, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(state_->outer, opad, kBlock) != 1)
        throw Error("cannot initialise keyed PRF");
}

KeyedPrf& KeyedPrf::operator=(const KeyedPrf& other) {
    if (this != &other) *this = KeyedPrf(other.key_);
    return *this;
}

KeyedPrf::KeyedPrf() = default;
KeyedPrf::~KeyedPrf() = default;
KeyedPrf::KeyedPrf(KeyedPrf&&) noexcept = default;
KeyedPrf& KeyedPrf::operator=(KeyedPrf&&) noexcept = default;

BitBlock KeyedPrf::operator()(PrfDomain domain, std::span<const std::uint8_t> input) const {
    if (!state_) return prf_g(key_, domain, input);
    struct CtxFree {
        void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
    };
    thread_local std::unique_ptr<EVP_MD_CTX, CtxFree> ctx(EVP_MD_CTX_new());
    std::uint8_t tag = static_cast<std::uint8_t>(domain);
    std::uint8_t inner_digest[kBlockBytes];
    BitBlock out;
    unsigned int len = 0;
    if (EVP_MD_CTX_copy_ex(ctx.get(), state_->inner) != 1 || EVP_DigestUpdate(ctx.get(), &tag, 1) != 1 ||
        EVP_DigestUpdate(ctx.get(), input.data(), input.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), inner_digest, &len) != 1 || EVP_MD_CTX_copy_ex(ctx.get(), state_->outer) != 1 ||
        EVP_DigestUpdate(ctx.get(), inner_digest, sizeof(inner_digest)) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.bytes().data(), &len) != 1)
        throw Error("keyed PRF evaluation failed");
    return out;
}

BitBlock prf_g(const KeyedPrf& cached, const Key& key, PrfDomain domain, std::span<const std::uint8_t> input) {
    if (cached.ready() && cached.key() == key) return cached(domain, input);
    return prf_g(key, domain, input);
}

BitBlock hash_h(const Key& key, std::uint64_t seq, std::uint64_t position) {
    struct CtxFree {
        void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
    };
    // Fetched once; EVP_sha256() would re-resolve the provider on every init.
    static EVP_MD* const sha256 = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    thread_local std::unique_ptr<EVP_MD_CTX, CtxFree> ctx(EVP_MD_CTX_new());

    std::uint8_t msg[kKeyBytes + 16];
    std::copy(key.begin(), key.end(), msg);
    put_be64(msg + kKeyBytes, seq);
    put_be64(msg + kKeyBytes + 8, position);
    BitBlock out;
    unsigned int len = 0;
    if (!sha256 || EVP_DigestInit_ex(ctx.get(), sha256, nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), msg, sizeof(msg)) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.bytes().data(), &len) != 1 || len != kBlockBytes)
        throw Error("SHA-256 failed");
    return out;
}

// ---- encoding helpers -----------------------------------------------------

void put_be64(std::uint8_t* out, std::uint64_t v) noexcept {
    for (int i = 7; i >= 0; --i, v >>= 8) out[i] = static_cast<std::uint8_t>(v);
}
void put_be32(std::uint8_t* out, std::uint32_t v) noexcept {
    for (int i = 3; i >= 0; --i, v >>= 8) out[i] = static_cast<std::uint8_t>(v);
}
void put_be16(std::uint8_t* out, std::uint16_t v) noexcept {
    out[0] = static_cast<std::uint8_t>(v >> 8);
    out[1] = static_cast<std::uint8_t>(v);
}
std::uint64_t get_be64(const std::uint8_t* in) noexcept {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}
std::uint32_t get_be32(const std::uint8_t* in) noexcept {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in[i];
    return v;
}
std::uint16_t get_be16(const std::uint8_t* in) noexcept {
    return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(hex_nibble(hex[2 * i]) << 4 | hex_nibble(hex[2 * i + 1]));
    return out;
}

}  // namespace gridse
