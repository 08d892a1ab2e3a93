#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridse/bitblock.hpp"
#include "gridse/random.hpp"

namespace gridse {

// Ordered character set of keywords. Each character gets its own secret key.
class Alphabet {
public:
    static constexpr std::size_t kMaxSize = 64;

    explicit Alphabet(std::string_view chars);

    static Alphabet geohash();  // "0123456789bcdefghjkmnpqrstuvwxyz"
    static Alphabet hex();      // "0123456789abcdef", for S2/H3 codes

    const std::string& chars() const noexcept { return chars_; }
    std::size_t size() const noexcept { return chars_.size(); }
    bool contains(char c) const noexcept { return index_[static_cast<unsigned char>(c)] >= 0; }
    // Throws AlphabetError when c is not a member.
    std::size_t index_of(char c) const;

    bool operator==(const Alphabet& other) const noexcept { return chars_ == other.chars_; }

private:
    std::string chars_;
    std::array<int, 256> index_{};
};

/// Symmetric prefix predicate encryption.
///
/// A keyword w of at most t characters is hashed into a 256-bit message where
/// the i-th character contributes H(sk_{w_i} || seq || i) shifted right by
/// (i-1)*f bits. For a prefix w_p the token carries the same per-character
/// terms plus the client-held mask delta in the f-bit window of the last
/// prefix character and the eta = G(sk2, seq) stream everywhere else. XORing
/// token and ciphertext cancels every shared term, leaving 0^f in that window
/// exactly when w starts with w_p (up to a 2^-f false-accept chance).
namespace sp2e {

struct Keys {
    Key sk1{};
    Key sk2{};
    std::vector<Key> char_keys;  // one per alphabet character, alphabet order
    Alphabet alphabet = Alphabet::geohash();
    std::size_t f = 0;  // indicator width in bits
    std::size_t t = 0;  // maximum keyword length

    // Precomputed PRF states for sk1 / sk2; rebuilt by prepare().
    KeyedPrf sk1_prf;
    KeyedPrf sk2_prf;
    void prepare() {
        sk1_prf = KeyedPrf(sk1);
        sk2_prf = KeyedPrf(sk2);
    }

    bool operator==(const Keys&) const = default;
};

struct Ciphertext {
    BitBlock ct;
    BitBlock delta;  // G(sk1, m); kept by the client, never sent
    bool operator==(const Ciphertext&) const = default;
};

struct PrefixToken {
    BitBlock k_prime;
    std::size_t prefix_len = 0;

    // Indicator window [(len-1)*f, len*f).
    BitRange window(std::size_t f) const { return {(prefix_len - 1) * f, prefix_len * f}; }
    bool operator==(const PrefixToken&) const = default;
};

// Throws ParameterError unless t >= 1, f > 0 and t*f <= 256.
Keys keygen(RandomSource& rng, std::size_t t, std::size_t f, Alphabet alphabet = Alphabet::geohash());

// Throws AlphabetError / LengthError.
void validate_keyword(const Keys& keys, std::string_view w);

BitBlock pre_enc(const Keys& keys, std::uint64_t seq, std::string_view w);
Ciphertext enc(const Keys& keys, const BitBlock& m);
PrefixToken tkgen(const Keys& keys, const BitBlock& delta, std::uint64_t seq, std::string_view prefix);
bool pref_dec(const PrefixToken& token, const BitBlock& ct, std::size_t f);

// eta = G(sk2, BE64(seq))
BitBlock token_mask(const Keys& keys, std::uint64_t seq);

// Opaque key file: "SP2K" | u8 version | BE16 t | BE16 f | BE16 |alphabet| |
// alphabet bytes | sk1 | sk2 | one 32-byte key per character in alphabet order.
Bytes serialize(const Keys& keys);
// Throws DecodeError on malformed input.
Keys deserialize(std::span<const std::uint8_t> bytes);

}  // namespace sp2e
}  // namespace gridse
