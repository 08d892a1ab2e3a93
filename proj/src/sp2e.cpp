#include "gridse/sp2e.hpp"

#include <algorithm>

#include "gridse/errors.hpp"
#include "gridse/se_f.hpp"

namespace gridse {

Alphabet::Alphabet(std::string_view chars) : chars_(chars) {
    index_.fill(-1);
    if (chars_.empty() || chars_.size() > kMaxSize) throw ParameterError("alphabet must hold 1..64 characters");
    for (std::size_t i = 0; i < chars_.size(); ++i) {
        auto c = static_cast<unsigned char>(chars_[i]);
        if (index_[c] >= 0) throw ParameterError(std::string("duplicate alphabet character '") + chars_[i] + "'");
        index_[c] = static_cast<int>(i);
    }
}

Alphabet Alphabet::geohash() { return Alphabet("0123456789bcdefghjkmnpqrstuvwxyz"); }
Alphabet Alphabet::hex() { return Alphabet("0123456789abcdef"); }

std::size_t Alphabet::index_of(char c) const {
    int i = index_[static_cast<unsigned char>(c)];
    if (i < 0) throw AlphabetError(std::string("character '") + c + "' is not in the alphabet");
    return static_cast<std::size_t>(i);
}

namespace sp2e {

Keys keygen(RandomSource& rng, std::size_t t, std::size_t f, Alphabet alphabet) {
    if (t == 0) throw ParameterError("maximum keyword length t must be at least 1");
    if (f == 0) throw ParameterError("indicator width f must be positive");
    if (t * f > kBlockBits)
        throw ParameterError("t*f = " + std::to_string(t * f) + " exceeds the 256-bit block");
    Keys k;
    k.t = t;
    k.f = f;
    k.alphabet = std::move(alphabet);
    auto se = sef::gen(rng);
    k.sk1 = se.k1;
    k.sk2 = se.k2;
    k.char_keys.resize(k.alphabet.size());
    for (auto& ck : k.char_keys) rng.fill(ck);
    k.prepare();
    return k;
}

void validate_keyword(const Keys& keys, std::string_view w) {
    if (w.empty()) throw LengthError("keyword must not be empty");
    if (w.size() > keys.t)
        throw LengthError("keyword of length " + std::to_string(w.size()) + " exceeds t = " + std::to_string(keys.t));
    for (char c : w) keys.alphabet.index_of(c);
}

BitBlock pre_enc(const Keys& keys, std::uint64_t seq, std::string_view w) {
    validate_keyword(keys, w);
    BitBlock m;
    for (std::size_t i = 1; i <= w.size(); ++i) {
        const Key& ck = keys.char_keys[keys.alphabet.index_of(w[i - 1])];
        m ^= shifted_hash(i, keys.f, hash_h(ck, seq, i));
    }
    return m;
}

Ciphertext enc(const Keys& keys, const BitBlock& m) {
    BitBlock delta = prf_g(keys.sk1_prf, keys.sk1, PrfDomain::BlockMask, m.span());
    return {m ^ delta, delta};
}

BitBlock token_mask(const Keys& keys, std::uint64_t seq) {
    std::uint8_t in[8];
    put_be64(in, seq);
    return prf_g(keys.sk2_prf, keys.sk2, PrfDomain::TokenMask, in);
}

PrefixToken tkgen(const Keys& keys, const BitBlock& delta, std::uint64_t seq, std::string_view prefix) {
    BitBlock hashed = pre_enc(keys, seq, prefix);
    PrefixToken tok;
    tok.prefix_len = prefix.size();
    tok.k_prime = hashed ^ splice_window(token_mask(keys, seq), delta, tok.window(keys.f));
    return tok;
}

bool pref_dec(const PrefixToken& token, const BitBlock& ct, std::size_t f) {
    if (token.prefix_len == 0 || token.prefix_len * f > kBlockBits) throw RangeError("token window out of range");
    return (token.k_prime ^ ct).is_zero_in(token.window(f));
}

// ---- key file -------------------------------------------------------------

namespace {
constexpr std::uint8_t kMagic[4] = {'S', 'P', '2', 'K'};
constexpr std::uint8_t kVersion = 1;
}  // namespace

Bytes serialize(const Keys& keys) {
    const auto& chars = keys.alphabet.chars();
    Bytes out;
    out.reserve(4 + 1 + 6 + chars.size() + kKeyBytes * (2 + keys.char_keys.size()));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    std::uint8_t b16[2];
    put_be16(b16, static_cast<std::uint16_t>(keys.t));
    out.insert(out.end(), b16, b16 + 2);
    put_be16(b16, static_cast<std::uint16_t>(keys.f));
    out.insert(out.end(), b16, b16 + 2);
    put_be16(b16, static_cast<std::uint16_t>(chars.size()));
    out.insert(out.end(), b16, b16 + 2);
    out.insert(out.end(), chars.begin(), chars.end());
    out.insert(out.end(), keys.sk1.begin(), keys.sk1.end());
    out.insert(out.end(), keys.sk2.begin(), keys.sk2.end());
    for (const auto& ck : keys.char_keys) out.insert(out.end(), ck.begin(), ck.end());
    return out;
}

Keys deserialize(std::span<const std::uint8_t> in) {
    if (in.size() < 11 || !std::equal(std::begin(kMagic), std::end(kMagic), in.begin()))
        throw DecodeError("not an SP2E key file");
    if (in[4] != kVersion) throw DecodeError("unsupported key file version " + std::to_string(in[4]));
    Keys k;
    k.t = get_be16(&in[5]);
    k.f = get_be16(&in[7]);
    std::size_t nchars = get_be16(&in[9]);
    std::size_t need = 11 + nchars + kKeyBytes * (2 + nchars);
    if (in.size() != need) throw DecodeError("key file has wrong length");
    try {
        k.alphabet = Alphabet(std::string_view(reinterpret_cast<const char*>(&in[11]), nchars));
    } catch (const ParameterError& e) {
        throw DecodeError(std::string("key file alphabet: ") + e.what());
    }
    if (k.t == 0 || k.f == 0 || k.t * k.f > kBlockBits) throw DecodeError("key file carries invalid t/f");
    std::size_t off = 11 + nchars;
    auto take = [&](Key& dst) {
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(off), kKeyBytes, dst.begin());
        off += kKeyBytes;
    };
    take(k.sk1);
    take(k.sk2);
    k.char_keys.resize(nchars);
    for (auto& ck : k.char_keys) take(ck);
    k.prepare();
    return k;
}

}  // namespace sp2e
}  // namespace gridse
