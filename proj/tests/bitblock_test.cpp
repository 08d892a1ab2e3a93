#include <gtest/gtest.h>

#include <random>

#include "gridse/bitblock.hpp"
#include "gridse/errors.hpp"
#include "support.hpp"

using namespace gridse;
using testing_support::golden;
using testing_support::random_block;

TEST(BitBlock, XorIdentities) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        auto x = random_block(rng), y = random_block(rng), z = random_block(rng);
        EXPECT_EQ(BitBlock{} ^ x, x);
        EXPECT_TRUE((x ^ x).is_zero());
        EXPECT_EQ(x ^ y ^ y, x);
        EXPECT_EQ(x ^ y, y ^ x);
        EXPECT_EQ((x ^ y) ^ z, x ^ (y ^ z));
    }
    EXPECT_EQ(BitBlock::ones() ^ BitBlock::from_hex(std::string(64, 'a')), BitBlock::from_hex(std::string(64, '5')));
}

TEST(BitBlock, XorExhaustiveOnBytes) {
    auto bits = [](int v) {
        std::string s;
        for (int i = 7; i >= 0; --i) s.push_back(((v >> i) & 1) ? '1' : '0');
        return BitString::from_binary(s);
    };
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b) {
            ASSERT_EQ(bits(a) ^ bits(b), bits(a ^ b));
            ASSERT_EQ(bits(a) ^ bits(b), bits(b) ^ bits(a));
        }
}

TEST(BitBlock, MsbFirst) {
    BitBlock b;
    b.bytes()[0] = 0x80;
    b.bytes()[31] = 0x01;
    EXPECT_TRUE(b.bit(0));
    EXPECT_FALSE(b.bit(1));
    EXPECT_TRUE(b.bit(255));
    EXPECT_THROW(b.bit(256), RangeError);
}

TEST(BitBlock, SubToyExample) {
    auto x = BitString::from_binary("100100");
    EXPECT_EQ(x.sub({2, 4}).to_binary(), "01");
}

TEST(BitBlock, SubFullRangeAndZero) {
    std::mt19937_64 rng(2);
    auto x = random_block(rng);
    EXPECT_EQ(BitBlock::from_bits(x.sub({0, 256})), x);
    EXPECT_TRUE(BitBlock{}.sub({17, 93}).is_zero());
    EXPECT_EQ(BitBlock{}.sub({17, 93}).size(), 76u);
}

TEST(BitBlock, SubRangeErrors) {
    BitBlock x;
    EXPECT_THROW(x.sub({4, 4}), RangeError);
    EXPECT_THROW(x.sub({5, 4}), RangeError);
    EXPECT_THROW(x.sub({0, 257}), RangeError);
    EXPECT_THROW(x.is_zero_in({250, 260}), RangeError);
}

TEST(BitBlock, SubDistributesOverXor) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pos(0, 255);
    for (int i = 0; i < 500; ++i) {
        auto a = random_block(rng), b = random_block(rng);
        std::size_t s = pos(rng), e = pos(rng);
        if (s == e) continue;
        if (s > e) std::swap(s, e);
        EXPECT_EQ((a ^ b).sub({s, e}), a.sub({s, e}) ^ b.sub({s, e}));
        EXPECT_EQ((a ^ b).sub({s, e}).is_zero(), (a ^ b).is_zero_in({s, e}));
        EXPECT_TRUE(is_zero((a ^ a).sub({s, e})));
    }
}

TEST(BitBlock, IsZero) {
    EXPECT_TRUE(is_zero(BitString::from_binary(std::string(16, '0'))));
    EXPECT_FALSE(is_zero(BitString::from_binary(std::string(15, '0') + "1")));
}

TEST(BitBlock, HexRoundtrip) {
    std::mt19937_64 rng(4);
    auto x = random_block(rng);
    EXPECT_EQ(BitBlock::from_hex(x.to_hex()), x);
    EXPECT_THROW(BitBlock::from_hex("abc"), Error);
}

TEST(BitBlock, SpliceWindow) {
    auto outer = BitBlock::ones();
    auto w = splice_window(outer, BitBlock{}, {8, 16});
    EXPECT_EQ(w.bytes()[0], 0xff);
    EXPECT_EQ(w.bytes()[1], 0x00);
    EXPECT_EQ(w.bytes()[2], 0xff);
}

TEST(ShiftedHash, ZeroShift) {
    std::mt19937_64 rng(5);
    auto h = random_block(rng);
    EXPECT_EQ(shifted_hash(1, 20, h), h);
}

TEST(ShiftedHash, MatchesBitLevelShift) {
    std::mt19937_64 rng(6);
    for (std::size_t f : {1u, 8u, 16u, 20u}) {
        for (std::size_t i = 1; (i - 1) * f < 256; ++i) {
            auto h = random_block(rng);
            auto got = shifted_hash(i, f, h);
            std::size_t shift = (i - 1) * f;
            for (std::size_t b = 0; b < 256; ++b) ASSERT_EQ(got.bit(b), b >= shift && h.bit(b - shift)) << f << " " << i;
        }
    }
}

TEST(ShiftedHash, FullShiftIsError) {
    // (i-1)*f = 256
    EXPECT_THROW(shifted_hash(17, 16, BitBlock::ones()), RangeError);
    EXPECT_TRUE(shifted_hash(16, 16, BitBlock::ones()).is_zero_in({0, 240}));
}

TEST(Prf, GoldenVectors) {
    Key zero{};
    const std::string in = "test";
    std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(in.data()), in.size());
    EXPECT_EQ(prf_g(zero, PrfDomain::BlockMask, bytes).to_hex(), golden("prf_g.block.test"));
    EXPECT_EQ(prf_g(zero, PrfDomain::TokenMask, bytes).to_hex(), golden("prf_g.token.test"));
    EXPECT_EQ(prf_g(zero, PrfDomain::ValueMask, bytes).to_hex(), golden("prf_g.value.test"));
}

TEST(Prf, KeyedMatchesOneShot) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        Key k = testing_support::random_key(rng);
        KeyedPrf p(k);
        auto m = random_block(rng);
        EXPECT_EQ(p(PrfDomain::BlockMask, m.span()), prf_g(k, PrfDomain::BlockMask, m.span()));
        KeyedPrf copy = p;
        EXPECT_EQ(copy(PrfDomain::ValueMask, m.span()), prf_g(k, PrfDomain::ValueMask, m.span()));
    }
}

TEST(Prf, StaleCacheFallsBack) {
    Key a{}, b{};
    b[0] = 1;
    KeyedPrf cached(a);
    std::uint8_t in[1] = {9};
    EXPECT_EQ(prf_g(cached, b, PrfDomain::BlockMask, in), prf_g(b, PrfDomain::BlockMask, in));
    EXPECT_EQ(prf_g(KeyedPrf{}, b, PrfDomain::BlockMask, in), prf_g(b, PrfDomain::BlockMask, in));
}

TEST(Prf, OneByteChangeChangesOutput) {
    std::mt19937_64 rng(8);
    KeyedPrf p(testing_support::random_key(rng));
    for (int i = 0; i < 10000; ++i) {
        auto m = random_block(rng);
        auto m2 = m;
        m2.bytes()[rng() % 32] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        ASSERT_NE(p(PrfDomain::BlockMask, m.span()), p(PrfDomain::BlockMask, m2.span()));
    }
}

TEST(HashH, GoldenAndOrdering) {
    Key k;
    k.fill(0x11);
    EXPECT_EQ(hash_h(k, 1, 1).to_hex(), golden("hash_h.1.1"));
    EXPECT_EQ(hash_h(k, 1, 2).to_hex(), golden("hash_h.1.2"));
    EXPECT_NE(hash_h(k, 1, 2), hash_h(k, 2, 1));
    EXPECT_EQ(hash_h(k, 3, 4), hash_h(k, 3, 4));
}
