#include <gtest/gtest.h>

#include <map>
#include <random>

#include "gridse/engine.hpp"
#include "gridse/errors.hpp"
#include "support.hpp"

using namespace gridse;
using testing_support::golden;
using testing_support::random_word;

namespace {

ClientState fixed_client() {
    sp2e::Keys k;
    k.t = 12;
    k.f = 20;
    k.sk1.fill(0x55);
    k.sk2.fill(0x66);
    k.char_keys.resize(32);
    for (std::size_t j = 0; j < 32; ++j) k.char_keys[j].fill(static_cast<std::uint8_t>(j));
    Key master;
    master.fill(0x44);
    return ClientState::from_keys(master, k);
}

struct Pair {
    ClientState client;
    ServerState server;

    explicit Pair(std::uint64_t seed, EngineParams params = {}) : client([&] {
        SeededRandom rng(seed);
        return ClientState::setup(rng, params);
    }()) {}

    void update(Op op, const std::string& w, std::uint64_t id) { server.apply_update(client.update(op, w, id)); }
    std::set<std::uint64_t> search(const std::string& prefix, SearchResult* raw = nullptr) {
        auto tokens = client.search_tokens(prefix);
        auto r = server.search(tokens, client.f_bits());
        if (raw) *raw = r;
        return client.decrypt_results(r, prefix);
    }
};

// Plain prefix scan with last-op-wins per key.
struct Oracle {
    std::map<std::string, std::vector<BlockRef>> index;
    std::set<std::uint64_t> query(const std::string& prefix) const {
        std::set<std::uint64_t> out;
        for (const auto& [w, refs] : index) {
            if (!w.starts_with(prefix)) continue;
            std::map<std::uint64_t, Op> last;
            for (auto r : refs) last[r.id] = r.op;
            for (auto [id, op] : last)
                if (op == Op::Add) out.insert(id);
        }
        return out;
    }
};

}  // namespace

TEST(Engine, FreshState) {
    Pair p(1);
    EXPECT_EQ(p.client.distinct_keys(), 0u);
    EXPECT_EQ(p.server.size(), 0u);
    EXPECT_TRUE(p.client.search_tokens("dr5").empty());
    EXPECT_TRUE(p.search("dr5").empty());
    Pair q(2);
    EXPECT_NE(p.client.master_key(), q.client.master_key());
}

TEST(Engine, FirstUpdateGolden) {
    auto c = fixed_client();
    auto msg = c.update(Op::Add, "dr5r77", 7);
    EXPECT_EQ(msg.addr.to_hex(), golden("sp2e.addr.dr5r77"));
    EXPECT_EQ(to_hex(msg.val), golden("engine.val.add7"));
    EXPECT_EQ(c.seq_of("dr5r77"), 1u);
    EXPECT_EQ(c.entries()[0].update_count, 1u);
    EXPECT_EQ(sizeof(msg.addr.bytes()) + msg.val.size(), kUpdateBytes);
    EXPECT_EQ(kUpdateBytes, 41u);
}

TEST(Engine, RepeatedKeySameAddress) {
    Pair p(3);
    auto a = p.client.update(Op::Add, "9q8yy", 1);
    auto b = p.client.update(Op::Add, "9q8yy", 1);
    EXPECT_EQ(a.addr, b.addr);
    EXPECT_NE(a.val, b.val);
    EXPECT_EQ(p.client.distinct_keys(), 1u);
    EXPECT_EQ(p.client.delta_list().size(), 1u);
    EXPECT_EQ(p.client.entries()[0].update_count, 2u);
}

TEST(Engine, DeleteOfUnknownIdIsValid) {
    Pair p(4);
    p.update(Op::Del, "9q8yy", 99);
    EXPECT_EQ(p.server.total_vals(), 1u);
    EXPECT_TRUE(p.search("9q8").empty());
}

TEST(Engine, InvalidKeyword) {
    Pair p(5);
    EXPECT_THROW(p.client.update(Op::Add, "9qa", 1), AlphabetError);
    EXPECT_THROW(p.client.update(Op::Add, "0123456789bcd", 1), LengthError);
    EXPECT_THROW(p.client.search_tokens(""), LengthError);
}

TEST(Engine, ServerCounting) {
    Pair p(6);
    std::mt19937_64 r(6);
    std::vector<std::string> keys;
    for (int i = 0; i < 20; ++i) keys.push_back(random_word(r, 6));
    std::set<std::string> distinct(keys.begin(), keys.end());
    for (int i = 0; i < 300; ++i) p.update(Op::Add, keys[i % keys.size()], i);
    EXPECT_EQ(p.server.size(), distinct.size());
    EXPECT_EQ(p.server.total_vals(), 300u);
    EXPECT_EQ(p.client.search_tokens("9").size(), distinct.size());
    for (int i = 0; i < 300; ++i) p.update(Op::Add, keys[i % keys.size()], i);
    EXPECT_EQ(p.client.search_tokens("9").size(), distinct.size());
}

TEST(Engine, SizeMismatch) {
    Pair p(7);
    p.update(Op::Add, "9q8yy", 1);
    p.update(Op::Add, "9q8yz", 2);
    auto tokens = p.client.search_tokens("9q");
    tokens.pop_back();
    try {
        p.server.search(tokens, p.client.f_bits());
        FAIL() << "expected SizeMismatch";
    } catch (const SizeMismatch& e) {
        EXPECT_EQ(e.tokens(), 1u);
        EXPECT_EQ(e.entries(), 2u);
    }
}

TEST(Engine, AllMatchCorpus) {
    Pair p(8);
    for (int i = 0; i < 10; ++i) p.update(Op::Add, "dr" + std::to_string(i), i);
    SearchResult raw;
    auto ids = p.search("dr", &raw);
    EXPECT_EQ(raw.entries.size(), 10u);
    EXPECT_EQ(ids.size(), 10u);
}

TEST(Engine, LastOpWins) {
    Pair p(9);
    p.update(Op::Add, "dr5r77", 5);
    p.update(Op::Del, "dr5r77", 5);
    EXPECT_TRUE(p.search("dr5r7").empty());
    p.update(Op::Add, "dr5r78", 5);
    p.update(Op::Add, "dr5r78", 9);
    p.update(Op::Del, "dr5r78", 9);
    EXPECT_EQ(p.search("dr5r7"), (std::set<std::uint64_t>{5}));
    p.update(Op::Add, "dr5r77", 5);
    EXPECT_EQ(p.search("dr5r77"), (std::set<std::uint64_t>{5}));
}

TEST(Engine, FalsePositivesFiltered) {
    EngineParams params;
    params.f_bits = 4;
    Pair p(10, params);
    std::mt19937_64 r(10);
    Oracle oracle;
    for (int i = 0; i < 400; ++i) {
        auto w = random_word(r, 5);
        p.update(Op::Add, w, i);
        oracle.index[w].push_back({static_cast<std::uint64_t>(i), Op::Add});
    }
    // With f = 4 roughly 1 in 16 non-matching keys comes back.
    SearchResult raw;
    auto ids = p.search("dr", &raw);
    std::size_t fps = 0;
    for (const auto& e : raw.entries)
        if (!p.client.entries()[e.seq - 1].key.starts_with("dr")) ++fps;
    EXPECT_GT(fps, 0u);
    EXPECT_EQ(ids, oracle.query("dr"));
}

TEST(Engine, OracleEquivalenceRandomized) {
    for (std::size_t f : {16u, 20u}) {
        EngineParams params;
        params.f_bits = f;
        Pair p(11 + f, params);
        Oracle oracle;
        std::mt19937_64 r(f);
        std::vector<std::string> pool;
        for (int i = 0; i < 60; ++i) pool.push_back("9q" + random_word(r, 2, "0123") + random_word(r, 6));
        std::vector<std::pair<std::string, std::uint64_t>> live;
        for (int step = 0; step < 3000; ++step) {
            if (!live.empty() && r() % 10 == 0) {
                auto [w, id] = live[r() % live.size()];
                p.update(Op::Del, w, id);
                oracle.index[w].push_back({id, Op::Del});
            } else {
                auto w = pool[r() % pool.size()];
                std::uint64_t id = r() % 5000;
                p.update(Op::Add, w, id);
                oracle.index[w].push_back({id, Op::Add});
                live.emplace_back(w, id);
            }
            if (step % 300 == 0) {
                auto w = pool[r() % pool.size()];
                auto prefix = w.substr(0, 5 + r() % 6);
                ASSERT_EQ(p.search(prefix), oracle.query(prefix)) << prefix;
            }
        }
    }
}

TEST(Engine, Cleanup) {
    Pair p(12);
    for (std::uint64_t id = 1; id <= 10; ++id) p.update(Op::Add, "dr5r77", id);
    for (std::uint64_t id : {2, 4, 6, 8}) p.update(Op::Del, "dr5r77", id);
    p.update(Op::Add, "dr5r78", 50);

    SearchResult raw;
    auto before = p.search("dr5r7", &raw);
    auto old_vals = *p.server.find(p.client.address_of("dr5r77"));
    auto survivors = p.client.live_ids("dr5r77", raw);
    EXPECT_EQ(survivors.size(), 6u);

    auto msg = p.client.cleanup("dr5r77", survivors);
    EXPECT_EQ(msg.vals.size(), 6u);
    p.server.replace(msg);
    EXPECT_EQ(p.server.find(msg.addr)->size(), 6u);
    EXPECT_EQ(p.client.entries()[0].update_count, 6u);
    EXPECT_EQ(p.client.entries()[0].epoch, 1u);
    EXPECT_EQ(p.search("dr5r7"), before);
    for (const auto& v : msg.vals)
        for (const auto& o : old_vals) EXPECT_NE(v, o);

    // updates after a clean-up continue from the survivor count
    p.update(Op::Del, "dr5r77", 1);
    before.erase(1);
    EXPECT_EQ(p.search("dr5r7"), before);
}

TEST(Engine, CleanupEdgeCases) {
    Pair p(13);
    p.update(Op::Add, "dr5r77", 1);
    p.update(Op::Del, "dr5r77", 1);
    auto msg = p.client.cleanup("dr5r77", {});
    p.server.replace(msg);
    EXPECT_TRUE(p.server.find(msg.addr)->empty());
    EXPECT_TRUE(p.search("dr").empty());
    EXPECT_THROW(p.client.cleanup("zzzz", {}), KeyError);
    CleanupMsg stray;
    EXPECT_THROW(p.server.replace(stray), KeyError);
}

TEST(Engine, DecryptRejectsUnknownSeq) {
    Pair p(14);
    p.update(Op::Add, "dr5", 1);
    SearchResult bogus;
    bogus.entries.push_back({7, {}});
    EXPECT_THROW(p.client.decrypt_results(bogus, "dr"), DecodeError);
}

TEST(Snapshot, ClientLayout) {
    auto c = fixed_client();
    c.update(Op::Add, "dr5r77", 7);
    c.update(Op::Add, "dr5r77", 8);
    c.update(Op::Add, "9q", 9);
    auto bytes = c.snapshot();

    Bytes expect = {'G', 'S', 'E', 'C', 1};
    expect.insert(expect.end(), 32, 0x44);
    auto keyfile = sp2e::serialize(c.keys());
    expect.push_back(0);
    expect.push_back(0);
    expect.push_back(static_cast<std::uint8_t>(keyfile.size() >> 8));
    expect.push_back(static_cast<std::uint8_t>(keyfile.size()));
    expect.insert(expect.end(), keyfile.begin(), keyfile.end());
    expect.insert(expect.end(), {0, 0, 0, 2});
    expect.insert(expect.end(), {0, 6, 'd', 'r', '5', 'r', '7', '7', 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0});
    expect.insert(expect.end(), {0, 2, '9', 'q', 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0});
    for (const auto& d : c.delta_list()) expect.insert(expect.end(), d.bytes().begin(), d.bytes().end());
    EXPECT_EQ(bytes, expect);

    auto back = ClientState::restore(bytes);
    EXPECT_EQ(back, c);
    bytes.push_back(0);
    EXPECT_THROW(ClientState::restore(bytes), DecodeError);
}

TEST(Snapshot, ServerLayout) {
    ServerState s;
    UpdateMsg a;
    a.addr.bytes().fill(0xaa);
    a.val.fill(0x01);
    UpdateMsg b = a;
    b.val.fill(0x02);
    s.apply_update(a);
    s.apply_update(b);
    auto bytes = s.snapshot();
    Bytes expect = {'G', 'S', 'E', 'S', 1, 0, 0, 0, 1};
    expect.insert(expect.end(), 32, 0xaa);
    expect.insert(expect.end(), {0, 0, 0, 2});
    expect.insert(expect.end(), 9, 0x01);
    expect.insert(expect.end(), 9, 0x02);
    EXPECT_EQ(bytes, expect);
    EXPECT_EQ(ServerState::restore(bytes), s);
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(ServerState::restore(bytes), DecodeError);
}

TEST(Snapshot, RestoredClientKeepsWorking) {
    Pair p(15);
    p.update(Op::Add, "9q8yy", 1);
    p.update(Op::Add, "9q8yz", 2);
    auto c2 = ClientState::restore(p.client.snapshot());
    auto s2 = ServerState::restore(p.server.snapshot());
    s2.apply_update(c2.update(Op::Add, "9q8yy", 3));
    auto r = s2.search(c2.search_tokens("9q8y"), c2.f_bits());
    EXPECT_EQ(c2.decrypt_results(r, "9q8y"), (std::set<std::uint64_t>{1, 2, 3}));
}
