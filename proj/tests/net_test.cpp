#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <random>
#include <thread>

#include "gridse/errors.hpp"
#include "gridse/net.hpp"
#include "support.hpp"

using namespace gridse;
using namespace gridse::net;

namespace {

ClientState make_client(std::uint64_t seed) {
    SeededRandom rng(seed);
    return ClientState::setup(rng);
}

void populate(ClientState& c, Session& s, ServerState* direct, std::uint64_t seed, int n) {
    std::mt19937_64 r(seed);
    for (int i = 0; i < n; ++i) {
        auto w = "9q8" + testing_support::random_word(r, 4);
        Op op = i % 7 == 6 ? Op::Del : Op::Add;
        auto msg = c.update(op, w, r() % 50);
        s.send_update(msg);
        if (direct) direct->apply_update(msg);
    }
}

// Raw socket for sending hand-built bytes.
int raw_connect(std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &a.sin_addr);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof(a)) != 0) {
        ::close(fd);
        return -1;
    }
    return fd;
}

Bytes read_until_close(int fd) {
    Bytes out;
    std::uint8_t buf[256];
    for (;;) {
        ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
        if (n <= 0) break;
        out.insert(out.end(), buf, buf + n);
    }
    return out;
}

}  // namespace

TEST(Loopback, MatchesInProcess) {
    auto client = make_client(1);
    Dispatcher d;
    LoopbackChannel ch(d);
    Session s(ch);
    ServerState direct;
    populate(client, s, &direct, 1, 500);
    EXPECT_EQ(d.snapshot_state(), direct);
    for (const char* prefix : {"9q8", "9q80", "9q8b", "9q8zz"}) {
        SearchResult raw;
        auto ids = s.search(client, prefix, &raw);
        auto expect = direct.search(client.search_tokens(prefix), client.f_bits());
        EXPECT_EQ(raw, expect);
        EXPECT_EQ(ids, client.decrypt_results(expect, prefix));
    }
}

TEST(Loopback, ByteMeter) {
    auto client = make_client(2);
    Dispatcher d;
    LoopbackChannel ch(d);
    Session s(ch);
    EXPECT_EQ(s.meter().sent_payload, 0u);
    EXPECT_EQ(s.meter().rounds, 0u);
    s.update(client, Op::Add, "9q8yy", 1);
    EXPECT_EQ(s.meter().last_sent_payload, 41u);
    EXPECT_EQ(s.meter().sent_frames, 46u);
    s.update(client, Op::Del, "9q8yy", 1);
    EXPECT_EQ(s.meter().last_sent_payload, 41u);
    s.search(client, "9q");
    EXPECT_EQ(s.meter().rounds, 3u);
    EXPECT_EQ(s.meter().last_sent_payload, 8u + 32);
    EXPECT_EQ(s.meter().last_received_payload, 4u + 12 + 2 * 9);
}

TEST(Loopback, SizeMismatchBecomesErrorFrame) {
    auto client = make_client(3);
    Dispatcher d;
    LoopbackChannel ch(d);
    Session s(ch);
    s.update(client, Op::Add, "9q8yy", 1);
    s.update(client, Op::Add, "9q8yz", 1);
    auto tokens = client.search_tokens("9q");
    tokens.pop_back();
    auto reply = d.handle({wire::MessageType::Search, wire::encode_search(tokens, 2, client.f_bits())});
    ASSERT_EQ(reply.type, wire::MessageType::Error);
    EXPECT_EQ(wire::decode_error(reply.payload).code, wire::ErrorCode::SizeMismatch);
    try {
        s.send_search(tokens, 2, client.f_bits());
        FAIL();
    } catch (const ProtocolError& e) {
        EXPECT_EQ(e.code(), static_cast<std::uint8_t>(wire::ErrorCode::SizeMismatch));
    }
    // resync: regenerate the full token list and retry
    EXPECT_EQ(s.search(client, "9q"), (std::set<std::uint64_t>{1}));
}

TEST(Loopback, CleanupRoundtrip) {
    auto client = make_client(4);
    Dispatcher d;
    LoopbackChannel ch(d);
    Session s(ch);
    for (std::uint64_t id = 1; id <= 6; ++id) s.update(client, Op::Add, "9q8yy", id);
    s.update(client, Op::Del, "9q8yy", 3);
    auto before = s.search(client, "9q8");
    auto survivors = s.cleanup(client, "9q8yy");
    EXPECT_EQ(survivors.size(), 5u);
    EXPECT_EQ(s.search(client, "9q8"), before);
    EXPECT_EQ(d.snapshot_state().find(client.address_of("9q8yy"))->size(), 5u);
    CleanupMsg stray;
    EXPECT_THROW(s.send_cleanup(stray), ProtocolError);
}

TEST(Tcp, UpdateThenSearch) {
    auto client = make_client(5);
    Dispatcher d;
    TcpServer server(d, "127.0.0.1:0");
    server.start();
    TcpChannel ch(server.endpoint());
    Session s(ch);
    ServerState direct;
    populate(client, s, &direct, 5, 200);
    auto expect = direct.search(client.search_tokens("9q8b"), client.f_bits());
    SearchResult raw;
    auto ids = s.search(client, "9q8b", &raw);
    EXPECT_EQ(raw, expect);
    EXPECT_EQ(ids, client.decrypt_results(expect, "9q8b"));
    server.stop();
}

TEST(Tcp, ConcurrentSearchers) {
    auto client = make_client(6);
    Dispatcher d;
    TcpServer server(d, "127.0.0.1:0");
    server.start();
    {
        TcpChannel ch(server.endpoint());
        Session s(ch);
        populate(client, s, nullptr, 6, 300);
    }
    const std::vector<std::string> prefixes = {"9q8", "9q80", "9q8b", "9q8c", "9q8d"};
    std::vector<std::set<std::uint64_t>> serial;
    {
        TcpChannel ch(server.endpoint());
        Session s(ch);
        for (const auto& p : prefixes) serial.push_back(s.search(client, p));
    }
    std::vector<std::vector<std::set<std::uint64_t>>> got(4);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            TcpChannel ch(server.endpoint());
            Session s(ch);
            for (int rep = 0; rep < 5; ++rep)
                for (const auto& p : prefixes) got[t].push_back(s.search(client, p));
        });
    for (auto& th : threads) th.join();
    for (const auto& g : got)
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], serial[i % prefixes.size()]);
    server.stop();
}

TEST(Tcp, UnknownTypeGetsErrorThenClose) {
    Dispatcher d;
    TcpServer server(d, "127.0.0.1:0");
    server.start();
    int fd = raw_connect(server.port());
    ASSERT_GE(fd, 0);
    std::uint8_t frame[] = {0, 0, 0, 1, 0x42};
    ::send(fd, frame, sizeof(frame), 0);
    Bytes reply = read_until_close(fd);
    ::close(fd);
    ASSERT_GE(reply.size(), 6u);
    auto f = wire::decode_frame(reply);
    EXPECT_EQ(f.type, wire::MessageType::Error);
    EXPECT_EQ(wire::decode_error(f.payload).code, wire::ErrorCode::UnknownType);
    server.stop();
}

TEST(Tcp, OversizeFrameClosesSilently) {
    Dispatcher d;
    TcpServer server(d, "127.0.0.1:0");
    server.start();
    int fd = raw_connect(server.port());
    ASSERT_GE(fd, 0);
    std::uint8_t frame[] = {0x7f, 0, 0, 0, 0x01};
    ::send(fd, frame, sizeof(frame), 0);
    EXPECT_TRUE(read_until_close(fd).empty());
    ::close(fd);
    server.stop();
}

TEST(Tcp, MalformedPayloadGetsErrorThenClose) {
    Dispatcher d;
    TcpServer server(d, "127.0.0.1:0");
    server.start();
    int fd = raw_connect(server.port());
    ASSERT_GE(fd, 0);
    std::uint8_t frame[] = {0, 0, 0, 3, 0x01, 0xaa, 0xbb};
    ::send(fd, frame, sizeof(frame), 0);
    Bytes reply = read_until_close(fd);
    ::close(fd);
    auto f = wire::decode_frame(reply);
    EXPECT_EQ(wire::decode_error(f.payload).code, wire::ErrorCode::Malformed);
    server.stop();
}

TEST(Endpoints, ParseAndEnv) {
    auto ep = parse_endpoint("10.0.0.1:9000");
    EXPECT_EQ(ep.host, "10.0.0.1");
    EXPECT_EQ(ep.port, 9000);
    EXPECT_THROW(parse_endpoint("nohost"), ParameterError);
    EXPECT_THROW(parse_endpoint("h:99999"), ParameterError);
    ::setenv("GRIDSE_BIND", "127.0.0.1:7001", 1);
    EXPECT_EQ(bind_address_from_env("0.0.0.0:7000"), "127.0.0.1:7001");
    ::unsetenv("GRIDSE_BIND");
    EXPECT_EQ(bind_address_from_env("0.0.0.0:7000"), "0.0.0.0:7000");
}
