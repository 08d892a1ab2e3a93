#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "gridse/engine.hpp"
#include "gridse/wire.hpp"

namespace gridse::net {

// Owns the server index and applies frames to it under a readers-writer lock:
// searches share the lock, updates and clean-ups take it exclusively.
class Dispatcher {
public:
    Dispatcher() = default;
    explicit Dispatcher(ServerState state) : state_(std::move(state)) {}

    // Never throws for a bad request; failures become ERROR frames. Sets
    // `close` when the connection should be dropped after replying.
    wire::Frame handle(const wire::Frame& request, bool& close);
    wire::Frame handle(const wire::Frame& request) {
        bool close = false;
        return handle(request, close);
    }

    ServerState snapshot_state() const;
    std::size_t index_size() const;

private:
    mutable std::shared_mutex mu_;
    ServerState state_;
};

// Payload and framed byte counts observed by a client session.
struct ByteMeter {
    std::uint64_t sent_payload = 0;
    std::uint64_t received_payload = 0;
    std::uint64_t sent_frames = 0;  // bytes including the 5-byte headers
    std::uint64_t received_frames = 0;
    std::uint64_t rounds = 0;

    std::uint64_t last_sent_payload = 0;
    std::uint64_t last_received_payload = 0;

    void record(const wire::Frame& request, const wire::Frame& reply);
    void reset() { *this = ByteMeter{}; }
};

// One request/response exchange with a server.
class Channel {
public:
    virtual ~Channel() = default;
    virtual wire::Frame roundtrip(const wire::Frame& request) = 0;
};

// In-process channel. Frames are still serialized and parsed so the codec is
// exercised exactly as over a socket.
class LoopbackChannel final : public Channel {
public:
    explicit LoopbackChannel(Dispatcher& dispatcher) : dispatcher_(dispatcher) {}
    wire::Frame roundtrip(const wire::Frame& request) override;

private:
    Dispatcher& dispatcher_;
};

class TcpChannel final : public Channel {
public:
    // `endpoint` is "host:port". Throws IOError when the connection fails.
    explicit TcpChannel(const std::string& endpoint);
    ~TcpChannel() override;
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    wire::Frame roundtrip(const wire::Frame& request) override;

private:
    int fd_ = -1;
};

// Client library: strictly sequential request/response over one channel.
// An optional fixed delay per round trip emulates WAN latency.
class Session {
public:
    explicit Session(Channel& channel, std::chrono::milliseconds latency = std::chrono::milliseconds{0})
        : channel_(channel), latency_(latency) {}

    void send_update(const UpdateMsg& msg);
    // Throws ProtocolError carrying ErrorCode::SizeMismatch when the server
    // aborts; callers may resync and retry.
    SearchResult send_search(std::span<const sp2e::PrefixToken> tokens, std::size_t prefix_len, std::size_t f);
    void send_cleanup(const CleanupMsg& msg);

    // Encrypt-and-send conveniences driving a ClientState.
    void update(ClientState& client, Op op, std::string_view w, std::uint64_t id);
    std::set<std::uint64_t> search(const ClientState& client, std::string_view prefix, SearchResult* raw = nullptr);
    // Searches w, drops deleted ids and rewrites w's list. Returns survivors.
    std::vector<std::uint64_t> cleanup(ClientState& client, std::string_view w);

    const ByteMeter& meter() const noexcept { return meter_; }
    ByteMeter& meter() noexcept { return meter_; }
    void set_latency(std::chrono::milliseconds latency) noexcept { latency_ = latency; }

private:
    wire::Frame exchange(const wire::Frame& request, wire::MessageType expected);

    Channel& channel_;
    std::chrono::milliseconds latency_;
    ByteMeter meter_;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

// "host:port", "[v6]:port" is not supported. Throws ParameterError.
Endpoint parse_endpoint(const std::string& text);

// Bind address from GRIDSE_BIND when set, else `fallback`.
std::string bind_address_from_env(const std::string& fallback);

// Thread-per-connection TCP daemon in front of a Dispatcher.
class TcpServer {
public:
    TcpServer(Dispatcher& dispatcher, const std::string& bind_addr,
              std::chrono::milliseconds reply_delay = std::chrono::milliseconds{0});
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    std::string endpoint() const;

    // Blocks until stop() is called.
    void run();
    // Runs the accept loop on a background thread.
    void start();
    void stop();

private:
    void serve_connection(int fd);

    Dispatcher& dispatcher_;
    std::chrono::milliseconds reply_delay_;
    std::string host_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;
    std::vector<int> open_fds_;
};

}  // namespace gridse::net
