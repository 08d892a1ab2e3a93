#include "gridse/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "gridse/errors.hpp"

namespace gridse::net {

using wire::ErrorCode;
using wire::Frame;
using wire::MessageType;

namespace {

Frame error_frame(ErrorCode code, std::string_view message) {
    return {MessageType::Error, wire::encode_error(code, message)};
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw IOError(std::string("send failed: ") + std::strerror(errno));
        }
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

// False on clean EOF before any byte was read.
bool read_all(int fd, std::uint8_t* data, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd, data + got, n - got, 0);
        if (r == 0) {
            if (got == 0) return false;
            throw IOError("connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            throw IOError(std::string("recv failed: ") + std::strerror(errno));
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

void send_frame(int fd, const Frame& f) {
    Bytes raw = wire::encode_frame(f);
    write_all(fd, raw.data(), raw.size());
}

// Returns false on EOF at a frame boundary.
bool recv_frame(int fd, Frame& out) {
    std::array<std::uint8_t, wire::kHeaderBytes> header;
    if (!read_all(fd, header.data(), header.size())) return false;
    std::size_t n = wire::parse_header(header, out.type);
    out.payload.resize(n);
    if (n > 0 && !read_all(fd, out.payload.data(), n)) throw IOError("connection closed mid-frame");
    return true;
}

}  // namespace

// ---- Dispatcher -----------------------------------------------------------

Frame Dispatcher::handle(const Frame& request, bool& close) {
    close = false;
    try {
        switch (request.type) {
            case MessageType::Update: {
                UpdateMsg msg = wire::decode_update(request.payload);
                std::unique_lock lock(mu_);
                state_.apply_update(msg);
                return {MessageType::Ok, {}};
            }
            case MessageType::Search: {
                wire::SearchRequest req = wire::decode_search(request.payload);
                SearchResult res;
                {
                    std::shared_lock lock(mu_);
                    res = state_.search(req.tokens, req.f);
                }
                return {MessageType::SearchResult, wire::encode_result(res)};
            }
            case MessageType::Cleanup: {
                CleanupMsg msg = wire::decode_cleanup(request.payload);
                std::unique_lock lock(mu_);
                state_.replace(msg);
                return {MessageType::Ok, {}};
            }
            default:
                close = true;
                return error_frame(ErrorCode::UnknownType, "message type not accepted by the server");
        }
    } catch (const SizeMismatch& e) {
        return error_frame(ErrorCode::SizeMismatch, e.what());
    } catch (const KeyError& e) {
        return error_frame(ErrorCode::UnknownAddress, e.what());
    } catch (const DecodeError& e) {
        close = true;
        return error_frame(ErrorCode::Malformed, e.what());
    } catch (const std::exception& e) {
        close = true;
        return error_frame(ErrorCode::Internal, e.what());
    }
}

ServerState Dispatcher::snapshot_state() const {
    std::shared_lock lock(mu_);
    return state_;
}

std::size_t Dispatcher::index_size() const {
    std::shared_lock lock(mu_);
    return state_.size();
}

// ---- client side ----------------------------------------------------------

void ByteMeter::record(const Frame& request, const Frame& reply) {
    sent_payload += request.payload.size();
    received_payload += reply.payload.size();
    sent_frames += request.wire_size();
    received_frames += reply.wire_size();
    last_sent_payload = request.payload.size();
    last_received_payload = reply.payload.size();
    ++rounds;
}

Frame LoopbackChannel::roundtrip(const Frame& request) {
    Frame parsed = wire::decode_frame(wire::encode_frame(request));
    Frame reply = dispatcher_.handle(parsed);
    return wire::decode_frame(wire::encode_frame(reply));
}

TcpChannel::TcpChannel(const std::string& endpoint) {
    Endpoint ep = parse_endpoint(endpoint);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string port = std::to_string(ep.port);
    if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0)
        throw IOError("cannot resolve " + endpoint + ": " + ::gai_strerror(rc));
    for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
        int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw IOError("cannot connect to " + endpoint);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpChannel::~TcpChannel() {
    if (fd_ >= 0) ::close(fd_);
}

Frame TcpChannel::roundtrip(const Frame& request) {
    send_frame(fd_, request);
    Frame reply;
    if (!recv_frame(fd_, reply)) throw IOError("server closed the connection");
    return reply;
}

Frame Session::exchange(const Frame& request, MessageType expected) {
    Frame reply = channel_.roundtrip(request);
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    meter_.record(request, reply);
    if (reply.type == MessageType::Error) {
        auto err = wire::decode_error(reply.payload);
        throw ProtocolError(static_cast<std::uint8_t>(err.code), "server error: " + err.message);
    }
    if (reply.type != expected)
        throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::Malformed), "unexpected reply type");
    return reply;
}

void Session::send_update(const UpdateMsg& msg) {
    exchange({MessageType::Update, wire::encode_update(msg)}, MessageType::Ok);
}

SearchResult Session::send_search(std::span<const sp2e::PrefixToken> tokens, std::size_t prefix_len,
                                  std::size_t f) {
    Frame reply = exchange({MessageType::Search, wire::encode_search(tokens, prefix_len, f)}, MessageType::SearchResult);
    return wire::decode_result(reply.payload);
}

void Session::send_cleanup(const CleanupMsg& msg) {
    exchange({MessageType::Cleanup, wire::encode_cleanup(msg)}, MessageType::Ok);
}

void Session::update(ClientState& client, Op op, std::string_view w, std::uint64_t id) {
    send_update(client.update(op, w, id));
}

std::set<std::uint64_t> Session::search(const ClientState& client, std::string_view prefix, SearchResult* raw) {
    auto tokens = client.search_tokens(prefix);
    SearchResult res = send_search(tokens, prefix.size(), client.f_bits());
    auto ids = client.decrypt_results(res, prefix);
    if (raw) *raw = std::move(res);
    return ids;
}

std::vector<std::uint64_t> Session::cleanup(ClientState& client, std::string_view w) {
    SearchResult res;
    search(client, w, &res);
    auto survivors = client.live_ids(w, res);
    send_cleanup(client.cleanup(w, survivors));
    return survivors;
}

// ---- server side ----------------------------------------------------------

Endpoint parse_endpoint(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) throw ParameterError("endpoint must be host:port, got '" + text + "'");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    if (ep.host.empty()) ep.host = "0.0.0.0";
    char* end = nullptr;
    std::string port_text = text.substr(colon + 1);
    unsigned long port = std::strtoul(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port > 65535) throw ParameterError("invalid port in '" + text + "'");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

std::string bind_address_from_env(const std::string& fallback) {
    const char* env = std::getenv("GRIDSE_BIND");
    return env && *env ? std::string(env) : fallback;
}

TcpServer::TcpServer(Dispatcher& dispatcher, const std::string& bind_addr, std::chrono::milliseconds reply_delay)
    : dispatcher_(dispatcher), reply_delay_(reply_delay) {
    Endpoint ep = parse_endpoint(bind_addr);
    host_ = ep.host;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IOError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw ParameterError("bind host must be a dotted IPv4 address, got '" + ep.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
        std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw IOError("cannot listen on " + bind_addr + ": " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

std::string TcpServer::endpoint() const {
    std::string host = host_ == "0.0.0.0" ? "127.0.0.1" : host_;
    return host + ":" + std::to_string(port_);
}

void TcpServer::run() {
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, 100);
        if (rc <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(workers_mu_);
        if (stopping_) {
            ::close(fd);
            break;
        }
        open_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::start() {
    acceptor_ = std::thread([this] { run(); });
}

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(workers_mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
}

void TcpServer::serve_connection(int fd) {
    try {
        for (;;) {
            Frame request;
            try {
                if (!recv_frame(fd, request)) break;
            } catch (const ProtocolError& e) {
                // Unknown types get one ERROR reply; bad lengths are dropped
                // silently since the stream can no longer be trusted.
                if (e.code() == static_cast<std::uint8_t>(ErrorCode::UnknownType))
                    send_frame(fd, error_frame(ErrorCode::UnknownType, e.what()));
                break;
            }
            bool close = false;
            Frame reply = dispatcher_.handle(request, close);
            if (reply_delay_.count() > 0) std::this_thread::sleep_for(reply_delay_);
            send_frame(fd, reply);
            if (close) break;
        }
    } catch (const std::exception&) {
        // Peer went away; nothing to report to.
    }
    std::lock_guard lock(workers_mu_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
    ::close(fd);
}

}  // namespace gridse::net
