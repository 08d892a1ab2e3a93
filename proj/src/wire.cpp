#include "gridse/wire.hpp"

#include "byte_io.hpp"
#include "gridse/errors.hpp"

namespace gridse::wire {

using detail::Reader;
using detail::Writer;

bool is_known_type(std::uint8_t t) noexcept { return t >= 0x01 && t <= 0x06; }

Bytes encode_frame(const Frame& frame) {
    if (frame.payload.size() + 1 > kMaxFrameBytes) throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::Malformed), "frame exceeds 64 MiB");
    Bytes out;
    out.reserve(frame.wire_size());
    Writer w(out);
    w.u32(static_cast<std::uint32_t>(frame.payload.size() + 1));
    w.u8(static_cast<std::uint8_t>(frame.type));
    w.raw(frame.payload);
    return out;
}

std::size_t parse_header(std::span<const std::uint8_t, kHeaderBytes> header, MessageType& type) {
    std::uint32_t length = get_be32(header.data());
    if (length == 0 || length > kMaxFrameBytes)
        throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::Malformed),
                            "frame length " + std::to_string(length) + " out of bounds");
    if (!is_known_type(header[4]))
        throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::UnknownType),
                            "unknown message type " + std::to_string(header[4]));
    type = static_cast<MessageType>(header[4]);
    return length - 1;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes)
        throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::Malformed), "frame shorter than its header");
    Frame f;
    std::size_t n = parse_header(bytes.first<kHeaderBytes>(), f.type);
    if (bytes.size() != kHeaderBytes + n)
        throw ProtocolError(static_cast<std::uint8_t>(ErrorCode::Malformed), "frame length does not match buffer");
    f.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
    return f;
}

Bytes encode_update(const UpdateMsg& msg) {
    Bytes out;
    out.reserve(kUpdateBytes);
    Writer w(out);
    w.raw(msg.addr.span());
    w.raw(msg.val);
    return out;
}

UpdateMsg decode_update(std::span<const std::uint8_t> payload) {
    Reader r(payload, "update payload");
    UpdateMsg m;
    m.addr = r.block();
    r.into(m.val);
    r.expect_end();
    return m;
}

Bytes encode_search(std::span<const sp2e::PrefixToken> tokens, std::size_t prefix_len, std::size_t f) {
    Bytes out;
    out.reserve(kSearchHeaderBytes + tokens.size() * kBlockBytes);
    Writer w(out);
    w.u32(static_cast<std::uint32_t>(tokens.size()));
    w.u16(static_cast<std::uint16_t>(prefix_len));
    w.u16(static_cast<std::uint16_t>(f));
    for (const auto& t : tokens) {
        if (t.prefix_len != prefix_len) throw ParameterError("tokens in one search must share a prefix length");
        w.raw(t.k_prime.span());
    }
    return out;
}

SearchRequest decode_search(std::span<const std::uint8_t> payload) {
    Reader r(payload, "search payload");
    SearchRequest req;
    std::uint32_t count = r.u32();
    req.prefix_len = r.u16();
    req.f = r.u16();
    if (r.remaining() != static_cast<std::size_t>(count) * kBlockBytes)
        throw DecodeError("search payload: token count does not match length");
    if (req.f == 0 || req.prefix_len == 0 || req.prefix_len * req.f > kBlockBits)
        throw DecodeError("search payload: indicator window outside the block");
    req.tokens.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) req.tokens.push_back({r.block(), req.prefix_len});
    return req;
}

Bytes encode_result(const SearchResult& result) {
    Bytes out;
    out.reserve(4 + result.entries.size() * 12 + result.total_vals() * kValBytes);
    Writer w(out);
    w.u32(static_cast<std::uint32_t>(result.entries.size()));
    for (const auto& e : result.entries) {
        w.u64(e.seq);
        w.u32(static_cast<std::uint32_t>(e.vals.size()));
        for (const auto& v : e.vals) w.raw(v);
    }
    return out;
}

SearchResult decode_result(std::span<const std::uint8_t> payload) {
    Reader r(payload, "search result payload");
    SearchResult res;
    std::uint32_t count = r.u32();
    if (count > r.remaining() / 12) throw DecodeError("search result payload: truncated");
    res.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SearchResult::Entry e;
        e.seq = r.u64();
        std::uint32_t n = r.u32();
        if (n > r.remaining() / kValBytes) throw DecodeError("search result payload: truncated");
        e.vals.resize(n);
        for (auto& v : e.vals) r.into(v);
        res.entries.push_back(std::move(e));
    }
    r.expect_end();
    return res;
}

Bytes encode_cleanup(const CleanupMsg& msg) {
    Bytes out;
    Writer w(out);
    w.raw(msg.addr.span());
    w.u32(static_cast<std::uint32_t>(msg.vals.size()));
    for (const auto& v : msg.vals) w.raw(v);
    return out;
}

CleanupMsg decode_cleanup(std::span<const std::uint8_t> payload) {
    Reader r(payload, "cleanup payload");
    CleanupMsg m;
    m.addr = r.block();
    std::uint32_t n = r.u32();
    if (r.remaining() != static_cast<std::size_t>(n) * kValBytes)
        throw DecodeError("cleanup payload: value count does not match length");
    m.vals.resize(n);
    for (auto& v : m.vals) r.into(v);
    return m;
}

Bytes encode_error(ErrorCode code, std::string_view message) {
    Bytes out;
    Writer w(out);
    w.u8(static_cast<std::uint8_t>(code));
    w.str(message);
    return out;
}

ErrorReply decode_error(std::span<const std::uint8_t> payload) {
    Reader r(payload, "error payload");
    ErrorReply e;
    e.code = static_cast<ErrorCode>(r.u8());
    e.message = r.str(r.remaining());
    return e;
}

}  // namespace gridse::wire
