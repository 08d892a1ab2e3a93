#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridse/engine.hpp"

// Binary wire protocol. Every frame is
//
//   BE32 length | u8 type | payload          (length = |payload| + 1)
//
// with payloads
//
//   UPDATE         addr[32] | val[9]                                  (41 bytes)
//   SEARCH         BE32 count | BE16 prefix_len | BE16 f | count x token[32]
//   SEARCH_RESULT  BE32 entries | entries x (BE64 seq | BE32 n | n x val[9])
//   CLEANUP        addr[32] | BE32 n | n x val[9]
//   ERROR          u8 code | utf-8 message
//   OK             (empty)
namespace gridse::wire {

enum class MessageType : std::uint8_t {
    Update = 0x01,
    Search = 0x02,
    SearchResult = 0x03,
    Cleanup = 0x04,
    Error = 0x05,
    Ok = 0x06,
};

enum class ErrorCode : std::uint8_t {
    SizeMismatch = 0x01,
    Malformed = 0x02,
    UnknownType = 0x03,
    UnknownAddress = 0x04,
    Internal = 0x05,
};

constexpr std::size_t kHeaderBytes = 5;
constexpr std::size_t kMaxFrameBytes = 64u << 20;
constexpr std::size_t kSearchHeaderBytes = 8;

struct Frame {
    MessageType type = MessageType::Ok;
    Bytes payload;

    std::size_t wire_size() const noexcept { return kHeaderBytes + payload.size(); }
    bool operator==(const Frame&) const = default;
};

struct SearchRequest {
    std::vector<sp2e::PrefixToken> tokens;
    std::size_t prefix_len = 0;
    std::size_t f = 0;
    bool operator==(const SearchRequest&) const = default;
};

struct ErrorReply {
    ErrorCode code = ErrorCode::Internal;
    std::string message;
};

bool is_known_type(std::uint8_t t) noexcept;

Bytes encode_frame(const Frame& frame);
// Parses the 5-byte header; returns the payload length. Throws ProtocolError
// for an unknown type or a length outside 1..64 MiB.
std::size_t parse_header(std::span<const std::uint8_t, kHeaderBytes> header, MessageType& type);
// Decodes exactly one frame occupying all of `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes);

Bytes encode_update(const UpdateMsg& msg);
UpdateMsg decode_update(std::span<const std::uint8_t> payload);

// All tokens must carry `prefix_len`.
Bytes encode_search(std::span<const sp2e::PrefixToken> tokens, std::size_t prefix_len, std::size_t f);
SearchRequest decode_search(std::span<const std::uint8_t> payload);

Bytes encode_result(const SearchResult& result);
SearchResult decode_result(std::span<const std::uint8_t> payload);

Bytes encode_cleanup(const CleanupMsg& msg);
CleanupMsg decode_cleanup(std::span<const std::uint8_t> payload);

Bytes encode_error(ErrorCode code, std::string_view message);
ErrorReply decode_error(std::span<const std::uint8_t> payload);

}  // namespace gridse::wire
