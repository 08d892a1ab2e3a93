#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridse {

// Every error raised by the library derives from Error so callers can catch
// the whole family at the CLI boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error {
    using Error::Error;
};
class ParameterError : public Error {
    using Error::Error;
};
class AlphabetError : public Error {
    using Error::Error;
};
class LengthError : public Error {
    using Error::Error;
};
class CoordError : public Error {
    using Error::Error;
};
class KeyError : public Error {
    using Error::Error;
};
class DecodeError : public Error {
    using Error::Error;
};
class IOError : public Error {
    using Error::Error;
};
class FormatError : public Error {
    using Error::Error;
};

// Raised by the server when the token list does not line up with its index.
class SizeMismatch : public Error {
public:
    SizeMismatch(std::size_t tokens, std::size_t entries)
        : Error("token count " + std::to_string(tokens) + " does not match index size " +
                std::to_string(entries)),
          tokens_(tokens),
          entries_(entries) {}

    std::size_t tokens() const noexcept { return tokens_; }
    std::size_t entries() const noexcept { return entries_; }

private:
    std::size_t tokens_;
    std::size_t entries_;
};

// Wire-level failure: malformed frame, unknown message type, or an ERROR reply.
class ProtocolError : public Error {
public:
    ProtocolError(std::uint8_t code, const std::string& what) : Error(what), code_(code) {}
    std::uint8_t code() const noexcept { return code_; }

private:
    std::uint8_t code_;
};

}  // namespace gridse
