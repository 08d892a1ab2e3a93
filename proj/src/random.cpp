#include "gridse/random.hpp"

#include <openssl/rand.h>

#include "gridse/errors.hpp"

namespace gridse {

void SystemRandom::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) throw Error("RAND_bytes failed");
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t v = engine_();
        for (int b = 0; b < 8 && i < out.size(); ++b, v >>= 8) out[i++] = static_cast<std::uint8_t>(v);
    }
}

}  // namespace gridse
