#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "gridse/bitblock.hpp"

namespace gridse {

class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    Key key() {
        Key k;
        fill(k);
        return k;
    }
};

// OpenSSL's CSPRNG. Use this for anything that leaves a test.
class SystemRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

// Reproducible stream for tests and seeded benchmarks. Not cryptographically secure.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
    void fill(std::span<std::uint8_t> out) override;

private:
    std::mt19937_64 engine_;
};

}  // namespace gridse
