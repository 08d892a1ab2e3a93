#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gridse/bitblock.hpp"
#include "gridse/dggs.hpp"

namespace testing_support {

inline std::string fixture_path(const std::string& name) { return std::string(GRIDSE_FIXTURES) + "/" + name; }

inline std::string golden(const std::string& name) {
    static const std::map<std::string, std::string> table = [] {
        std::map<std::string, std::string> t;
        std::ifstream in(fixture_path("golden.txt"));
        if (!in) throw std::runtime_error("missing golden.txt");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string k, v;
            ss >> k >> v;
            t[k] = v;
        }
        return t;
    }();
    auto it = table.find(name);
    if (it == table.end()) throw std::runtime_error("no golden vector " + name);
    return it->second;
}

inline gridse::BitBlock random_block(std::mt19937_64& rng) {
    gridse::BitBlock b;
    for (std::size_t i = 0; i < gridse::kBlockBytes; i += 8) {
        std::uint64_t v = rng();
        for (int j = 0; j < 8; ++j) b.bytes()[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
    }
    return b;
}

inline gridse::Key random_key(std::mt19937_64& rng) { return random_block(rng).bytes(); }

inline std::string random_word(std::mt19937_64& rng, std::size_t len,
                               std::string_view alphabet = gridse::dggs::kGeohashChars) {
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(alphabet[pick(rng)]);
    return w;
}

// Reference geohash: quantize each axis to an integer grid, then interleave
// bits, longitude first.
inline std::string reference_geohash(double lat, double lon, std::size_t precision) {
    const std::size_t bits = precision * 5;
    const std::size_t lon_bits = (bits + 1) / 2, lat_bits = bits / 2;
    auto quantize = [](double v, double lo, double span, std::size_t n) {
        double scaled = std::ldexp((v - lo) / span, static_cast<int>(n));
        auto q = static_cast<std::uint64_t>(std::floor(scaled));
        std::uint64_t top = (std::uint64_t{1} << n) - 1;
        return q > top ? top : q;
    };
    std::uint64_t qlon = quantize(lon, -180.0, 360.0, lon_bits);
    std::uint64_t qlat = quantize(lat, -90.0, 180.0, lat_bits);
    static const char* chars = "0123456789bcdefghjkmnpqrstuvwxyz";
    std::string out;
    std::size_t li = lon_bits, ai = lat_bits;
    unsigned acc = 0;
    for (std::size_t b = 0; b < bits; ++b) {
        unsigned bit = (b % 2 == 0) ? (qlon >> --li) & 1u : (qlat >> --ai) & 1u;
        acc = (acc << 1) | bit;
        if (b % 5 == 4) {
            out.push_back(chars[acc]);
            acc = 0;
        }
    }
    return out;
}

}  // namespace testing_support
