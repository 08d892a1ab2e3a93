#include "gridse/dggs.hpp"

#include <algorithm>
#include <cmath>

#include "gridse/errors.hpp"

namespace gridse::dggs {

void validate(const GeoPoint& p) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0)) throw CoordError("latitude " + std::to_string(p.lat) + " out of range");
    if (!(p.lon >= -180.0 && p.lon <= 180.0))
        throw CoordError("longitude " + std::to_string(p.lon) + " out of range");
}

Alphabet alphabet_for(Scheme scheme) {
    return scheme == Scheme::Geohash ? Alphabet::geohash() : Alphabet::hex();
}

std::size_t max_length(Scheme scheme) {
    switch (scheme) {
        case Scheme::Geohash: return kGeohashMaxLen;
        case Scheme::S2: return 16;
        case Scheme::H3: return 15;
    }
    return 0;
}

CellCode geohash_encode(const GeoPoint& p, std::size_t precision) {
    validate(p);
    if (precision < 1 || precision > kGeohashMaxLen)
        throw ParameterError("geohash precision must be 1..12, got " + std::to_string(precision));

    double lat_lo = -90, lat_hi = 90, lon_lo = -180, lon_hi = 180;
    std::string code;
    code.reserve(precision);
    bool lon_turn = true;
    unsigned ch = 0;
    int nbits = 0;
    while (code.size() < precision) {
        double& lo = lon_turn ? lon_lo : lat_lo;
        double& hi = lon_turn ? lon_hi : lat_hi;
        double v = lon_turn ? p.lon : p.lat;
        double mid = (lo + hi) / 2;
        ch <<= 1;
        if (v >= mid) {
            ch |= 1;
            lo = mid;
        } else {
            hi = mid;
        }
        lon_turn = !lon_turn;
        if (++nbits == 5) {
            code.push_back(kGeohashChars[ch]);
            ch = 0;
            nbits = 0;
        }
    }
    return {std::move(code), Scheme::Geohash};
}

BoundingBox geohash_decode(std::string_view code) {
    validate_code(code, Scheme::Geohash);
    BoundingBox box;
    bool lon_turn = true;
    for (char c : code) {
        auto v = static_cast<unsigned>(kGeohashChars.find(c));
        for (int k = 4; k >= 0; --k) {
            double& lo = lon_turn ? box.lon_min : box.lat_min;
            double& hi = lon_turn ? box.lon_max : box.lat_max;
            double mid = (lo + hi) / 2;
            if ((v >> k) & 1u)
                lo = mid;
            else
                hi = mid;
            lon_turn = !lon_turn;
        }
    }
    return box;
}

std::size_t range_to_prefix_len(double range_m, Scheme scheme) {
    if (!(range_m >= 50.0 && range_m <= 10000.0))
        throw ParameterError("query range must be 50..10000 m, got " + std::to_string(range_m));
    if (scheme != Scheme::Geohash) throw ParameterError("range mapping is only defined for geohash");
    constexpr double kCoarse = 5000.0, kFine = 100.0;
    constexpr double kCoarseLen = 5.0, kFineLen = 10.0;
    double len = kCoarseLen + (kFineLen - kCoarseLen) * std::log(kCoarse / range_m) / std::log(kCoarse / kFine);
    auto rounded = static_cast<long>(std::lround(len));
    return static_cast<std::size_t>(std::clamp<long>(rounded, 1, static_cast<long>(kGeohashMaxLen)));
}

CellCode validate_code(std::string_view code, Scheme scheme) {
    if (code.empty()) throw LengthError("cell code must not be empty");
    if (code.size() > max_length(scheme))
        throw LengthError("cell code '" + std::string(code) + "' longer than " + std::to_string(max_length(scheme)));
    Alphabet a = alphabet_for(scheme);
    for (char c : code)
        if (!a.contains(c))
            throw AlphabetError(std::string("character '") + c + "' not valid for " + std::string(scheme_name(scheme)));
    return {std::string(code), scheme};
}

std::string_view scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::Geohash: return "geohash";
        case Scheme::S2: return "s2";
        case Scheme::H3: return "h3";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "geohash") return Scheme::Geohash;
    if (name == "s2") return Scheme::S2;
    if (name == "h3") return Scheme::H3;
    throw ParameterError("unknown DGGS scheme '" + std::string(name) + "'");
}

}  // namespace gridse::dggs
