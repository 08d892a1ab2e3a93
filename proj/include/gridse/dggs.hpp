#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "gridse/sp2e.hpp"

namespace gridse::dggs {

enum class Scheme { Geohash, S2, H3 };

struct GeoPoint {
    double lat = 0;  // degrees, [-90, 90]
    double lon = 0;  // degrees, [-180, 180]
};

// Throws CoordError for NaN or out-of-range coordinates.
void validate(const GeoPoint& p);

struct CellCode {
    std::string code;
    Scheme scheme = Scheme::Geohash;
    bool operator==(const CellCode&) const = default;
};

struct BoundingBox {
    double lat_min = -90, lat_max = 90;
    double lon_min = -180, lon_max = 180;

    GeoPoint center() const { return {(lat_min + lat_max) / 2, (lon_min + lon_max) / 2}; }
    bool contains(const GeoPoint& p) const {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
    bool contains(const BoundingBox& b) const {
        return b.lat_min >= lat_min && b.lat_max <= lat_max && b.lon_min >= lon_min && b.lon_max <= lon_max;
    }
};

inline constexpr std::string_view kGeohashChars = "0123456789bcdefghjkmnpqrstuvwxyz";
inline constexpr std::size_t kGeohashMaxLen = 12;

Alphabet alphabet_for(Scheme scheme);
std::size_t max_length(Scheme scheme);  // geohash 12, S2 16, H3 15

// Standard interleaved base32 geohash: even bits bisect longitude, odd bits
// latitude, five bits per character. Throws CoordError / ParameterError.
CellCode geohash_encode(const GeoPoint& p, std::size_t precision);

// Rectangle of all points that encode to `code` at its own length.
// Throws AlphabetError / LengthError.
BoundingBox geohash_decode(std::string_view code);

// Query radius in meters -> geohash prefix length. Pinned at 5000 m -> 5 and
// 100 m -> 10 and interpolated log-linearly in between, so halving the range
// adds roughly 0.9 characters. Accepts 50..10000 m; throws ParameterError
// otherwise.
std::size_t range_to_prefix_len(double range_m, Scheme scheme = Scheme::Geohash);

// Alphabet and length checks for externally produced codes.
CellCode validate_code(std::string_view code, Scheme scheme);

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

}  // namespace gridse::dggs
