#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridse/dggs.hpp"
#include "gridse/engine.hpp"
#include "gridse/net.hpp"

namespace gridse::bench {

struct CheckinRecord {
    std::int64_t user_id = 0;
    std::string timestamp;
    double lat = 0;
    double lon = 0;
    std::uint64_t location_id = 0;  // used as the block id

    dggs::GeoPoint point() const { return {lat, lon}; }
    bool operator==(const CheckinRecord&) const = default;
};

enum class InputFormat { Tsv, Csv };
InputFormat parse_format(const std::string& name);

struct IngestReport {
    std::vector<CheckinRecord> records;
    std::size_t lines = 0;
    std::size_t malformed = 0;       // unparseable
    std::size_t invalid_coords = 0;  // parsed, but lat/lon out of range

    std::size_t skipped() const noexcept { return malformed + invalid_coords; }
};

// Tab-separated user, timestamp, lat, lon, location_id (the Gowalla layout),
// or CSV with a header naming those columns. Bad lines are skipped and
// counted; more than 1% unparseable lines raises FormatError.
IngestReport parse_checkins(std::istream& in, InputFormat format);
// Throws IOError when the file cannot be opened.
IngestReport ingest(const std::filesystem::path& path, InputFormat format);

struct SyntheticParams {
    std::size_t venues = 800;
    double spread_km = 4.0;  // std-dev of venue offsets around a city centre
    double jitter_m = 0;     // std-dev of each check-in around its venue; 0 puts it on the venue
};

// Reproducible check-ins clustered on a fixed pool of venues around
// Californian cities. Every record gets its own block id. The first
// `venues` records visit each venue once, so the occupied-cell count is the
// same for every n >= venues.
std::vector<CheckinRecord> synthetic(std::size_t n, std::uint64_t seed, const SyntheticParams& params = {});

// Grows a record set to `target` by repeatedly picking a random user and
// duplicating their check-ins under fresh block ids.
std::vector<CheckinRecord> duplicate_to(const std::vector<CheckinRecord>& base, std::size_t target,
                                        std::uint64_t seed);

// Latitude/longitude box around California.
std::vector<CheckinRecord> filter_california(const std::vector<CheckinRecord>& records);

// Plaintext B-tree style baseline: ordered map cell code -> update list,
// prefix queries as a range scan with the same last-op-wins semantics.
class PlaintextIndex {
public:
    void apply(Op op, const std::string& w, std::uint64_t id);
    std::set<std::uint64_t> query(std::string_view prefix) const;
    // Number of keys the last query visited.
    std::size_t last_visited() const noexcept { return last_visited_; }
    std::size_t distinct_keys() const noexcept { return index_.size(); }
    // Approximate bytes a reply carrying the matching (id, op) pairs would take.
    std::size_t reply_bytes(std::string_view prefix) const;

private:
    std::map<std::string, std::vector<BlockRef>, std::less<>> index_;
    mutable std::size_t last_visited_ = 0;
};

// Client state plus an in-process server reached through the wire codec.
class EncryptedIndex {
public:
    EncryptedIndex(RandomSource& rng, const EngineParams& params,
                   std::chrono::milliseconds latency = std::chrono::milliseconds{0});

    ClientState& client() noexcept { return client_; }
    net::Session& session() noexcept { return session_; }
    net::Dispatcher& dispatcher() noexcept { return dispatcher_; }

    void update(Op op, const std::string& w, std::uint64_t id) { session_.update(client_, op, w, id); }

private:
    ClientState client_;
    net::Dispatcher dispatcher_;
    net::LoopbackChannel channel_;
    net::Session session_;
};

struct BuildStats {
    std::size_t updates = 0;        // N
    std::size_t distinct_keys = 0;  // d_w
    double seconds = 0;
};

// One add update per record under its geohash cell at `precision`.
BuildStats build_index(const std::vector<CheckinRecord>& records, std::size_t precision, EncryptedIndex& engine,
                       PlaintextIndex* baseline = nullptr);

struct QueryOutcome {
    std::string prefix;
    std::set<std::uint64_t> ids;
    double millis = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    std::size_t tokens = 0;
    std::size_t matched_updates = 0;  // a_{w_p}: encrypted values returned
    std::uint64_t rounds = 0;
};

QueryOutcome run_query(EncryptedIndex& engine, const dggs::GeoPoint& center, double range_m);
QueryOutcome run_prefix_query(EncryptedIndex& engine, const std::string& prefix);

struct BenchConfig {
    std::vector<std::size_t> db_sizes{1000, 10000, 100000};
    std::vector<double> ranges_m{100, 500, 1000, 2000, 5000};
    std::vector<double> deletion_pcts{0, 10, 25, 50};
    std::vector<std::size_t> f_bits{16, 20};
    std::size_t base_db_size = 100000;
    double default_range_m = 5000;
    double default_deletion_pct = 10;
    std::size_t default_f = 20;
    std::size_t precision = 7;
    std::size_t reps = 10;
    std::uint64_t seed = 1;
    std::chrono::milliseconds wan_latency{30};
    // Check-in scatter for the result_size experiment on synthetic data, so
    // result sizes shrink with the range instead of bottoming out at one venue.
    double result_size_jitter_m = 30;
    std::set<std::string> experiments{"scale", "result_size", "deletion", "fbits", "update", "wan"};
    std::optional<std::filesystem::path> input;
    InputFormat format = InputFormat::Tsv;
    SyntheticParams synthetic;
};

struct BenchRow {
    std::string experiment;
    std::string scheme;  // "gridse" or "plaintext"
    std::size_t db_size = 0;
    std::size_t result_size = 0;
    double deletion_pct = 0;
    std::size_t f = 0;
    std::size_t prefix_len = 0;
    double search_ms = 0;  // median
    double search_ms_mean = 0;
    double update_us = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    std::size_t distinct_keys = 0;
    std::size_t matched_updates = 0;
    bool oracle_match = true;
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

BenchReport bench_suite(const BenchConfig& config, std::ostream* progress = nullptr);
void write_csv(const BenchReport& report, std::ostream& out);
void write_json(const BenchReport& report, std::ostream& out);

// Median / mean of a sample; empty input yields 0.
double median(std::vector<double> v);
double mean(const std::vector<double>& v);

}  // namespace gridse::bench
