#include "gridse/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gridse/errors.hpp"

namespace gridse::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
    std::istringstream ss(trim(text));
    ss >> out;
    return !ss.fail() && ss.eof();
}

struct Columns {
    std::size_t user = 0, time = 1, lat = 2, lon = 3, loc = 4;
};

Columns columns_from_header(const std::vector<std::string>& header) {
    Columns c;
    auto find = [&](std::initializer_list<const char*> names, std::size_t& dst) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string h = trim(header[i]);
            std::transform(h.begin(), h.end(), h.begin(), [](unsigned char ch) { return std::tolower(ch); });
            for (const char* n : names)
                if (h == n) {
                    dst = i;
                    return;
                }
        }
        throw FormatError(std::string("CSV header lacks column '") + *names.begin() + "'");
    };
    find({"user_id", "user", "userid"}, c.user);
    find({"timestamp", "time", "checkin_time", "check_in_time"}, c.time);
    find({"lat", "latitude"}, c.lat);
    find({"lon", "lng", "longitude"}, c.lon);
    find({"location_id", "location", "locationid", "venue_id"}, c.loc);
    return c;
}

// City centres used to place synthetic venues.
constexpr dggs::GeoPoint kCities[] = {
    {34.05223, -118.24368},  // Los Angeles
    {37.77493, -122.41942},  // San Francisco
    {32.71571, -117.16472},  // San Diego
    {37.33821, -121.88633},  // San Jose
    {38.58157, -121.49440},  // Sacramento
    {36.73778, -119.78712},  // Fresno
    {37.80437, -122.27080},  // Oakland
    {33.83659, -117.91430},  // Anaheim
    {35.37329, -119.01871},  // Bakersfield
    {34.42083, -119.69819},  // Santa Barbara
    {33.95335, -117.39616},  // Riverside
    {38.44047, -122.71443},  // Santa Rosa
};

double round5(double v) { return std::round(v * 1e5) / 1e5; }

struct Scenario {
    std::unique_ptr<EncryptedIndex> engine;
    PlaintextIndex baseline;
    BuildStats stats;
    std::string prefix;
    std::size_t total_updates = 0;
};

// Most frequently occupied cell at `precision`; its centre is the query point.
dggs::GeoPoint densest_point(const std::vector<CheckinRecord>& records, std::size_t precision) {
    std::unordered_map<std::string, std::size_t> counts;
    std::string best;
    std::size_t best_n = 0;
    for (const auto& r : records) {
        auto code = dggs::geohash_encode(r.point(), precision).code;
        std::size_t n = ++counts[code];
        if (n > best_n || (n == best_n && code < best)) {
            best_n = n;
            best = code;
        }
    }
    if (best.empty()) return {0, 0};
    return dggs::geohash_decode(best).center();
}

// Densest cell at `from` characters, then its densest child, down to `to`.
dggs::GeoPoint densest_chain(const std::vector<CheckinRecord>& records, std::size_t from, std::size_t to) {
    std::vector<std::string> codes;
    codes.reserve(records.size());
    for (const auto& r : records) codes.push_back(dggs::geohash_encode(r.point(), to).code);
    std::string chosen;
    for (std::size_t len = from; len <= to; ++len) {
        std::map<std::string, std::size_t> counts;
        for (const auto& c : codes)
            if (c.starts_with(chosen)) ++counts[c.substr(0, len)];
        if (counts.empty()) break;
        chosen = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                     return a.second < b.second;
                 })->first;
    }
    if (chosen.empty()) return {0, 0};
    return dggs::geohash_decode(chosen).center();
}

// Adds every record except that, among records matching `prefix`, only
// M / (1 + p) are added and the remaining M - M / (1 + p) updates delete a
// random subset of those. The update count N and the number of updates under
// the queried prefix stay fixed while the deletion share varies.
Scenario build_scenario(const std::vector<CheckinRecord>& records, const BenchConfig& cfg, std::size_t f,
                        double deletion_pct, const std::string& prefix, std::chrono::milliseconds latency = {}) {
    Scenario s;
    SeededRandom rng(cfg.seed);
    EngineParams params;
    params.f_bits = f;
    params.max_len = dggs::kGeohashMaxLen;
    s.engine = std::make_unique<EncryptedIndex>(rng, params);
    s.prefix = prefix;

    std::vector<std::pair<std::string, std::uint64_t>> matching;
    std::vector<std::pair<std::string, std::uint64_t>> stream;
    for (const auto& r : records) {
        std::string w = dggs::geohash_encode(r.point(), cfg.precision).code;
        if (w.starts_with(prefix))
            matching.emplace_back(w, r.location_id);
        else
            stream.emplace_back(w, r.location_id);
    }
    double share = deletion_pct / 100.0;
    auto adds = static_cast<std::size_t>(std::llround(static_cast<double>(matching.size()) / (1.0 + share)));
    std::size_t dels = matching.size() - adds;

    auto t0 = Clock::now();
    std::size_t next_match = 0;
    // Interleave matching adds through the stream so insertion order looks natural.
    std::size_t stride = adds == 0 ? 0 : std::max<std::size_t>(1, stream.size() / adds);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (stride != 0 && i % stride == 0 && next_match < adds) {
            auto& [w, id] = matching[next_match++];
            s.engine->update(Op::Add, w, id);
            s.baseline.apply(Op::Add, w, id);
        }
        s.engine->update(Op::Add, stream[i].first, stream[i].second);
        s.baseline.apply(Op::Add, stream[i].first, stream[i].second);
    }
    for (; next_match < adds; ++next_match) {
        auto& [w, id] = matching[next_match];
        s.engine->update(Op::Add, w, id);
        s.baseline.apply(Op::Add, w, id);
    }
    std::mt19937_64 pick(cfg.seed ^ 0x5eedULL);
    std::vector<std::size_t> order(adds);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), pick);
    for (std::size_t k = 0; k < dels; ++k) {
        auto& [w, id] = matching[order[k % std::max<std::size_t>(adds, 1)]];
        s.engine->update(Op::Del, w, id);
        s.baseline.apply(Op::Del, w, id);
    }
    s.stats.seconds = elapsed_ms(t0) / 1000.0;
    s.stats.updates = stream.size() + adds + dels;
    s.stats.distinct_keys = s.engine->client().distinct_keys();
    s.total_updates = s.stats.updates;
    s.engine->session().set_latency(latency);  // searches only
    return s;
}

// Records for one |DB| point of the scale experiment: everything under
// `prefix` comes from `smallest`, the rest of the n records from `full`, so
// a_{w_p} stays put while |DB| grows.
std::vector<CheckinRecord> scale_records(const std::vector<CheckinRecord>& smallest,
                                         const std::vector<CheckinRecord>& full, const std::string& prefix,
                                         std::size_t precision, std::size_t n) {
    auto under = [&](const CheckinRecord& r) { return dggs::geohash_encode(r.point(), precision).code.starts_with(prefix); };
    std::vector<CheckinRecord> out;
    for (const auto& r : smallest)
        if (under(r)) out.push_back(r);
    std::uint64_t next_id = 0;
    for (const auto& r : smallest) next_id = std::max(next_id, r.location_id);
    std::vector<const CheckinRecord*> pool;
    for (const auto& r : full)
        if (!under(r)) pool.push_back(&r);
    if (pool.empty()) return out;
    for (std::size_t i = 0; out.size() < n; ++i) {
        CheckinRecord copy = *pool[i % pool.size()];
        copy.location_id = ++next_id;
        out.push_back(std::move(copy));
    }
    return out;
}

std::vector<CheckinRecord> dataset(const BenchConfig& cfg, std::size_t n) {
    if (cfg.input) {
        auto base = filter_california(ingest(*cfg.input, cfg.format).records);
        if (base.size() >= n) return {base.begin(), base.begin() + static_cast<std::ptrdiff_t>(n)};
        return duplicate_to(base, n, cfg.seed);
    }
    return synthetic(n, cfg.seed, cfg.synthetic);
}

std::string num(double v) {
    std::ostringstream o;
    o << v;
    return o.str();
}

struct Timed {
    QueryOutcome first;
    double median_ms = 0;
    double mean_ms = 0;
};

Timed time_query(Scenario& s, std::size_t reps) {
    run_prefix_query(*s.engine, s.prefix);  // warm-up
    Timed t;
    std::vector<double> samples;
    for (std::size_t i = 0; i < std::max<std::size_t>(reps, 1); ++i) {
        auto q = run_prefix_query(*s.engine, s.prefix);
        samples.push_back(q.millis);
        if (i == 0) t.first = std::move(q);
    }
    t.median_ms = median(samples);
    t.mean_ms = mean(samples);
    return t;
}

// Round-robin over scenarios so slow drift hits all of them alike.
std::vector<Timed> time_interleaved(std::vector<Scenario>& ss, std::size_t reps) {
    std::vector<Timed> out(ss.size());
    std::vector<std::vector<double>> samples(ss.size());
    for (auto& s : ss) run_prefix_query(*s.engine, s.prefix);
    for (std::size_t i = 0; i < std::max<std::size_t>(reps, 1); ++i)
        for (std::size_t k = 0; k < ss.size(); ++k) {
            auto q = run_prefix_query(*ss[k].engine, ss[k].prefix);
            samples[k].push_back(q.millis);
            if (i == 0) out[k].first = std::move(q);
        }
    for (std::size_t k = 0; k < ss.size(); ++k) {
        out[k].median_ms = median(samples[k]);
        out[k].mean_ms = mean(samples[k]);
    }
    return out;
}

BenchRow gridse_row(const std::string& experiment, const Scenario& s, const Timed& t, double deletion_pct,
                    std::size_t f, bool match) {
    BenchRow r;
    r.experiment = experiment;
    r.scheme = "gridse";
    r.db_size = s.total_updates;
    r.result_size = t.first.ids.size();
    r.deletion_pct = deletion_pct;
    r.f = f;
    r.prefix_len = s.prefix.size();
    r.search_ms = t.median_ms;
    r.search_ms_mean = t.mean_ms;
    r.bytes_sent = t.first.bytes_sent;
    r.bytes_received = t.first.bytes_received;
    r.distinct_keys = s.stats.distinct_keys;
    r.matched_updates = t.first.matched_updates;
    r.oracle_match = match;
    return r;
}

BenchRow plaintext_row(const std::string& experiment, const Scenario& s, std::size_t reps, double deletion_pct,
                       std::size_t f) {
    std::vector<double> samples;
    std::set<std::uint64_t> ids;
    for (std::size_t i = 0; i < std::max<std::size_t>(reps, 1) + 1; ++i) {
        auto t0 = Clock::now();
        ids = s.baseline.query(s.prefix);
        if (i > 0) samples.push_back(elapsed_ms(t0));
    }
    BenchRow r;
    r.experiment = experiment;
    r.scheme = "plaintext";
    r.db_size = s.total_updates;
    r.result_size = ids.size();
    r.deletion_pct = deletion_pct;
    r.f = f;
    r.prefix_len = s.prefix.size();
    r.search_ms = median(samples);
    r.search_ms_mean = mean(samples);
    r.bytes_sent = s.prefix.size();
    r.bytes_received = s.baseline.reply_bytes(s.prefix);
    r.distinct_keys = s.baseline.distinct_keys();
    r.matched_updates = s.baseline.last_visited();
    return r;
}

void search_rows(BenchReport& report, const std::string& experiment, Scenario& s, const BenchConfig& cfg,
                 double deletion_pct, std::size_t f) {
    Timed t = time_query(s, cfg.reps);
    bool match = t.first.ids == s.baseline.query(s.prefix);
    report.rows.push_back(gridse_row(experiment, s, t, deletion_pct, f, match));
    report.rows.push_back(plaintext_row(experiment, s, cfg.reps, deletion_pct, f));
}

void interleaved_rows(BenchReport& report, const std::string& experiment, std::vector<Scenario>& ss,
                      const BenchConfig& cfg, const std::vector<double>& pcts, const std::vector<std::size_t>& fs) {
    auto timed = time_interleaved(ss, cfg.reps);
    for (std::size_t k = 0; k < ss.size(); ++k) {
        bool match = timed[k].first.ids == ss[k].baseline.query(ss[k].prefix);
        report.rows.push_back(gridse_row(experiment, ss[k], timed[k], pcts[k], fs[k], match));
        report.rows.push_back(plaintext_row(experiment, ss[k], cfg.reps, pcts[k], fs[k]));
    }
}

}  // namespace

InputFormat parse_format(const std::string& name) {
    if (name == "tsv") return InputFormat::Tsv;
    if (name == "csv") return InputFormat::Csv;
    throw ParameterError("unknown input format '" + name + "' (tsv|csv)");
}

IngestReport parse_checkins(std::istream& in, InputFormat format) {
    IngestReport rep;
    char sep = format == InputFormat::Tsv ? '\t' : ',';
    Columns cols;
    std::string line;
    bool header_pending = format == InputFormat::Csv;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split(line, sep);
        if (header_pending) {
            cols = columns_from_header(fields);
            header_pending = false;
            continue;
        }
        ++rep.lines;
        std::size_t need = std::max({cols.user, cols.time, cols.lat, cols.lon, cols.loc}) + 1;
        CheckinRecord r;
        bool ok = fields.size() >= need && parse_number(fields[cols.user], r.user_id) &&
                  parse_number(fields[cols.lat], r.lat) && parse_number(fields[cols.lon], r.lon) &&
                  parse_number(fields[cols.loc], r.location_id);
        if (!ok) {
            ++rep.malformed;
            continue;
        }
        r.timestamp = trim(fields[cols.time]);
        try {
            dggs::validate(r.point());
        } catch (const CoordError&) {
            ++rep.invalid_coords;
            continue;
        }
        rep.records.push_back(std::move(r));
    }
    if (rep.lines > 0 && rep.malformed * 100 > rep.lines)
        throw FormatError(std::to_string(rep.malformed) + " of " + std::to_string(rep.lines) +
                          " lines are malformed (more than 1%)");
    return rep;
}

IngestReport ingest(const std::filesystem::path& path, InputFormat format) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    return parse_checkins(in, format);
}

std::vector<CheckinRecord> synthetic(std::size_t n, std::uint64_t seed, const SyntheticParams& params) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> offset(0.0, params.spread_km);
    const std::size_t nvenues = std::max<std::size_t>(params.venues, 1);
    std::vector<dggs::GeoPoint> venues;
    venues.reserve(nvenues);
    for (std::size_t v = 0; v < nvenues; ++v) {
        const auto& c = kCities[v % std::size(kCities)];
        double dlat = offset(rng) / 111.32;
        double dlon = offset(rng) / (111.32 * std::cos(c.lat * M_PI / 180.0));
        venues.push_back({round5(std::clamp(c.lat + dlat, -90.0, 90.0)), round5(std::clamp(c.lon + dlon, -180.0, 180.0))});
    }
    // Popularity falls off with venue rank.
    std::vector<double> weights(nvenues);
    for (std::size_t v = 0; v < nvenues; ++v) weights[v] = 1.0 / (static_cast<double>(v) + 10.0);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<std::int64_t> user(1, 63369);
    std::uniform_int_distribution<int> day(1, 28), hour(0, 23), minute(0, 59);

    // Separate stream so scatter leaves venue and user choices unchanged.
    std::mt19937_64 jitter_rng(seed ^ 0x6a177e5ULL);
    std::normal_distribution<double> scatter(0.0, params.jitter_m > 0 ? params.jitter_m / 1000.0 : 1.0);

    std::vector<CheckinRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t v = i < nvenues ? i : pick(rng);
        CheckinRecord r;
        r.user_id = user(rng);
        std::ostringstream ts;
        ts << "2010-10-" << std::setw(2) << std::setfill('0') << day(rng) << 'T' << std::setw(2) << hour(rng) << ':'
           << std::setw(2) << minute(rng) << ":00Z";
        r.timestamp = ts.str();
        r.lat = venues[v].lat;
        r.lon = venues[v].lon;
        if (params.jitter_m > 0) {
            r.lat = std::clamp(r.lat + scatter(jitter_rng) / 111.32, -90.0, 90.0);
            r.lon = std::clamp(r.lon + scatter(jitter_rng) / (111.32 * std::cos(venues[v].lat * M_PI / 180.0)),
                               -180.0, 180.0);
        }
        r.location_id = i + 1;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CheckinRecord> duplicate_to(const std::vector<CheckinRecord>& base, std::size_t target,
                                        std::uint64_t seed) {
    std::vector<CheckinRecord> out = base;
    if (base.empty() || out.size() >= target) {
        if (out.size() > target) out.resize(target);
        return out;
    }
    std::map<std::int64_t, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < base.size(); ++i) by_user[base[i].user_id].push_back(i);
    std::vector<const std::vector<std::size_t>*> users;
    for (const auto& [u, idx] : by_user) users.push_back(&idx);

    std::uint64_t next_id = 0;
    for (const auto& r : base) next_id = std::max(next_id, r.location_id);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, users.size() - 1);
    while (out.size() < target) {
        for (std::size_t i : *users[pick(rng)]) {
            if (out.size() >= target) break;
            CheckinRecord copy = base[i];
            copy.location_id = ++next_id;
            out.push_back(std::move(copy));
        }
    }
    return out;
}

std::vector<CheckinRecord> filter_california(const std::vector<CheckinRecord>& records) {
    std::vector<CheckinRecord> out;
    for (const auto& r : records)
        if (r.lat >= 32.5 && r.lat <= 42.0 && r.lon >= -124.5 && r.lon <= -114.1) out.push_back(r);
    return out;
}

// ---- plaintext baseline ---------------------------------------------------

void PlaintextIndex::apply(Op op, const std::string& w, std::uint64_t id) { index_[w].push_back({id, op}); }

std::set<std::uint64_t> PlaintextIndex::query(std::string_view prefix) const {
    std::set<std::uint64_t> ids;
    last_visited_ = 0;
    for (auto it = index_.lower_bound(prefix); it != index_.end() && it->first.starts_with(prefix); ++it) {
        ++last_visited_;
        std::map<std::uint64_t, Op> last;
        for (const auto& ref : it->second) last[ref.id] = ref.op;
        for (const auto& [id, op] : last)
            if (op == Op::Add) ids.insert(id);
    }
    return ids;
}

std::size_t PlaintextIndex::reply_bytes(std::string_view prefix) const {
    std::size_t bytes = 4;
    for (auto it = index_.lower_bound(prefix); it != index_.end() && it->first.starts_with(prefix); ++it)
        bytes += 4 + it->first.size() + 4 + it->second.size() * kValBytes;
    return bytes;
}

// ---- encrypted index ------------------------------------------------------

EncryptedIndex::EncryptedIndex(RandomSource& rng, const EngineParams& params, std::chrono::milliseconds latency)
    : client_(ClientState::setup(rng, params)), channel_(dispatcher_), session_(channel_, latency) {}

BuildStats build_index(const std::vector<CheckinRecord>& records, std::size_t precision, EncryptedIndex& engine,
                       PlaintextIndex* baseline) {
    auto t0 = Clock::now();
    for (const auto& r : records) {
        std::string w = dggs::geohash_encode(r.point(), precision).code;
        engine.update(Op::Add, w, r.location_id);
        if (baseline) baseline->apply(Op::Add, w, r.location_id);
    }
    BuildStats s;
    s.updates = records.size();
    s.distinct_keys = engine.client().distinct_keys();
    s.seconds = elapsed_ms(t0) / 1000.0;
    return s;
}

QueryOutcome run_prefix_query(EncryptedIndex& engine, const std::string& prefix) {
    auto before = engine.session().meter();
    QueryOutcome q;
    q.prefix = prefix;
    SearchResult raw;
    auto t0 = Clock::now();
    q.ids = engine.session().search(engine.client(), prefix, &raw);
    q.millis = elapsed_ms(t0);
    const auto& after = engine.session().meter();
    q.bytes_sent = after.sent_payload - before.sent_payload;
    q.bytes_received = after.received_payload - before.received_payload;
    q.rounds = after.rounds - before.rounds;
    q.tokens = engine.client().distinct_keys();
    q.matched_updates = raw.total_vals();
    return q;
}

QueryOutcome run_query(EncryptedIndex& engine, const dggs::GeoPoint& center, double range_m) {
    std::size_t len = dggs::range_to_prefix_len(range_m);
    return run_prefix_query(engine, dggs::geohash_encode(center, len).code);
}

// ---- experiment grid ------------------------------------------------------

BenchReport bench_suite(const BenchConfig& cfg, std::ostream* progress) {
    BenchReport report;
    auto log = [&](const std::string& msg) {
        if (progress) *progress << msg << std::endl;
    };
    auto has = [&](const char* e) { return cfg.experiments.count(e) > 0; };
    auto prefix_for = [&](const std::vector<CheckinRecord>& recs, double range_m) {
        return dggs::geohash_encode(densest_point(recs, cfg.precision), dggs::range_to_prefix_len(range_m)).code;
    };

    if (has("scale") || has("update")) {
        // Query centre fixed from the largest set so every size asks the same question.
        auto largest = dataset(cfg, *std::max_element(cfg.db_sizes.begin(), cfg.db_sizes.end()));
        auto smallest = dataset(cfg, *std::min_element(cfg.db_sizes.begin(), cfg.db_sizes.end()));
        std::string prefix = prefix_for(largest, cfg.default_range_m);
        for (std::size_t n : cfg.db_sizes) {
            auto recs = scale_records(smallest, largest, prefix, cfg.precision, n);
            log("scale: |DB| = " + std::to_string(n));
            auto s = build_scenario(recs, cfg, cfg.default_f, cfg.default_deletion_pct, prefix);
            if (has("scale")) search_rows(report, "scale", s, cfg, cfg.default_deletion_pct, cfg.default_f);
            if (has("update")) {
                const std::size_t probes = 200;
                auto before = s.engine->session().meter();
                auto t0 = Clock::now();
                for (std::size_t i = 0; i < probes; ++i) {
                    const auto& r = recs[i % recs.size()];
                    s.engine->update(Op::Add, dggs::geohash_encode(r.point(), cfg.precision).code,
                                     1'000'000'000ULL + i);
                }
                double us = elapsed_ms(t0) * 1000.0 / probes;
                const auto& after = s.engine->session().meter();
                BenchRow r;
                r.experiment = "update";
                r.scheme = "gridse";
                r.db_size = s.total_updates;
                r.f = cfg.default_f;
                r.update_us = us;
                r.bytes_sent = (after.sent_payload - before.sent_payload) / probes;
                r.bytes_received = (after.received_payload - before.received_payload) / probes;
                r.distinct_keys = s.engine->client().distinct_keys();
                report.rows.push_back(r);
            }
        }
    }

    std::vector<CheckinRecord> base;
    if (has("result_size") || has("deletion") || has("fbits") || has("wan")) base = dataset(cfg, cfg.base_db_size);

    if (has("result_size")) {
        // Keys must be at least as long as the longest query prefix.
        BenchConfig fine = cfg;
        std::size_t shortest = dggs::kGeohashMaxLen;
        for (double range : cfg.ranges_m) {
            fine.precision = std::max(fine.precision, dggs::range_to_prefix_len(range));
            shortest = std::min(shortest, dggs::range_to_prefix_len(range));
        }
        fine.synthetic.jitter_m = cfg.result_size_jitter_m;
        const auto& scattered = cfg.input ? base : dataset(fine, cfg.base_db_size);
        auto center = densest_chain(scattered, shortest, fine.precision);
        for (double range : cfg.ranges_m) {
            std::string prefix = dggs::geohash_encode(center, dggs::range_to_prefix_len(range)).code;
            log("result_size: range " + num(range) + " m, prefix " + prefix);
            auto s = build_scenario(scattered, fine, cfg.default_f, cfg.default_deletion_pct, prefix);
            search_rows(report, "result_size", s, cfg, cfg.default_deletion_pct, cfg.default_f);
        }
    }
    if (has("deletion")) {
        std::string prefix = prefix_for(base, cfg.default_range_m);
        std::vector<Scenario> ss;
        for (double pct : cfg.deletion_pcts) {
            log("deletion: " + num(pct) + "%");
            ss.push_back(build_scenario(base, cfg, cfg.default_f, pct, prefix));
        }
        interleaved_rows(report, "deletion", ss, cfg, cfg.deletion_pcts,
                         std::vector<std::size_t>(ss.size(), cfg.default_f));
    }
    if (has("fbits")) {
        std::string prefix = prefix_for(base, cfg.default_range_m);
        std::vector<Scenario> ss;
        for (std::size_t f : cfg.f_bits) {
            log("fbits: f = " + std::to_string(f));
            ss.push_back(build_scenario(base, cfg, f, cfg.default_deletion_pct, prefix));
        }
        interleaved_rows(report, "fbits", ss, cfg, std::vector<double>(ss.size(), cfg.default_deletion_pct), cfg.f_bits);
    }
    if (has("wan")) {
        std::string prefix = prefix_for(base, cfg.default_range_m);
        log("wan: " + std::to_string(cfg.wan_latency.count()) + " ms per round trip");
        auto s = build_scenario(base, cfg, cfg.default_f, cfg.default_deletion_pct, prefix, cfg.wan_latency);
        search_rows(report, "wan", s, cfg, cfg.default_deletion_pct, cfg.default_f);
    }
    return report;
}

// ---- report writers -------------------------------------------------------

void write_csv(const BenchReport& report, std::ostream& out) {
    out << "experiment,scheme,db_size,result_size,deletion_pct,f,prefix_len,search_ms,search_ms_mean,update_us,"
           "bytes_sent,bytes_received,distinct_keys,matched_updates,oracle_match\n";
    for (const auto& r : report.rows) {
        out << r.experiment << ',' << r.scheme << ',' << r.db_size << ',' << r.result_size << ',' << r.deletion_pct
            << ',' << r.f << ',' << r.prefix_len << ',' << r.search_ms << ',' << r.search_ms_mean << ',' << r.update_us
            << ',' << r.bytes_sent << ',' << r.bytes_received << ',' << r.distinct_keys << ',' << r.matched_updates
            << ',' << (r.oracle_match ? "true" : "false") << '\n';
    }
}

void write_json(const BenchReport& report, std::ostream& out) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"experiment", r.experiment},
                        {"scheme", r.scheme},
                        {"db_size", r.db_size},
                        {"result_size", r.result_size},
                        {"deletion_pct", r.deletion_pct},
                        {"f", r.f},
                        {"prefix_len", r.prefix_len},
                        {"search_ms", r.search_ms},
                        {"search_ms_mean", r.search_ms_mean},
                        {"update_us", r.update_us},
                        {"bytes_sent", r.bytes_sent},
                        {"bytes_received", r.bytes_received},
                        {"distinct_keys", r.distinct_keys},
                        {"matched_updates", r.matched_updates},
                        {"oracle_match", r.oracle_match}});
    }
    out << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace gridse::bench
