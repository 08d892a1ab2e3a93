// gridse: ingest check-ins, build an encrypted geohash index, query it, run
// the benchmark grid, serve the index over TCP, inspect snapshot files.

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridse/bench.hpp"
#include "gridse/errors.hpp"
#include "gridse/net.hpp"

using namespace gridse;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kFormat = 2, kProtocol = 3 };

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IOError("short write to " + path.string());
}

void check_out(const std::string& out) {
    if (out != "csv" && out != "json") throw ParameterError("--out must be csv or json");
}

// Shared record source for ingest and build.
struct Source {
    std::string path;
    std::string format = "tsv";
    std::size_t synthetic = 0;
    std::size_t db_size = 0;
    std::uint64_t seed = 1;
    bool california = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("input", path, "check-in file (tab-separated Gowalla layout, or CSV with --format csv)");
        cmd->add_option("--format", format, "tsv|csv")->capture_default_str();
        cmd->add_option("--synthetic", synthetic, "generate N synthetic check-ins instead of reading a file");
        cmd->add_option("--db-size", db_size, "trim or duplicate the records to this many");
        cmd->add_option("--seed", seed, "seed for synthetic data, duplication and deletions")->capture_default_str();
        cmd->add_flag("--california", california, "keep only records inside the California bounding box");
    }

    std::vector<bench::CheckinRecord> load(bench::IngestReport* report = nullptr) const {
        std::vector<bench::CheckinRecord> recs;
        if (synthetic > 0) {
            recs = bench::synthetic(synthetic, seed);
        } else if (!path.empty()) {
            auto rep = bench::ingest(path, bench::parse_format(format));
            recs = std::move(rep.records);
            if (report) *report = std::move(rep);
        } else {
            throw ParameterError("give an input file or --synthetic N");
        }
        if (california) recs = bench::filter_california(recs);
        if (db_size > 0) {
            if (recs.size() >= db_size) recs.resize(db_size);
            else recs = bench::duplicate_to(recs, db_size, seed);
        }
        return recs;
    }
};

// ---- ingest ---------------------------------------------------------------

int cmd_ingest(const Source& src, const std::string& out, const std::string& save) {
    bench::IngestReport rep;
    auto recs = src.load(&rep);
    if (!save.empty()) {
        std::ofstream f(save);
        if (!f) throw IOError("cannot write " + save);
        f.precision(9);
        for (const auto& r : recs)
            f << r.user_id << '\t' << r.timestamp << '\t' << r.lat << '\t' << r.lon << '\t' << r.location_id << '\n';
    }
    std::set<std::int64_t> users;
    for (const auto& r : recs) users.insert(r.user_id);
    if (out == "json") {
        std::cout << json{{"lines", rep.lines},
                          {"records", recs.size()},
                          {"users", users.size()},
                          {"malformed", rep.malformed},
                          {"invalid_coords", rep.invalid_coords}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << "lines,records,users,malformed,invalid_coords\n"
                  << rep.lines << ',' << recs.size() << ',' << users.size() << ',' << rep.malformed << ','
                  << rep.invalid_coords << '\n';
    }
    return kOk;
}

// ---- build ----------------------------------------------------------------

struct BuildArgs {
    std::size_t precision = 7;
    std::size_t f_bits = 20;
    double deletions_pct = 0;
    std::string client = "client.gse";
    std::string server = "server.gse";
    std::string connect;
    bool key_seed = false;
};

int cmd_build(const Source& src, const BuildArgs& a, const std::string& out) {
    auto recs = src.load();
    EngineParams params;
    params.f_bits = a.f_bits;

    std::unique_ptr<RandomSource> rng;
    if (a.key_seed) rng = std::make_unique<SeededRandom>(src.seed);
    else rng = std::make_unique<SystemRandom>();

    ClientState client = fs::exists(a.client) ? ClientState::restore(read_file(a.client)) : ClientState::setup(*rng, params);
    net::Dispatcher local(fs::exists(a.server) && a.connect.empty() ? ServerState::restore(read_file(a.server))
                                                                    : ServerState{});
    std::unique_ptr<net::Channel> channel;
    if (a.connect.empty()) channel = std::make_unique<net::LoopbackChannel>(local);
    else channel = std::make_unique<net::TcpChannel>(a.connect);
    net::Session session(*channel);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, std::uint64_t>> added;
    for (const auto& r : recs) {
        auto w = dggs::geohash_encode(r.point(), a.precision).code;
        session.update(client, Op::Add, w, r.location_id);
        added.emplace_back(std::move(w), r.location_id);
    }
    std::mt19937_64 pick(src.seed);
    std::shuffle(added.begin(), added.end(), pick);
    auto n_del = static_cast<std::size_t>(static_cast<double>(added.size()) * a.deletions_pct / 100.0);
    for (std::size_t i = 0; i < n_del; ++i) session.update(client, Op::Del, added[i].first, added[i].second);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_file(a.client, client.snapshot());
    if (a.connect.empty()) write_file(a.server, local.snapshot_state().snapshot());

    const auto& m = session.meter();
    std::size_t updates = recs.size() + n_del;
    if (out == "json") {
        std::cout << json{{"updates", updates},
                          {"deletions", n_del},
                          {"distinct_keys", client.distinct_keys()},
                          {"precision", a.precision},
                          {"f", client.f_bits()},
                          {"seconds", secs},
                          {"bytes_sent", m.sent_payload}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << "updates,deletions,distinct_keys,precision,f,seconds,bytes_sent\n"
                  << updates << ',' << n_del << ',' << client.distinct_keys() << ',' << a.precision << ','
                  << client.f_bits() << ',' << secs << ',' << m.sent_payload << '\n';
    }
    return kOk;
}

// ---- query ----------------------------------------------------------------

struct QueryArgs {
    double lat = 0, lon = 0;
    bool have_point = false;
    double range_m = 5000;
    std::string prefix;
    std::string client = "client.gse";
    std::string server = "server.gse";
    std::string connect;
    int latency_ms = 0;
    bool ids = false;
};

int cmd_query(const QueryArgs& a, const std::string& out) {
    auto client = ClientState::restore(read_file(a.client));
    std::string prefix = a.prefix;
    if (prefix.empty()) {
        if (!a.have_point) throw ParameterError("give --lat/--lon or --prefix");
        std::size_t len = dggs::range_to_prefix_len(a.range_m);
        if (!client.entries().empty() && len > client.entries().front().key.size())
            throw ParameterError("range " + std::to_string(std::llround(a.range_m)) + " m needs a " + std::to_string(len) +
                                 "-character prefix but the index holds " +
                                 std::to_string(client.entries().front().key.size()) + "-character cells");
        prefix = dggs::geohash_encode({a.lat, a.lon}, len).code;
    }

    std::unique_ptr<net::Dispatcher> local;
    std::unique_ptr<net::Channel> channel;
    if (a.connect.empty()) {
        local = std::make_unique<net::Dispatcher>(ServerState::restore(read_file(a.server)));
        channel = std::make_unique<net::LoopbackChannel>(*local);
    } else {
        channel = std::make_unique<net::TcpChannel>(a.connect);
    }
    net::Session session(*channel, std::chrono::milliseconds(a.latency_ms));

    SearchResult raw;
    auto t0 = std::chrono::steady_clock::now();
    auto ids = session.search(client, prefix, &raw);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = session.meter();

    if (out == "json") {
        json j{{"prefix", prefix},
               {"result_size", ids.size()},
               {"search_ms", ms},
               {"tokens", client.distinct_keys()},
               {"matched_updates", raw.total_vals()},
               {"bytes_sent", m.sent_payload},
               {"bytes_received", m.received_payload},
               {"rounds", m.rounds}};
        if (a.ids) j["ids"] = ids;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "prefix,result_size,search_ms,tokens,matched_updates,bytes_sent,bytes_received,rounds\n"
                  << prefix << ',' << ids.size() << ',' << ms << ',' << client.distinct_keys() << ','
                  << raw.total_vals() << ',' << m.sent_payload << ',' << m.received_payload << ',' << m.rounds
                  << '\n';
        if (a.ids)
            for (auto id : ids) std::cout << id << '\n';
    }
    return kOk;
}

// ---- serve ----------------------------------------------------------------

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const std::string& server_file, const std::string& bind, const std::string& save, int latency_ms) {
    net::Dispatcher d(fs::exists(server_file) ? ServerState::restore(read_file(server_file)) : ServerState{});
    net::TcpServer srv(d, net::bind_address_from_env(bind), std::chrono::milliseconds(latency_ms));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    srv.start();
    std::cerr << "listening on " << srv.endpoint() << " (" << d.index_size() << " entries)" << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    srv.stop();
    if (!save.empty()) write_file(save, d.snapshot_state().snapshot());
    return kOk;
}

// ---- snapshot -------------------------------------------------------------

int cmd_snapshot(const std::string& file, const std::string& out) {
    auto data = read_file(file);
    if (data.size() < 4) throw DecodeError(file + ": too short for a snapshot");
    std::string magic(data.begin(), data.begin() + 4);
    json j;
    if (magic == "GSEC") {
        auto c = ClientState::restore(data);
        std::uint64_t updates = 0, cleanups = 0;
        for (const auto& e : c.entries()) updates += e.update_count, cleanups += e.epoch;
        j = {{"kind", "client"},     {"distinct_keys", c.distinct_keys()}, {"f", c.f_bits()},
             {"t", c.keys().t},      {"live_updates", updates},            {"cleanups", cleanups}};
    } else if (magic == "GSES") {
        auto s = ServerState::restore(data);
        j = {{"kind", "server"}, {"entries", s.size()}, {"encrypted_values", s.total_vals()}};
    } else {
        throw DecodeError(file + ": not a client or server snapshot");
    }
    if (out == "json") {
        std::cout << j.dump(2) << '\n';
    } else {
        std::string head, row;
        for (auto it = j.begin(); it != j.end(); ++it) {
            head += (head.empty() ? "" : ",") + it.key();
            row += (row.empty() ? "" : ",") + (it->is_string() ? it->get<std::string>() : it->dump());
        }
        std::cout << head << '\n' << row << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Encrypted geohash prefix search"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out = "csv";
    app.add_option("--out", out, "report format: csv|json")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "parse check-ins and report counts");
    Source ingest_src;
    ingest_src.add_to(ingest);
    std::string ingest_save;
    ingest->add_option("--save", ingest_save, "write the kept records as tab-separated check-ins");

    auto* build = app.add_subcommand("build", "encrypt records into the index (appends to existing state)");
    Source build_src;
    BuildArgs ba;
    build_src.add_to(build);
    build->add_option("--precision", ba.precision, "geohash cell length")->capture_default_str();
    build->add_option("--f-bits", ba.f_bits, "indicator width for a new client")->capture_default_str();
    build->add_option("--deletions-pct", ba.deletions_pct, "delete this share of the inserted records afterwards");
    build->add_option("--client", ba.client, "client state file")->capture_default_str();
    build->add_option("--server", ba.server, "server state file (ignored with --connect)")->capture_default_str();
    build->add_option("--connect", ba.connect, "send updates to a running server at host:port");
    build->add_flag("--key-seed", ba.key_seed, "derive keys from --seed (reproducible, insecure)");

    auto* query = app.add_subcommand("query", "run one geographic range query");
    QueryArgs qa;
    auto* lat = query->add_option("--lat", qa.lat);
    auto* lon = query->add_option("--lon", qa.lon);
    lat->needs(lon);
    lon->needs(lat);
    query->add_option("--range-m", qa.range_m, "query radius in meters")->capture_default_str();
    query->add_option("--prefix", qa.prefix, "query a cell prefix directly");
    query->add_option("--client", qa.client)->capture_default_str();
    query->add_option("--server", qa.server)->capture_default_str();
    query->add_option("--connect", qa.connect, "host:port of a running server");
    query->add_option("--inject-latency-ms", qa.latency_ms, "extra delay per round trip");
    query->add_flag("--ids", qa.ids, "list the matching ids");

    auto* bench_cmd = app.add_subcommand("bench", "run the benchmark grid against the plaintext baseline");
    bench::BenchConfig cfg;
    std::vector<std::string> experiments;
    std::string bench_input, bench_format = "tsv";
    std::size_t synthetic_venues = cfg.synthetic.venues;
    int wan_ms = static_cast<int>(cfg.wan_latency.count());
    bench_cmd->add_option("--db-size", cfg.db_sizes, "database sizes for the scale experiment")->delimiter(',');
    bench_cmd->add_option("--base-size", cfg.base_db_size, "database size for the other experiments")
        ->capture_default_str();
    bench_cmd->add_option("--range-m", cfg.ranges_m, "query radii in meters")->delimiter(',');
    bench_cmd->add_option("--deletions-pct", cfg.deletion_pcts, "deletion shares")->delimiter(',');
    bench_cmd->add_option("--f-bits", cfg.f_bits, "indicator widths")->delimiter(',');
    bench_cmd->add_option("--precision", cfg.precision, "geohash cell length")->capture_default_str();
    bench_cmd->add_option("--reps", cfg.reps, "timed repetitions per cell")->capture_default_str();
    bench_cmd->add_option("--seed", cfg.seed)->capture_default_str();
    bench_cmd->add_option("--inject-latency-ms", wan_ms, "round-trip delay for the wan experiment")
        ->capture_default_str();
    bench_cmd->add_option("--experiments", experiments, "scale,result_size,deletion,fbits,update,wan")
        ->delimiter(',');
    bench_cmd->add_option("--input", bench_input, "check-in file instead of synthetic data");
    bench_cmd->add_option("--format", bench_format, "tsv|csv")->capture_default_str();
    bench_cmd->add_option("--venues", synthetic_venues, "venue pool size of the synthetic generator")
        ->capture_default_str();
    bench_cmd->add_option("--result-jitter-m", cfg.result_size_jitter_m,
                          "check-in scatter around venues in the result_size experiment")
        ->capture_default_str();
    bool quiet = false;
    bench_cmd->add_flag("--quiet", quiet, "no progress on stderr");

    auto* serve = app.add_subcommand("serve", "serve a server state file over TCP");
    std::string serve_file = "server.gse", bind = "127.0.0.1:7878", serve_save;
    int serve_latency = 0;
    serve->add_option("--server", serve_file, "state to load if it exists")->capture_default_str();
    serve->add_option("--bind", bind, "host:port, overridden by GRIDSE_BIND")->capture_default_str();
    serve->add_option("--save", serve_save, "write the state here on SIGINT/SIGTERM");
    serve->add_option("--inject-latency-ms", serve_latency, "delay before every reply");

    auto* snapshot = app.add_subcommand("snapshot", "summarize a client or server state file");
    std::string snap_file;
    snapshot->add_option("file", snap_file)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kOther;
    }

    try {
        check_out(out);
        if (*ingest) return cmd_ingest(ingest_src, out, ingest_save);
        if (*build) return cmd_build(build_src, ba, out);
        if (*query) {
            qa.have_point = lat->count() > 0;
            return cmd_query(qa, out);
        }
        if (*bench_cmd) {
            if (!experiments.empty()) cfg.experiments = {experiments.begin(), experiments.end()};
            if (!bench_input.empty()) cfg.input = bench_input;
            cfg.format = bench::parse_format(bench_format);
            cfg.synthetic.venues = synthetic_venues;
            cfg.wan_latency = std::chrono::milliseconds(wan_ms);
            auto report = bench::bench_suite(cfg, quiet ? nullptr : &std::cerr);
            if (out == "json") bench::write_json(report, std::cout);
            else bench::write_csv(report, std::cout);
            return kOk;
        }
        if (*serve) return cmd_serve(serve_file, bind, serve_save, serve_latency);
        if (*snapshot) return cmd_snapshot(snap_file, out);
    } catch (const FormatError& e) {
        std::cerr << "gridse: " << e.what() << '\n';
        return kFormat;
    } catch (const ProtocolError& e) {
        std::cerr << "gridse: " << e.what() << '\n';
        return kProtocol;
    } catch (const std::exception& e) {
        std::cerr << "gridse: " << e.what() << '\n';
        return kOther;
    }
    return kOther;
}
