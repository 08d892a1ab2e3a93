#include "gridse/engine.hpp"

#include <algorithm>
#include <unordered_set>

#include "byte_io.hpp"
#include "gridse/errors.hpp"

namespace gridse {

namespace {

constexpr std::uint8_t kClientMagic[4] = {'G', 'S', 'E', 'C'};
constexpr std::uint8_t kServerMagic[4] = {'G', 'S', 'E', 'S'};
constexpr std::uint8_t kSnapshotVersion = 1;

void check_magic(detail::Reader& r, const std::uint8_t (&magic)[4], const char* what) {
    auto got = r.bytes(4);
    if (!std::equal(got.begin(), got.end(), std::begin(magic))) throw DecodeError(std::string("not a ") + what);
    if (auto v = r.u8(); v != kSnapshotVersion)
        throw DecodeError(std::string(what) + ": unsupported version " + std::to_string(v));
}

// Last operation wins, in list (counter) order.
void resolve_into(std::vector<BlockRef> refs, std::vector<std::uint64_t>& live) {
    std::stable_sort(refs.begin(), refs.end(), [](const BlockRef& a, const BlockRef& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < refs.size(); ++i)
        if ((i + 1 == refs.size() || refs[i + 1].id != refs[i].id) && refs[i].op == Op::Add) live.push_back(refs[i].id);
}

std::set<std::uint64_t> to_set(std::vector<std::uint64_t>& ids) {
    std::sort(ids.begin(), ids.end());
    return {ids.begin(), ids.end()};
}

}  // namespace

std::size_t SearchResult::total_vals() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.vals.size();
    return n;
}

// ---- client ---------------------------------------------------------------

ClientState ClientState::setup(RandomSource& rng, const EngineParams& params) {
    Key master = rng.key();
    auto keys = sp2e::keygen(rng, params.max_len, params.f_bits, Alphabet(params.alphabet));
    return from_keys(master, std::move(keys));
}

ClientState ClientState::from_keys(const Key& master, sp2e::Keys keys) {
    ClientState s;
    s.master_ = master;
    s.master_prf_ = KeyedPrf(master);
    s.keys_ = std::move(keys);
    s.keys_.prepare();
    return s;
}

// First 9 bytes of G(K, BE64(seq) || BE64(counter) || BE64(epoch)).
EncryptedVal ClientState::value_mask(std::uint64_t seq, std::uint64_t counter, std::uint64_t epoch) const {
    std::uint8_t in[24];
    put_be64(in, seq);
    put_be64(in + 8, counter);
    put_be64(in + 16, epoch);
    BitBlock full = prf_g(master_prf_, master_, PrfDomain::ValueMask, in);
    EncryptedVal mask;
    std::copy_n(full.bytes().begin(), kValBytes, mask.begin());
    return mask;
}

EncryptedVal ClientState::seal(std::uint64_t seq, std::uint64_t counter, std::uint64_t epoch, BlockRef ref) const {
    EncryptedVal v = value_mask(seq, counter, epoch);
    std::uint8_t plain[kValBytes];
    put_be64(plain, ref.id);
    plain[8] = static_cast<std::uint8_t>(ref.op);
    for (std::size_t i = 0; i < kValBytes; ++i) v[i] ^= plain[i];
    return v;
}

UpdateMsg ClientState::update(Op op, std::string_view w, std::uint64_t id) {
    sp2e::validate_keyword(keys_, w);
    std::string key(w);
    auto it = by_key_.find(key);
    bool fresh = it == by_key_.end();
    if (fresh) {
        it = by_key_.emplace(key, entries_.size()).first;
        entries_.push_back({key, 0, 0});
    }
    KeyEntry& entry = entries_[it->second];
    ++entry.update_count;
    const std::uint64_t seq = it->second + 1;

    auto [addr, delta] = sp2e::enc(keys_, sp2e::pre_enc(keys_, seq, w));
    if (fresh) deltas_.push_back(delta);

    return {addr, seal(seq, entry.update_count, entry.epoch, {id, op})};
}

std::vector<sp2e::PrefixToken> ClientState::search_tokens(std::string_view prefix) const {
    sp2e::validate_keyword(keys_, prefix);
    std::vector<sp2e::PrefixToken> tokens;
    tokens.reserve(deltas_.size());
    for (std::size_t i = 0; i < deltas_.size(); ++i) tokens.push_back(sp2e::tkgen(keys_, deltas_[i], i + 1, prefix));
    return tokens;
}

std::vector<BlockRef> ClientState::decrypt_list(std::uint64_t seq, const std::vector<EncryptedVal>& vals) const {
    if (seq == 0 || seq > entries_.size()) throw DecodeError("result refers to unknown seq " + std::to_string(seq));
    const KeyEntry& entry = entries_[seq - 1];
    std::vector<BlockRef> refs;
    refs.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        EncryptedVal plain = value_mask(seq, i + 1, entry.epoch);
        for (std::size_t b = 0; b < kValBytes; ++b) plain[b] ^= vals[i][b];
        std::uint8_t op = plain[8];
        if (op != static_cast<std::uint8_t>(Op::Add) && op != static_cast<std::uint8_t>(Op::Del))
            throw DecodeError("decrypted value carries invalid op byte");
        refs.push_back({get_be64(plain.data()), static_cast<Op>(op)});
    }
    return refs;
}

std::set<std::uint64_t> ClientState::decrypt_results(const SearchResult& result, std::string_view prefix) const {
    std::vector<std::uint64_t> ids;
    for (const auto& e : result.entries) {
        if (e.seq == 0 || e.seq > entries_.size())
            throw DecodeError("result refers to unknown seq " + std::to_string(e.seq));
        // False accepts of the 2^-f indicator are dropped here.
        if (!entries_[e.seq - 1].key.starts_with(prefix)) continue;
        resolve_into(decrypt_list(e.seq, e.vals), ids);
    }
    return to_set(ids);
}

std::vector<std::uint64_t> ClientState::live_ids(std::string_view w, const SearchResult& result) const {
    std::uint64_t seq = seq_of(w);
    if (seq == 0) throw KeyError("unknown index-key '" + std::string(w) + "'");
    std::vector<std::uint64_t> ids;
    for (const auto& e : result.entries)
        if (e.seq == seq) resolve_into(decrypt_list(e.seq, e.vals), ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

CleanupMsg ClientState::cleanup(std::string_view w, const std::vector<std::uint64_t>& surviving_ids) {
    std::uint64_t seq = seq_of(w);
    if (seq == 0) throw KeyError("cannot clean up unknown index-key '" + std::string(w) + "'");
    KeyEntry& entry = entries_[seq - 1];

    std::vector<std::uint64_t> ids;
    std::unordered_set<std::uint64_t> seen;
    for (auto id : surviving_ids)
        if (seen.insert(id).second) ids.push_back(id);

    ++entry.epoch;
    entry.update_count = ids.size();

    CleanupMsg msg;
    msg.addr = address_of(w);
    msg.vals.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) msg.vals.push_back(seal(seq, i + 1, entry.epoch, {ids[i], Op::Add}));
    return msg;
}

std::uint64_t ClientState::seq_of(std::string_view w) const {
    auto it = by_key_.find(std::string(w));
    return it == by_key_.end() ? 0 : it->second + 1;
}

BitBlock ClientState::address_of(std::string_view w) const {
    std::uint64_t seq = seq_of(w);
    if (seq == 0) throw KeyError("unknown index-key '" + std::string(w) + "'");
    return sp2e::enc(keys_, sp2e::pre_enc(keys_, seq, w)).ct;
}

Bytes ClientState::snapshot() const {
    Bytes out;
    detail::Writer w(out);
    w.raw(kClientMagic);
    w.u8(kSnapshotVersion);
    w.raw(master_);
    Bytes keyfile = sp2e::serialize(keys_);
    w.u32(static_cast<std::uint32_t>(keyfile.size()));
    w.raw(keyfile);
    w.u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        w.u16(static_cast<std::uint16_t>(e.key.size()));
        w.str(e.key);
        w.u64(e.update_count);
        w.u64(e.epoch);
    }
    for (const auto& d : deltas_) w.raw(d.span());
    return out;
}

ClientState ClientState::restore(std::span<const std::uint8_t> bytes) {
    detail::Reader r(bytes, "client snapshot");
    check_magic(r, kClientMagic, "client snapshot");
    ClientState s;
    r.into(s.master_);
    s.master_prf_ = KeyedPrf(s.master_);
    std::uint32_t keylen = r.u32();
    s.keys_ = sp2e::deserialize(r.bytes(keylen));
    std::uint32_t count = r.u32();
    s.entries_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        KeyEntry e;
        e.key = r.str(r.u16());
        e.update_count = r.u64();
        e.epoch = r.u64();
        if (!s.by_key_.emplace(e.key, s.entries_.size()).second)
            throw DecodeError("client snapshot: duplicate index-key");
        s.entries_.push_back(std::move(e));
    }
    for (std::uint32_t i = 0; i < count; ++i) s.deltas_.push_back(r.block());
    r.expect_end();
    return s;
}

// ---- server ---------------------------------------------------------------

void ServerState::apply_update(const UpdateMsg& msg) {
    auto [it, inserted] = index_.try_emplace(msg.addr, entries_.size());
    if (inserted) entries_.emplace_back(msg.addr, std::vector<EncryptedVal>{});
    entries_[it->second].second.push_back(msg.val);
}

SearchResult ServerState::search(std::span<const sp2e::PrefixToken> tokens, std::size_t f,
                                 std::size_t* evaluations) const {
    if (tokens.size() != entries_.size()) throw SizeMismatch(tokens.size(), entries_.size());
    SearchResult r;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (sp2e::pref_dec(tokens[i], entries_[i].first, f)) r.entries.push_back({i + 1, entries_[i].second});
    if (evaluations) *evaluations = entries_.size();
    return r;
}

void ServerState::replace(const CleanupMsg& msg) {
    auto it = index_.find(msg.addr);
    if (it == index_.end()) throw KeyError("clean-up for an address the index does not hold");
    entries_[it->second].second = msg.vals;
}

std::size_t ServerState::total_vals() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
}

const std::vector<EncryptedVal>* ServerState::find(const BitBlock& addr) const {
    auto it = index_.find(addr);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
}

Bytes ServerState::snapshot() const {
    Bytes out;
    detail::Writer w(out);
    w.raw(kServerMagic);
    w.u8(kSnapshotVersion);
    w.u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [addr, vals] : entries_) {
        w.raw(addr.span());
        w.u32(static_cast<std::uint32_t>(vals.size()));
        for (const auto& v : vals) w.raw(v);
    }
    return out;
}

ServerState ServerState::restore(std::span<const std::uint8_t> bytes) {
    detail::Reader r(bytes, "server snapshot");
    check_magic(r, kServerMagic, "server snapshot");
    ServerState s;
    std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        BitBlock addr = r.block();
        std::uint32_t n = r.u32();
        if (n > r.remaining() / kValBytes) throw DecodeError("server snapshot: truncated");
        std::vector<EncryptedVal> vals(n);
        for (auto& v : vals) r.into(v);
        if (!s.index_.emplace(addr, s.entries_.size()).second)
            throw DecodeError("server snapshot: duplicate address");
        s.entries_.emplace_back(addr, std::move(vals));
    }
    r.expect_end();
    return s;
}

std::pair<ClientState, ServerState> setup(RandomSource& rng, const EngineParams& params) {
    return {ClientState::setup(rng, params), ServerState{}};
}

}  // namespace gridse
