#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gridse/bitblock.hpp"
#include "gridse/random.hpp"
#include "gridse/sp2e.hpp"

namespace gridse {

enum class Op : std::uint8_t { Add = 0x01, Del = 0x02 };

constexpr std::size_t kValBytes = 9;  // BE64(id) || op
constexpr std::size_t kUpdateBytes = kBlockBytes + kValBytes;

using EncryptedVal = std::array<std::uint8_t, kValBytes>;

struct BlockRef {
    std::uint64_t id = 0;
    Op op = Op::Add;
    bool operator==(const BlockRef&) const = default;
};

struct UpdateMsg {
    BitBlock addr;
    EncryptedVal val{};
    bool operator==(const UpdateMsg&) const = default;
};

// Server reply to a search: matching entries keyed by their 1-based sequence
// number, in ascending seq order.
struct SearchResult {
    struct Entry {
        std::uint64_t seq = 0;
        std::vector<EncryptedVal> vals;
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;

    std::size_t total_vals() const noexcept;
    bool operator==(const SearchResult&) const = default;
};

// Wholesale replacement of one index entry after a clean-up.
struct CleanupMsg {
    BitBlock addr;
    std::vector<EncryptedVal> vals;
    bool operator==(const CleanupMsg&) const = default;
};

struct EngineParams {
    std::size_t max_len = 12;  // t
    std::size_t f_bits = 20;   // f
    std::string alphabet = "0123456789bcdefghjkmnpqrstuvwxyz";
};

// One distinct index-key known to the client.
struct KeyEntry {
    std::string key;
    std::uint64_t update_count = 0;  // UpdtCnt[w]
    std::uint64_t epoch = 0;         // IncrCnt[w], bumped by every clean-up
    bool operator==(const KeyEntry&) const = default;
};

// Client side of the scheme: master key K, SP2E keys, the insertion-ordered
// update counters and the delta list. Single owner; not safe for concurrent
// mutation.
class ClientState {
public:
    static ClientState setup(RandomSource& rng, const EngineParams& params = {});
    static ClientState from_keys(const Key& master, sp2e::Keys keys);

    // Encrypts one (op, w, id) update. A new w is appended with seq = number
    // of distinct keys; repeats of w reuse its seq and therefore its address.
    UpdateMsg update(Op op, std::string_view w, std::uint64_t id);

    // One token per known index-key, in seq order.
    std::vector<sp2e::PrefixToken> search_tokens(std::string_view prefix) const;

    // Drops false positives, decrypts each list and keeps the ids whose latest
    // operation under some matching key is an add.
    std::set<std::uint64_t> decrypt_results(const SearchResult& result, std::string_view prefix) const;

    // Decrypts the value list stored under `seq` in list order.
    std::vector<BlockRef> decrypt_list(std::uint64_t seq, const std::vector<EncryptedVal>& vals) const;

    // Re-encrypts the surviving ids of w under a fresh epoch and resets its
    // update counter to the survivor count. Throws KeyError for an unknown w.
    CleanupMsg cleanup(std::string_view w, const std::vector<std::uint64_t>& surviving_ids);

    // Ids currently live under exactly w, from a search result that covered it.
    std::vector<std::uint64_t> live_ids(std::string_view w, const SearchResult& result) const;

    std::size_t distinct_keys() const noexcept { return entries_.size(); }
    const std::vector<KeyEntry>& entries() const noexcept { return entries_; }
    const std::vector<BitBlock>& delta_list() const noexcept { return deltas_; }
    // 1-based seq of w, or 0 when unknown.
    std::uint64_t seq_of(std::string_view w) const;
    BitBlock address_of(std::string_view w) const;
    const sp2e::Keys& keys() const noexcept { return keys_; }
    const Key& master_key() const noexcept { return master_; }
    std::size_t f_bits() const noexcept { return keys_.f; }

    // "GSEC" | u8 version | K | BE32 len | key file | BE32 count |
    // count x [BE16 len | key | BE64 counter | BE64 epoch] | count x delta.
    Bytes snapshot() const;
    static ClientState restore(std::span<const std::uint8_t> bytes);

    bool operator==(const ClientState&) const = default;

private:
    ClientState() = default;
    EncryptedVal value_mask(std::uint64_t seq, std::uint64_t counter, std::uint64_t epoch) const;
    EncryptedVal seal(std::uint64_t seq, std::uint64_t counter, std::uint64_t epoch, BlockRef ref) const;

    Key master_{};
    KeyedPrf master_prf_;
    sp2e::Keys keys_;
    std::vector<KeyEntry> entries_;
    std::vector<BitBlock> deltas_;
    std::unordered_map<std::string, std::size_t> by_key_;
};

// Server side: insertion-ordered map addr -> encrypted value list. Plain value
// type; the transport layer adds the readers-writer locking.
class ServerState {
public:
    void apply_update(const UpdateMsg& msg);

    // Throws SizeMismatch when the token count differs from the index size.
    // `evaluations`, when given, receives the number of entries tested.
    SearchResult search(std::span<const sp2e::PrefixToken> tokens, std::size_t f,
                        std::size_t* evaluations = nullptr) const;

    // Throws KeyError when addr is not in the index.
    void replace(const CleanupMsg& msg);

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t total_vals() const noexcept;
    const std::vector<std::pair<BitBlock, std::vector<EncryptedVal>>>& entries() const noexcept { return entries_; }
    const std::vector<EncryptedVal>* find(const BitBlock& addr) const;

    // "GSES" | u8 version | BE32 count | count x [addr | BE32 n | n x val]
    Bytes snapshot() const;
    static ServerState restore(std::span<const std::uint8_t> bytes);

    bool operator==(const ServerState& other) const { return entries_ == other.entries_; }

private:
    std::vector<std::pair<BitBlock, std::vector<EncryptedVal>>> entries_;
    std::unordered_map<BitBlock, std::size_t, BitBlockHash> index_;
};

std::pair<ClientState, ServerState> setup(RandomSource& rng, const EngineParams& params = {});

}  // namespace gridse
