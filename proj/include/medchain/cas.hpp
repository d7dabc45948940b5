#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "medchain/bytes.hpp"
#include "medchain/crypto.hpp"
#include "medchain/digest.hpp"

namespace medchain::cas {

inline constexpr std::size_t kHashTextLength = 46;
inline constexpr std::uint8_t kSha256Code = 0x12;
inline constexpr std::uint8_t kSha256Length = 0x20;

/// SHA-256 multihash (0x12 0x20 || digest) rendered in base58: the 46-character "Qm..." form.
class ContentHash {
public:
    static ContentHash of(ByteView content);
    static ContentHash from_digest(const Digest256& digest);

    /// Throws BadHashLength, NonBase58Character or MalformedHash.
    static ContentHash parse(std::string_view text);

    const std::string& text() const noexcept { return text_; }
    Digest256 digest() const;

    auto operator<=>(const ContentHash&) const = default;

private:
    explicit ContentHash(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

struct NodeId {
    std::uint32_t value = 0;

    auto operator<=>(const NodeId&) const = default;
};

std::string to_string(NodeId id);

/// Ticks charged for a remote fetch: one hop delay drawn uniformly from
/// [min_hop_ticks, max_hop_ticks] plus one tick per started bytes_per_tick.
struct LatencyModel {
    std::uint32_t min_hop_ticks = 5;
    std::uint32_t max_hop_ticks = 15;
    std::uint32_t bytes_per_tick = 4096;
};

/// What the record flows need from a storage backend.
class BlobStore {
public:
    virtual ~BlobStore() = default;
    virtual ContentHash put(NodeId node, ByteView bytes) = 0;
    virtual Bytes get(NodeId node, const ContentHash& hash) = 0;
    /// Simulated transfer time accumulated by get().
    virtual std::uint64_t elapsed_ticks() const = 0;
};

/// Emulated IPFS network: whole-object content addressing, provider sets,
/// online/offline nodes, and replication.
class ContentStore final : public BlobStore {
public:
    explicit ContentStore(std::uint64_t seed = 0, LatencyModel latency = {});

    NodeId add_node(bool online = true);
    void set_online(NodeId node, bool online);
    bool is_online(NodeId node) const;
    std::size_t node_count() const;
    std::vector<NodeId> online_nodes() const;

    ContentHash put(NodeId node, ByteView bytes) override;

    /// Fetches through the network; the fetching node becomes a provider.
    Bytes get(NodeId node, const ContentHash& hash) override;

    /// Exact set of nodes holding a local copy, online or not.
    std::set<NodeId> find_providers(const ContentHash& hash) const;
    bool holds(NodeId node, const ContentHash& hash) const;

    void remove_local(NodeId node, const ContentHash& hash);

    /// Copies the object to seeded-random online nodes until at least `factor` providers exist.
    std::set<NodeId> replicate(const ContentHash& hash, std::size_t factor);

    std::uint64_t elapsed_ticks() const override;

    /// Writes objects/<hash> files and a providers.tsv index (`hash<TAB>node_id`).
    void save(const std::filesystem::path& dir) const;
    /// Loads a directory written by save(); nodes are created as needed.
    void load(const std::filesystem::path& dir);

private:
    struct Node {
        bool online = true;
        std::set<ContentHash> local;
    };

    Node& node_at(NodeId id);
    const Node& node_at(NodeId id) const;
    void add_provider(NodeId node, const ContentHash& hash);

    mutable std::shared_mutex mutex_;
    std::vector<Node> nodes_;
    std::map<ContentHash, Bytes> objects_;
    std::map<ContentHash, std::set<NodeId>> providers_;
    std::mt19937_64 placement_rng_;
    std::mt19937_64 latency_rng_;
    LatencyModel latency_;
    std::uint64_t ticks_ = 0;
};

/// Central key-value stand-in for a hosted database. Every get costs a fixed
/// round trip; availability does not depend on node state.
class CentralStore final : public BlobStore {
public:
    explicit CentralStore(std::uint32_t round_trip_ticks = 8, std::uint32_t bytes_per_tick = 4096)
        : round_trip_(round_trip_ticks), bytes_per_tick_(bytes_per_tick) {}

    ContentHash put(NodeId node, ByteView bytes) override;
    Bytes get(NodeId node, const ContentHash& hash) override;
    std::uint64_t elapsed_ticks() const override { return ticks_; }

private:
    std::map<ContentHash, Bytes> objects_;
    std::uint32_t round_trip_;
    std::uint32_t bytes_per_tick_;
    std::uint64_t ticks_ = 0;
};

/// Mutable signed pointer from a key-derived name to a content hash.
struct IpnsRecord {
    std::string name;
    ContentHash value;
    std::uint64_t sequence = 0;
    crypto::PublicKey publisher;
    crypto::Signature signature;
};

/// Name of a key: the multihash of its public key bytes (46 characters).
std::string ipns_name_of(const crypto::PublicKey& key);

IpnsRecord make_ipns_record(const crypto::KeyPair& kp, const ContentHash& value, std::uint64_t sequence);

class NameRegistry {
public:
    /// Throws BadSignature (bad signature or name not derived from publisher)
    /// or StaleSequence (sequence not above the current one).
    void publish(const IpnsRecord& record);

    /// Signs and publishes `value` at the next sequence number.
    IpnsRecord ipns_publish(const crypto::KeyPair& kp, const ContentHash& value);

    /// Throws UnknownName.
    ContentHash resolve(std::string_view name) const;
    std::optional<std::uint64_t> sequence(std::string_view name) const;

private:
    std::map<std::string, IpnsRecord, std::less<>> records_;
};

}  // namespace medchain::cas
