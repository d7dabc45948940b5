#include "medchain/cas.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "medchain/base58.hpp"

namespace medchain::cas {

ContentHash ContentHash::from_digest(const Digest256& digest) {
    Bytes mh{kSha256Code, kSha256Length};
    mh.insert(mh.end(), digest.begin(), digest.end());
    return ContentHash(base58::encode(mh));
}

ContentHash ContentHash::of(ByteView content) { return from_digest(sha256(content)); }

ContentHash ContentHash::parse(std::string_view text) {
    if (text.size() != kHashTextLength) throw Error(Errc::BadHashLength, std::string(text));
    auto decoded = base58::decode(text);
    if (!decoded) throw Error(Errc::NonBase58Character, std::string(text));
    if (decoded->size() != 34 || (*decoded)[0] != kSha256Code || (*decoded)[1] != kSha256Length) {
        throw Error(Errc::MalformedHash, std::string(text));
    }
    return ContentHash(std::string(text));
}

Digest256 ContentHash::digest() const {
    auto decoded = base58::decode(text_);
    return to_array<32>(ByteView(*decoded).last(32), Errc::MalformedHash);
}

std::string to_string(NodeId id) { return "node-" + std::to_string(id.value); }

ContentStore::ContentStore(std::uint64_t seed, LatencyModel latency)
    : placement_rng_(seed ^ 0x9e3779b97f4a7c15ULL), latency_rng_(seed ^ 0xc2b2ae3d27d4eb4fULL), latency_(latency) {
    if (latency_.min_hop_ticks > latency_.max_hop_ticks || latency_.bytes_per_tick == 0) {
        throw Error(Errc::InvalidConfig, "latency model");
    }
}

ContentStore::Node& ContentStore::node_at(NodeId id) {
    if (id.value >= nodes_.size()) throw Error(Errc::UnknownNode, to_string(id));
    return nodes_[id.value];
}

const ContentStore::Node& ContentStore::node_at(NodeId id) const {
    if (id.value >= nodes_.size()) throw Error(Errc::UnknownNode, to_string(id));
    return nodes_[id.value];
}

void ContentStore::add_provider(NodeId node, const ContentHash& hash) {
    nodes_[node.value].local.insert(hash);
    providers_[hash].insert(node);
}

NodeId ContentStore::add_node(bool online) {
    std::unique_lock lock(mutex_);
    nodes_.push_back(Node{online, {}});
    return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void ContentStore::set_online(NodeId node, bool online) {
    std::unique_lock lock(mutex_);
    node_at(node).online = online;
}

bool ContentStore::is_online(NodeId node) const {
    std::shared_lock lock(mutex_);
    return node_at(node).online;
}

std::size_t ContentStore::node_count() const {
    std::shared_lock lock(mutex_);
    return nodes_.size();
}

std::vector<NodeId> ContentStore::online_nodes() const {
    std::shared_lock lock(mutex_);
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].online) out.push_back(NodeId{i});
    }
    return out;
}

ContentHash ContentStore::put(NodeId node, ByteView bytes) {
    std::unique_lock lock(mutex_);
    if (!node_at(node).online) throw Error(Errc::NodeOffline, to_string(node));
    auto hash = ContentHash::of(bytes);
    objects_.try_emplace(hash, bytes.begin(), bytes.end());
    add_provider(node, hash);
    return hash;
}

Bytes ContentStore::get(NodeId node, const ContentHash& hash) {
    std::unique_lock lock(mutex_);
    auto& self = node_at(node);
    if (!self.online) throw Error(Errc::NodeOffline, to_string(node));
    auto obj = objects_.find(hash);
    if (obj == objects_.end()) throw Error(Errc::UnknownHash, hash.text());
    if (self.local.contains(hash)) return obj->second;

    auto prov = providers_.find(hash);
    bool reachable = prov != providers_.end() &&
                     std::any_of(prov->second.begin(), prov->second.end(),
                                 [&](NodeId p) { return nodes_[p.value].online; });
    if (!reachable) throw Error(Errc::NoOnlineProvider, hash.text());

    std::uniform_int_distribution<std::uint32_t> hop(latency_.min_hop_ticks, latency_.max_hop_ticks);
    ticks_ += hop(latency_rng_) + (obj->second.size() + latency_.bytes_per_tick - 1) / latency_.bytes_per_tick;
    add_provider(node, hash);
    return obj->second;
}

std::set<NodeId> ContentStore::find_providers(const ContentHash& hash) const {
    std::shared_lock lock(mutex_);
    auto it = providers_.find(hash);
    return it == providers_.end() ? std::set<NodeId>{} : it->second;
}

bool ContentStore::holds(NodeId node, const ContentHash& hash) const {
    std::shared_lock lock(mutex_);
    return node_at(node).local.contains(hash);
}

void ContentStore::remove_local(NodeId node, const ContentHash& hash) {
    std::unique_lock lock(mutex_);
    auto& self = node_at(node);
    if (self.local.erase(hash) == 0) throw Error(Errc::NotAProvider, to_string(node) + " " + hash.text());
    providers_[hash].erase(node);
}

std::set<NodeId> ContentStore::replicate(const ContentHash& hash, std::size_t factor) {
    std::unique_lock lock(mutex_);
    if (factor == 0) throw std::invalid_argument("replication factor must be positive");
    std::vector<NodeId> online;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].online) online.push_back(NodeId{i});
    }
    if (factor > online.size()) throw Error(Errc::InsufficientNodes, std::to_string(factor));
    if (!objects_.contains(hash)) throw Error(Errc::UnknownHash, hash.text());

    auto& provs = providers_[hash];
    bool reachable = std::any_of(provs.begin(), provs.end(), [&](NodeId p) { return nodes_[p.value].online; });
    if (!reachable) throw Error(Errc::NoOnlineProvider, hash.text());

    std::vector<NodeId> candidates;
    std::copy_if(online.begin(), online.end(), std::back_inserter(candidates),
                 [&](NodeId n) { return !provs.contains(n); });
    std::shuffle(candidates.begin(), candidates.end(), placement_rng_);
    for (auto it = candidates.begin(); provs.size() < factor && it != candidates.end(); ++it) {
        add_provider(*it, hash);
    }
    return provs;
}

std::uint64_t ContentStore::elapsed_ticks() const {
    std::shared_lock lock(mutex_);
    return ticks_;
}

void ContentStore::save(const std::filesystem::path& dir) const {
    std::shared_lock lock(mutex_);
    std::filesystem::create_directories(dir / "objects");
    for (const auto& [hash, bytes] : objects_) {
        std::ofstream out(dir / "objects" / hash.text(), std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::ofstream index(dir / "providers.tsv");
    for (const auto& [hash, nodes] : providers_) {
        for (auto n : nodes) index << hash.text() << '\t' << n.value << '\n';
    }
}

void ContentStore::load(const std::filesystem::path& dir) {
    std::unique_lock lock(mutex_);
    for (const auto& entry : std::filesystem::directory_iterator(dir / "objects")) {
        std::ifstream in(entry.path(), std::ios::binary);
        Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto hash = ContentHash::of(bytes);
        if (hash.text() != entry.path().filename().string()) {
            throw Error(Errc::MalformedHash, "content does not match " + entry.path().filename().string());
        }
        objects_.try_emplace(hash, std::move(bytes));
    }
    std::ifstream index(dir / "providers.tsv");
    std::string line;
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(Errc::ParseError, "providers.tsv: " + line);
        auto hash = ContentHash::parse(std::string_view(line).substr(0, tab));
        auto id = static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1)));
        if (!objects_.contains(hash)) throw Error(Errc::UnknownHash, hash.text());
        while (nodes_.size() <= id) nodes_.push_back(Node{});
        add_provider(NodeId{id}, hash);
    }
}

ContentHash CentralStore::put(NodeId, ByteView bytes) {
    auto hash = ContentHash::of(bytes);
    objects_.try_emplace(hash, bytes.begin(), bytes.end());
    return hash;
}

Bytes CentralStore::get(NodeId, const ContentHash& hash) {
    auto it = objects_.find(hash);
    if (it == objects_.end()) throw Error(Errc::UnknownHash, hash.text());
    ticks_ += round_trip_ + (it->second.size() + bytes_per_tick_ - 1) / bytes_per_tick_;
    return it->second;
}

namespace {

Bytes ipns_message(std::string_view name, const ContentHash& value, std::uint64_t sequence) {
    ByteWriter w;
    w.str("medchain/ipns/v1").str(name).str(value.text()).u64(sequence);
    return std::move(w).take();
}

}  // namespace

std::string ipns_name_of(const crypto::PublicKey& key) { return ContentHash::of(key.bytes()).text(); }

IpnsRecord make_ipns_record(const crypto::KeyPair& kp, const ContentHash& value, std::uint64_t sequence) {
    auto name = ipns_name_of(kp.public_key);
    auto sig = crypto::sign(kp.private_key, ipns_message(name, value, sequence));
    return IpnsRecord{name, value, sequence, kp.public_key, sig};
}

void NameRegistry::publish(const IpnsRecord& record) {
    if (record.name != ipns_name_of(record.publisher) ||
        !crypto::verify(record.publisher, ipns_message(record.name, record.value, record.sequence), record.signature)) {
        throw Error(Errc::BadSignature, record.name);
    }
    auto it = records_.find(record.name);
    if (it != records_.end() && record.sequence <= it->second.sequence) {
        throw Error(Errc::StaleSequence, record.name);
    }
    records_.insert_or_assign(record.name, record);
}

IpnsRecord NameRegistry::ipns_publish(const crypto::KeyPair& kp, const ContentHash& value) {
    auto current = sequence(ipns_name_of(kp.public_key));
    auto record = make_ipns_record(kp, value, current.value_or(0) + 1);
    publish(record);
    return record;
}

ContentHash NameRegistry::resolve(std::string_view name) const {
    auto it = records_.find(name);
    if (it == records_.end()) throw Error(Errc::UnknownName, std::string(name));
    return it->second.value;
}

std::optional<std::uint64_t> NameRegistry::sequence(std::string_view name) const {
    auto it = records_.find(name);
    if (it == records_.end()) return std::nullopt;
    return it->second.sequence;
}

}  // namespace medchain::cas
