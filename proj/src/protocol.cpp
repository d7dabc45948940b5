#include "medchain/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <tuple>

namespace medchain::protocol {

namespace {

using chain::ContractId;
using contracts::CombinedKey;
using contracts::HashParts;

constexpr std::string_view kRegistrySalt = "medchain/fingerprint-registry/v1";
constexpr std::string_view kMapTag = "medchain/map/v1";

Bytes fingerprint_password(const crypto::Fingerprint& fp) {
    ByteWriter w;
    w.str("medchain/fingerprint-password/v1").blob(fp.secret);
    auto d = sha256(w.bytes());
    return Bytes(d.begin(), d.end());
}

std::string sequential_id(char prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%04zu", prefix, n);
    return buf;
}

std::vector<crypto::KeyPair> genesis_keypairs(std::size_t n, SeededRandom& rng) {
    std::vector<crypto::KeyPair> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(crypto::generate_keypair(rng));
    return out;
}

std::vector<crypto::PublicKey> public_keys(const std::vector<crypto::KeyPair>& kps) {
    std::vector<crypto::PublicKey> out;
    for (const auto& kp : kps) out.push_back(kp.public_key);
    return out;
}

bool valid_account_id(std::string_view id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return static_cast<unsigned char>(c) > 0x20 && c != 0x7f;
    });
}

template <class M>
auto& find_or_throw(M& map, const std::string& key, Errc errc) {
    auto it = map.find(key);
    if (it == map.end()) throw Error(errc, key);
    return it->second;
}

}  // namespace

std::string_view to_string(StorageMode m) noexcept { return m == StorageMode::Contract ? "contract" : "ipfs-map"; }

std::string_view to_string(RecordBackend b) noexcept { return b == RecordBackend::Cas ? "cas" : "kv"; }

BatchingPolicy BatchingPolicy::parse(std::string_view text) {
    if (text == "strict2") return strict2();
    if (text == "none") return none();
    constexpr std::string_view prefix = "decoupled(";
    if (text.starts_with(prefix) && text.ends_with(')')) {
        auto inner = std::string(text.substr(prefix.size(), text.size() - prefix.size() - 1));
        unsigned n = 0, m = 0;
        char tail = 0;
        if (std::sscanf(inner.c_str(), "%u,%u%c", &n, &m, &tail) == 2 && n >= 1 && m <= n) {
            return decoupled(n, m);
        }
    }
    throw Error(Errc::InvalidConfig, "batching policy: " + std::string(text));
}

std::string BatchingPolicy::text() const {
    switch (kind) {
        case Kind::Strict2: return "strict2";
        case Kind::None: return "none";
        case Kind::Decoupled:
            return "decoupled(" + std::to_string(n_hashes) + "," + std::to_string(n_updates) + ")";
    }
    return "?";
}

System::System(SystemConfig config)
    : config_(config),
      rng_(config.seed),
      gen_(config.seed),
      committee_(crypto::generate_keypair(rng_)),
      genesis_keys_(genesis_keypairs(config.genesis_hospitals.size(), rng_)),
      contracts_(contracts::ContractsConfig{config.batching.kind == BatchingPolicy::Kind::Strict2,
                                            public_keys(genesis_keys_)}),
      cas_(config.seed, config.latency),
      kv_(config.kv_round_trip_ticks, config.latency.bytes_per_tick) {
    if (config_.batching.kind == BatchingPolicy::Kind::Decoupled &&
        (config_.batching.n_hashes == 0 || config_.batching.n_updates > config_.batching.n_hashes)) {
        throw Error(Errc::InvalidConfig, "decoupled batching needs 1 <= n_updates <= n_hashes");
    }
    if (config_.kdf_iterations == 0 || config_.kdf_iterations > crypto::kMaxKdfIterations) {
        throw Error(Errc::InvalidConfig, "kdf iterations");
    }
    std::vector<crypto::PublicKey> authorities{committee_.public_key};
    for (const auto& k : public_keys(genesis_keys_)) authorities.push_back(k);
    chain_ = std::make_unique<chain::Chain>(chain::ChainConfig{authorities, false}, contracts_, committee_, clock_);
    node_keys_.emplace(committee_.public_key, committee_);
    for (std::size_t i = 0; i < genesis_keys_.size(); ++i) {
        const auto& [id, password] = config_.genesis_hospitals[i];
        auto& acct = add_hospital(id, password, genesis_keys_[i]);
        acct.registered = true;
    }
    for (std::size_t i = 0; i < config_.storage_nodes; ++i) {
        node_owner_[cas_.add_node()] = "store-" + std::to_string(i + 1);
    }
}

System::~System() = default;

const PatientAccount& System::patient_signup(const crypto::Fingerprint& fp) {
    auto kp = crypto::derive_keypair(fp);
    auto digest = crypto::fingerprint_digest(fp, as_bytes(kRegistrySalt));
    if (fingerprint_digests_.contains(digest)) throw Error(Errc::DuplicateFingerprint);

    PatientAccount acct;
    acct.patient_id = sequential_id('P', patients_.size() + 1);
    acct.public_key = kp.public_key;
    acct.keyfile = crypto::seal_keyfile(fingerprint_password(fp), kp, rng_, config_.kdf_iterations);
    acct.fingerprint_digest = digest;
    acct.node = cas_.add_node();

    fingerprint_digests_.insert(digest);
    node_owner_[acct.node] = acct.patient_id;
    server_keyfiles_[acct.patient_id] = acct.keyfile;
    client_cache_[acct.patient_id] = acct.keyfile;
    return patients_.emplace(acct.patient_id, std::move(acct)).first->second;
}

HospitalAccount& System::add_hospital(const std::string& hospital_id, std::string_view password,
                                     const crypto::KeyPair& kp) {
    if (!valid_account_id(hospital_id)) throw Error(Errc::InvalidConfig, "hospital id: '" + hospital_id + "'");
    if (password.empty()) throw Error(Errc::InvalidConfig, "empty password");
    if (hospitals_.contains(hospital_id) || patients_.contains(hospital_id)) {
        throw Error(Errc::DuplicateHospital, hospital_id);
    }

    HospitalAccount acct;
    acct.hospital_id = hospital_id;
    acct.public_key = kp.public_key;
    acct.keyfile = crypto::seal_keyfile(as_bytes(password), kp, rng_, config_.kdf_iterations);
    acct.node = cas_.add_node();

    node_owner_[acct.node] = hospital_id;
    node_keys_.emplace(kp.public_key, kp);
    server_keyfiles_[hospital_id] = acct.keyfile;
    client_cache_[hospital_id] = acct.keyfile;
    return hospitals_.emplace(hospital_id, std::move(acct)).first->second;
}

const HospitalAccount& System::hospital_signup(const std::string& hospital_id, std::string_view password,
                                               bool committee_approval) {
    auto& stored = add_hospital(hospital_id, password, crypto::generate_keypair(rng_));
    if (!committee_approval) throw Error(Errc::NotApproved, hospital_id);

    submit(committee_, ContractId::Governance, chain::add_authority_payload(stored.public_key));
    commit();
    stored.registered = true;
    return stored;
}

cas::ContentHash System::create_record(const std::string& hospital_id, const std::string& patient_id,
                                       const HealthRecord& record, const crypto::Fingerprint& patient_fp) {
    auto& h = hospital_mut(hospital_id);
    const auto& p = patient_mut(patient_id);
    auto patient_keys = open_account(patient_id, fingerprint_password(patient_fp));

    auto sealed = crypto::asym_encrypt(p.public_key, record.serialize(), rng_);
    auto hash = records_store().put(h.node, sealed.serialize());
    auto sig = crypto::sign(patient_keys.private_key, contracts::hash_message(hash));
    const auto& hospital_keys = node_keys_.at(h.public_key);

    if (config_.storage_mode == StorageMode::Contract) {
        auto parts = contracts::split_hash(hash, gen_);
        submit(hospital_keys, ContractId::RecordRegistry, contracts::record_store_payload(p.public_key, parts, sig));
        commit();
    } else {
        if (!crypto::verify(p.public_key, contracts::hash_message(hash), sig)) {
            throw Error(Errc::InvalidPatientSignature);
        }
        auto text = contracts::split_hash(hash, gen_).text();
        write_map(hospital_keys, h.node, [&](Map& m) { m[p.public_key].push_back(text); });
    }
    enqueue_disease(h, record);
    return hash;
}

std::vector<HealthRecord> System::patient_view_records(const std::string& patient_id, const crypto::Fingerprint& fp) {
    const auto& p = patient_mut(patient_id);
    auto kp = open_account(patient_id, fingerprint_password(fp));
    std::vector<HealthRecord> out;
    for (const auto& hash : record_hashes(patient_id)) {
        auto ct = crypto::Ciphertext::parse(fetch(p.node, hash));
        out.push_back(HealthRecord::parse(crypto::asym_decrypt(kp.private_key, ct)));
    }
    submit(kp, ContractId::AccessLog, contracts::access_log_payload(contracts::kViewRecordsOp, p.public_key));
    commit();
    return out;
}

std::vector<cas::ContentHash> System::grant_access(const std::string& patient_id, const crypto::Fingerprint& fp,
                                                   const std::string& hospital_id,
                                                   const std::vector<std::size_t>& record_indices) {
    const auto& p = patient_mut(patient_id);
    auto kp = open_account(patient_id, fingerprint_password(fp));
    const auto& h = hospital_mut(hospital_id);
    auto hashes = record_hashes(patient_id);
    for (auto i : record_indices) {
        if (i >= hashes.size()) throw Error(Errc::NoSuchRecord, std::to_string(i));
    }

    CombinedKey ck(p.public_key, h.public_key);
    std::vector<Grant> added;
    for (auto i : record_indices) {
        auto plain = crypto::asym_decrypt(kp.private_key, crypto::Ciphertext::parse(fetch(p.node, hashes[i])));
        auto object = records_store().put(p.node, crypto::asym_encrypt(h.public_key, plain, rng_).serialize());
        auto on_chain = object;
        if (config_.ipns_grants) {
            auto name_key = crypto::generate_keypair(rng_);
            names_.ipns_publish(name_key, object);
            on_chain = cas::ContentHash::parse(cas::ipns_name_of(name_key.public_key));
            grant_name_keys_.insert_or_assign(on_chain.text(), name_key);
        }
        auto sig = crypto::sign(kp.private_key, contracts::hash_message(on_chain));
        submit(kp, ContractId::AccessRegistry,
               contracts::access_grant_payload(ck, contracts::split_hash(on_chain, gen_), sig));
        added.push_back(Grant{hospital_id, i, object, on_chain});
    }
    commit();

    std::vector<cas::ContentHash> objects;
    auto& mine = grants_[patient_id];
    for (auto& g : added) {
        objects.push_back(g.object);
        mine.push_back(std::move(g));
    }
    return objects;
}

std::vector<HealthRecord> System::hospital_view_records(const std::string& hospital_id, std::string_view password,
                                                        const std::string& patient_id) {
    const auto& h = hospital_mut(hospital_id);
    auto kp = open_account(hospital_id, as_bytes(password));
    const auto& p = patient_mut(patient_id);
    std::vector<HealthRecord> out;
    for (const auto& hash : access_hashes(hospital_id, patient_id)) {
        auto ct = crypto::Ciphertext::parse(fetch(h.node, hash));
        out.push_back(HealthRecord::parse(crypto::asym_decrypt(kp.private_key, ct)));
    }
    submit(kp, ContractId::AccessLog, contracts::access_log_payload(contracts::kHospitalViewOp, p.public_key));
    commit();
    return out;
}

RevocationNotice System::revoke_access(const std::string& patient_id, const crypto::Fingerprint& fp,
                                       const std::string& hospital_id, std::size_t record_index) {
    const auto& p = patient_mut(patient_id);
    auto kp = open_account(patient_id, fingerprint_password(fp));
    auto& h = hospital_mut(hospital_id);
    auto& mine = grants_[patient_id];
    auto it = std::find_if(mine.begin(), mine.end(), [&](const Grant& g) {
        return g.hospital_id == hospital_id && g.record_index == record_index;
    });
    if (it == mine.end()) throw Error(Errc::NoSuchGrant, hospital_id + " " + std::to_string(record_index));

    CombinedKey ck(p.public_key, h.public_key);
    auto sig_ck = crypto::sign(kp.private_key, ck.bytes());
    auto sig_h = crypto::sign(kp.private_key, h.public_key.bytes());
    submit(kp, ContractId::AccessRegistry,
           contracts::access_revoke_payload(ck, sig_ck, sig_h, contracts::split_hash(it->on_chain, gen_)));
    commit();

    auto object = it->object;
    mine.erase(it);
    if (config_.backend == RecordBackend::Cas) {
        if (cas_.holds(p.node, object)) cas_.remove_local(p.node, object);
        if (h.compliant && cas_.holds(h.node, object)) cas_.remove_local(h.node, object);
    }
    RevocationNotice notice{hospital_id, object, clock_};
    notices_[hospital_id].push_back(notice);
    return notice;
}

std::set<cas::NodeId> System::audit_revocation(const std::string& patient_id, const cas::ContentHash& revoked) const {
    auto providers = cas_.find_providers(revoked);
    providers.erase(patient(patient_id).node);
    return providers;
}

void System::flush_disease_batch(const std::string& hospital_id, bool force) {
    auto& h = hospital_mut(hospital_id);
    auto& batch = batches_[hospital_id];
    if (batch.pending.empty()) return;
    const auto& kp = node_keys_.at(h.public_key);
    const auto& policy = config_.batching;

    std::vector<std::size_t> keep;
    if (policy.kind == BatchingPolicy::Kind::Decoupled) {
        auto k = batch.pending.size();
        auto dropped = static_cast<std::size_t>(policy.n_hashes - policy.n_updates);
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), gen_);
        order.resize(k > dropped ? k - dropped : 0);
        std::sort(order.begin(), order.end());
        for (auto i : order) post_stats(kp, {{batch.pending[i], batch.locations[i]}});
    } else {
        std::set<std::string> distinct(batch.pending.begin(), batch.pending.end());
        if (policy.kind == BatchingPolicy::Kind::Strict2 && distinct.size() < 2 && !force) return;
        std::vector<contracts::StatUpdate> updates;
        for (std::size_t i = 0; i < batch.pending.size(); ++i) {
            updates.push_back({batch.pending[i], batch.locations[i]});
        }
        std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) {
            return std::tie(a.disease, a.location) < std::tie(b.disease, b.location);
        });
        post_stats(kp, updates);
    }
    if (op_tx_count_ > 0) commit();
    batch = BatchState{};
}

void System::enqueue_disease(HospitalAccount& h, const HealthRecord& record) {
    auto& batch = batches_[h.hospital_id];
    batch.pending.push_back(record.disease);
    batch.locations.push_back(record.location);
    const auto& policy = config_.batching;
    switch (policy.kind) {
        case BatchingPolicy::Kind::Strict2: flush_disease_batch(h.hospital_id); break;
        case BatchingPolicy::Kind::None: flush_disease_batch(h.hospital_id); break;
        case BatchingPolicy::Kind::Decoupled:
            if (++batch.window == policy.n_hashes) flush_disease_batch(h.hospital_id);
            break;
    }
}

void System::post_stats(const crypto::KeyPair& kp, const std::vector<contracts::StatUpdate>& updates) {
    submit(kp, ContractId::DiseaseStats, contracts::stats_update_payload(updates));
}

std::set<cas::NodeId> System::replicate(const cas::ContentHash& hash, std::size_t factor) {
    return cas_.replicate(hash, factor);
}

void System::set_online(const std::string& actor, bool online) {
    for (const auto& [node, owner] : node_owner_) {
        if (owner == actor) {
            cas_.set_online(node, online);
            return;
        }
    }
    throw Error(Errc::UnknownNode, actor);
}

void System::set_compliant(const std::string& hospital_id, bool compliant) {
    hospital_mut(hospital_id).compliant = compliant;
}

void System::clear_client_cache(const std::string& account_id) { client_cache_.erase(account_id); }

Errc System::submit_raw(const chain::Transaction& tx) {
    try {
        chain_->submit_tx(tx);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::Ok;
}

std::vector<Errc> System::settle() {
    if (!chain_->has_pending()) return {};
    const auto& signer = node_keys_.at(chain_->expected_signer(chain_->height() + 1));
    const auto& block = chain_->mine_block(signer, ++clock_);
    return block.receipts;
}

std::vector<Errc> System::settle_own() {
    auto own = op_tx_count_;
    op_tx_count_ = 0;
    auto receipts = settle();
    if (own > receipts.size()) own = receipts.size();
    return std::vector<Errc>(receipts.end() - static_cast<std::ptrdiff_t>(own), receipts.end());
}

void System::commit() {
    for (auto status : settle_own()) {
        if (status != Errc::Ok) throw Error(status, "transaction rejected");
    }
}

void System::submit(const crypto::KeyPair& kp, ContractId contract, Bytes payload) {
    chain_->submit_tx(
        chain::Transaction::make(kp, contract, std::move(payload), chain_->next_nonce(kp.public_key)));
    ++op_tx_count_;
}

const PatientAccount& System::patient(const std::string& patient_id) const {
    auto it = patients_.find(patient_id);
    if (it == patients_.end()) throw Error(Errc::UnknownPatient, patient_id);
    return it->second;
}

const HospitalAccount& System::hospital(const std::string& hospital_id) const {
    auto it = hospitals_.find(hospital_id);
    if (it == hospitals_.end()) throw Error(Errc::UnknownHospital, hospital_id);
    return it->second;
}

PatientAccount& System::patient_mut(const std::string& patient_id) {
    return find_or_throw(patients_, patient_id, Errc::UnknownPatient);
}

HospitalAccount& System::hospital_mut(const std::string& hospital_id) {
    return find_or_throw(hospitals_, hospital_id, Errc::UnknownHospital);
}

const crypto::EncryptedKeyfile& System::server_keyfile(const std::string& account_id) const {
    auto it = server_keyfiles_.find(account_id);
    if (it == server_keyfiles_.end()) throw Error(Errc::UnknownPatient, account_id);
    return it->second;
}

crypto::KeyPair System::open_account(const std::string& account_id, ByteView password) {
    auto cached = client_cache_.find(account_id);
    if (cached == client_cache_.end()) {
        ++server_fetches_;
        cached = client_cache_.emplace(account_id, server_keyfile(account_id)).first;
    }
    return crypto::open_keyfile(password, cached->second);
}

std::vector<std::string> System::patient_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : patients_) out.push_back(id);
    return out;
}

std::vector<std::string> System::hospital_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : hospitals_) out.push_back(id);
    return out;
}

const std::vector<RevocationNotice>& System::notices(const std::string& hospital_id) const {
    static const std::vector<RevocationNotice> empty;
    auto it = notices_.find(hospital_id);
    return it == notices_.end() ? empty : it->second;
}

const std::vector<Grant>& System::grants(const std::string& patient_id) const {
    static const std::vector<Grant> empty;
    auto it = grants_.find(patient_id);
    return it == grants_.end() ? empty : it->second;
}

const BatchState& System::batch(const std::string& hospital_id) const {
    static const BatchState empty;
    auto it = batches_.find(hospital_id);
    return it == batches_.end() ? empty : it->second;
}

std::vector<cas::ContentHash> System::record_hashes(const std::string& patient_id) {
    const auto& p = patient_mut(patient_id);
    std::vector<cas::ContentHash> out;
    if (config_.storage_mode == StorageMode::Contract) {
        for (const auto& parts : contracts_.record_list(p.public_key)) out.push_back(contracts::join_hash(parts));
    } else {
        auto map = read_map(p.node);
        for (const auto& text : map[p.public_key]) out.push_back(contracts::join_hash(HashParts::parse_text(text)));
    }
    return out;
}

std::vector<cas::ContentHash> System::access_hashes(const std::string& hospital_id, const std::string& patient_id) {
    CombinedKey ck(patient_mut(patient_id).public_key, hospital_mut(hospital_id).public_key);
    std::vector<cas::ContentHash> out;
    for (const auto& parts : contracts_.access_list(ck)) {
        auto hash = contracts::join_hash(parts);
        out.push_back(names_.sequence(hash.text()) ? names_.resolve(hash.text()) : hash);
    }
    return out;
}

std::string System::node_name(cas::NodeId node) const {
    auto it = node_owner_.find(node);
    return it == node_owner_.end() ? cas::to_string(node) : it->second;
}

std::uint64_t System::record_fetch_ticks() const { return records_store().elapsed_ticks(); }

cas::BlobStore& System::records_store() {
    if (config_.backend == RecordBackend::Cas) return cas_;
    return kv_;
}

const cas::BlobStore& System::records_store() const {
    if (config_.backend == RecordBackend::Cas) return cas_;
    return kv_;
}

Bytes System::fetch(cas::NodeId node, const cas::ContentHash& hash) { return records_store().get(node, hash); }

System::Map System::read_map(cas::NodeId reader) {
    Map map;
    std::optional<cas::ContentHash> pointer;
    try {
        pointer = contracts_.map_pointer_get();
    } catch (const Error& e) {
        if (e.code() != Errc::EmptyPointer) throw;
        return map;
    }
    auto bytes = cas_.get(reader, *pointer);
    ByteReader r(bytes, Errc::MalformedRecord);
    if (r.str() != kMapTag) throw Error(Errc::MalformedRecord, "map tag");
    for (auto n = r.u32(); n > 0; --n) {
        auto& list = map[crypto::PublicKey(r.fixed<crypto::kPublicKeySize>())];
        for (auto k = r.u32(); k > 0; --k) list.push_back(r.str());
    }
    r.expect_done();
    return map;
}

void System::write_map(const crypto::KeyPair& hospital_key, cas::NodeId node,
                       const std::function<void(Map&)>& mutate) {
    constexpr int kAttempts = 3;
    for (int attempt = 0;; ++attempt) {
        std::optional<cas::ContentHash> expected;
        try {
            expected = contracts_.map_pointer_get();
        } catch (const Error& e) {
            if (e.code() != Errc::EmptyPointer) throw;
        }
        auto map = read_map(node);
        mutate(map);
        ByteWriter w;
        w.str(kMapTag).u32(static_cast<std::uint32_t>(map.size()));
        for (const auto& [key, list] : map) {
            w.raw(key.bytes()).u32(static_cast<std::uint32_t>(list.size()));
            for (const auto& s : list) w.str(s);
        }
        auto next = cas_.put(node, w.bytes());
        submit(hospital_key, ContractId::MapPointer, contracts::map_pointer_set_payload(expected, next));
        auto receipts = settle_own();
        auto status = receipts.empty() ? Errc::Ok : receipts.back();
        if (status == Errc::StaleMap && attempt + 1 < kAttempts) continue;
        if (status != Errc::Ok) throw Error(status, "map pointer update");
        return;
    }
}

}  // namespace medchain::protocol
