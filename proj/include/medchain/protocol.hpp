#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "medchain/cas.hpp"
#include "medchain/chain.hpp"
#include "medchain/contracts.hpp"
#include "medchain/crypto.hpp"
#include "medchain/health_record.hpp"
#include "medchain/random.hpp"

namespace medchain::protocol {

enum class StorageMode { Contract, IpfsMap };
enum class RecordBackend { Cas, KeyValue };

std::string_view to_string(StorageMode m) noexcept;
std::string_view to_string(RecordBackend b) noexcept;

struct BatchingPolicy {
    enum class Kind { Strict2, Decoupled, None };

    Kind kind = Kind::Strict2;
    std::uint32_t n_hashes = 10;
    std::uint32_t n_updates = 9;

    static BatchingPolicy strict2() { return {}; }
    static BatchingPolicy decoupled(std::uint32_t n_hashes, std::uint32_t n_updates) {
        return {Kind::Decoupled, n_hashes, n_updates};
    }
    static BatchingPolicy none() { return {Kind::None, 1, 1}; }

    /// "strict2", "none" or "decoupled(n,m)". Throws InvalidConfig.
    static BatchingPolicy parse(std::string_view text);
    std::string text() const;

    bool operator==(const BatchingPolicy&) const = default;
};

struct SystemConfig {
    std::uint64_t seed = 1;
    StorageMode storage_mode = StorageMode::Contract;
    BatchingPolicy batching{};
    RecordBackend backend = RecordBackend::Cas;
    /// Grants publish an IPNS-style name on chain instead of the object hash.
    bool ipns_grants = false;
    std::uint32_t kdf_iterations = crypto::kDefaultKdfIterations;
    cas::LatencyModel latency{};
    std::uint32_t kv_round_trip_ticks = 8;
    /// CAS nodes owned by no actor, available as replication targets.
    std::size_t storage_nodes = 0;
    /// Hospitals (id, password) that are authorities and registered from genesis.
    std::vector<std::pair<std::string, std::string>> genesis_hospitals{};
};

struct PatientAccount {
    std::string patient_id;
    crypto::PublicKey public_key;
    crypto::EncryptedKeyfile keyfile;
    Digest256 fingerprint_digest{};
    cas::NodeId node;
};

struct HospitalAccount {
    std::string hospital_id;
    crypto::PublicKey public_key;
    crypto::EncryptedKeyfile keyfile;
    bool registered = false;
    bool compliant = true;
    cas::NodeId node;
};

struct RevocationNotice {
    std::string hospital_id;
    cas::ContentHash object;
    std::uint64_t tick = 0;
};

/// One active (patient, hospital, record) grant as the patient's client tracks it.
struct Grant {
    std::string hospital_id;
    std::size_t record_index = 0;
    cas::ContentHash object;     // hospital-encrypted copy
    cas::ContentHash on_chain;   // object, or the IPNS name when names are used
};

/// A hospital's disease counts that have not been posted yet.
struct BatchState {
    std::vector<std::string> pending;   // disease names not yet posted
    std::vector<std::string> locations; // parallel to pending
    std::uint32_t window = 0;           // record transactions in the current decoupled window
};

/// The whole simulated network: chain, contracts, content store and actors.
/// Every operation that submits transactions mines them before returning and
/// throws the first failing receipt's error code.
class System {
public:
    explicit System(SystemConfig config = {});
    ~System();
    System(const System&) = delete;
    System& operator=(const System&) = delete;

    const SystemConfig& config() const noexcept { return config_; }

    /// Throws DuplicateFingerprint or SecretTooShort.
    const PatientAccount& patient_signup(const crypto::Fingerprint& fp);

    /// Throws NotApproved (the account is still created, unregistered) or DuplicateHospital.
    const HospitalAccount& hospital_signup(const std::string& hospital_id, std::string_view password,
                                           bool committee_approval);

    /// Throws UnknownHospital, UnknownPatient, WrongPassword, UnregisteredHospital.
    cas::ContentHash create_record(const std::string& hospital_id, const std::string& patient_id,
                                   const HealthRecord& record, const crypto::Fingerprint& patient_fp);

    /// Throws UnknownPatient, WrongPassword, NoOnlineProvider, DecryptionFailure.
    std::vector<HealthRecord> patient_view_records(const std::string& patient_id, const crypto::Fingerprint& fp);

    /// Grants the listed record indices (position in the patient's record list).
    /// Throws UnknownPatient, WrongPassword, UnknownHospital, NoSuchRecord.
    std::vector<cas::ContentHash> grant_access(const std::string& patient_id, const crypto::Fingerprint& fp,
                                               const std::string& hospital_id,
                                               const std::vector<std::size_t>& record_indices);

    /// Throws UnknownHospital, WrongPassword, UnknownPatient, NoOnlineProvider, DecryptionFailure.
    std::vector<HealthRecord> hospital_view_records(const std::string& hospital_id, std::string_view password,
                                                    const std::string& patient_id);

    /// Throws UnknownPatient, WrongPassword, UnknownHospital, NoSuchGrant.
    RevocationNotice revoke_access(const std::string& patient_id, const crypto::Fingerprint& fp,
                                   const std::string& hospital_id, std::size_t record_index);

    /// Nodes other than the patient's own that still provide the object.
    std::set<cas::NodeId> audit_revocation(const std::string& patient_id, const cas::ContentHash& revoked) const;

    /// Posts what the batching policy allows. With `force` a strict batch
    /// holding one disease is posted anyway and fails with BatchTooSmall.
    void flush_disease_batch(const std::string& hospital_id, bool force = false);

    std::set<cas::NodeId> replicate(const cas::ContentHash& hash, std::size_t factor);
    void set_online(const std::string& actor, bool online);
    void set_compliant(const std::string& hospital_id, bool compliant);
    /// Drops the client-side keyfile copy so the next open falls back to the server copy.
    void clear_client_cache(const std::string& account_id);
    /// Advances the logical clock.
    void tick(std::uint64_t n = 1) { clock_ += n; }

    /// Submits a raw transaction to the shared pool. Precheck failures are
    /// returned (and still logged) instead of thrown.
    Errc submit_raw(const chain::Transaction& tx);
    /// Mines every pending transaction. Returns the receipts of that block, or
    /// nothing if the pool was empty.
    std::vector<Errc> settle();

    const PatientAccount& patient(const std::string& patient_id) const;
    const HospitalAccount& hospital(const std::string& hospital_id) const;
    const crypto::EncryptedKeyfile& server_keyfile(const std::string& account_id) const;
    std::size_t server_keyfile_fetches() const noexcept { return server_fetches_; }
    std::vector<std::string> patient_ids() const;
    std::vector<std::string> hospital_ids() const;

    const std::vector<RevocationNotice>& notices(const std::string& hospital_id) const;
    const std::vector<Grant>& grants(const std::string& patient_id) const;
    const BatchState& batch(const std::string& hospital_id) const;

    /// The record hashes the patient's registry entry holds (contract or map).
    std::vector<cas::ContentHash> record_hashes(const std::string& patient_id);
    /// The hashes a hospital can look up for a patient (names resolved).
    std::vector<cas::ContentHash> access_hashes(const std::string& hospital_id, const std::string& patient_id);

    /// Actor or storage node name for a node id ("store-N" for unowned nodes).
    std::string node_name(cas::NodeId node) const;

    const chain::Chain& chain() const noexcept { return *chain_; }
    const contracts::ContractSet& contracts() const noexcept { return contracts_; }
    const crypto::PublicKey& committee_key() const noexcept { return committee_.public_key; }
    cas::ContentStore& content_store() noexcept { return cas_; }
    const cas::ContentStore& content_store() const noexcept { return cas_; }
    const cas::NameRegistry& names() const noexcept { return names_; }
    std::uint64_t clock() const noexcept { return clock_; }
    std::uint64_t record_fetch_ticks() const;

private:
    using Map = std::map<crypto::PublicKey, std::vector<std::string>>;

    PatientAccount& patient_mut(const std::string& patient_id);
    HospitalAccount& hospital_mut(const std::string& hospital_id);
    HospitalAccount& add_hospital(const std::string& hospital_id, std::string_view password,
                                  const crypto::KeyPair& kp);
    crypto::KeyPair open_account(const std::string& account_id, ByteView password);
    void submit(const crypto::KeyPair& kp, chain::ContractId contract, Bytes payload);
    /// settle() and return the receipts of the transactions submitted through submit().
    std::vector<Errc> settle_own();
    /// settle_own() and throw on the first failure.
    void commit();

    cas::BlobStore& records_store();
    const cas::BlobStore& records_store() const;
    Bytes fetch(cas::NodeId node, const cas::ContentHash& hash);

    Map read_map(cas::NodeId reader);
    void write_map(const crypto::KeyPair& hospital_key, cas::NodeId node,
                   const std::function<void(Map&)>& mutate);

    void enqueue_disease(HospitalAccount& h, const HealthRecord& record);
    void post_stats(const crypto::KeyPair& kp, const std::vector<contracts::StatUpdate>& updates);

    SystemConfig config_;
    SeededRandom rng_;
    std::mt19937_64 gen_;
    crypto::KeyPair committee_;
    std::vector<crypto::KeyPair> genesis_keys_;
    contracts::ContractSet contracts_;
    std::unique_ptr<chain::Chain> chain_;
    cas::ContentStore cas_;
    cas::CentralStore kv_;
    cas::NameRegistry names_;

    std::map<std::string, PatientAccount> patients_;
    std::map<std::string, HospitalAccount> hospitals_;
    std::set<Digest256> fingerprint_digests_;
    std::map<std::string, crypto::EncryptedKeyfile> server_keyfiles_;
    std::map<std::string, crypto::EncryptedKeyfile> client_cache_;
    std::map<crypto::PublicKey, crypto::KeyPair> node_keys_;
    std::map<cas::NodeId, std::string> node_owner_;
    std::map<std::string, std::vector<RevocationNotice>> notices_;
    std::map<std::string, std::vector<Grant>> grants_;
    std::map<std::string, crypto::KeyPair> grant_name_keys_;
    std::map<std::string, BatchState> batches_;
    std::size_t server_fetches_ = 0;
    std::size_t op_tx_count_ = 0;
    std::uint64_t clock_ = 0;
};

}  // namespace medchain::protocol
