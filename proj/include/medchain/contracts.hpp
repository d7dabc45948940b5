#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medchain/cas.hpp"
#include "medchain/chain.hpp"
#include "medchain/crypto.hpp"
#include "medchain/hash_codec.hpp"

namespace medchain::contracts {

/// P_Pub followed by H_Pub.
class CombinedKey {
public:
    static constexpr std::size_t kSize = 2 * crypto::kPublicKeySize;

    CombinedKey() = default;
    CombinedKey(const crypto::PublicKey& patient, const crypto::PublicKey& hospital);

    /// Throws MalformedKey unless exactly 128 bytes.
    static CombinedKey from_bytes(ByteView bytes);

    ByteView bytes() const noexcept { return bytes_; }
    crypto::PublicKey patient() const;
    crypto::PublicKey hospital() const;

    auto operator<=>(const CombinedKey&) const = default;

private:
    std::array<std::uint8_t, kSize> bytes_{};
};

struct StatUpdate {
    std::string disease;
    std::string location;  // empty: not location-keyed
};

// Operation names, the first field of every payload.
inline constexpr std::string_view kRecordStoreOp = "record_store";
inline constexpr std::string_view kAccessGrantOp = "access_grant";
inline constexpr std::string_view kAccessRevokeOp = "access_revoke";
inline constexpr std::string_view kStatsUpdateOp = "stats_update";
inline constexpr std::string_view kMapPointerSetOp = "map_pointer_set";
inline constexpr std::string_view kViewRecordsOp = "view_records";
inline constexpr std::string_view kHospitalViewOp = "hospital_view";

Bytes record_store_payload(const crypto::PublicKey& patient, const HashParts& parts,
                           const crypto::Signature& patient_sig);
Bytes access_grant_payload(const CombinedKey& ck, const HashParts& parts, const crypto::Signature& patient_sig);
Bytes access_revoke_payload(const CombinedKey& ck, const crypto::Signature& sig_ck, const crypto::Signature& sig_hkey,
                            const HashParts& parts);
Bytes stats_update_payload(const std::vector<StatUpdate>& updates);
Bytes map_pointer_set_payload(const std::optional<cas::ContentHash>& expected_previous, const cas::ContentHash& next);
/// No-op access-log entry naming the activity and its subject key.
Bytes access_log_payload(std::string_view activity, const crypto::PublicKey& subject);

/// The message a patient signs to authorize storing or granting `hash`.
Bytes hash_message(const cas::ContentHash& hash);

struct ContractsConfig {
    /// Reject stats updates naming fewer than two distinct diseases.
    bool strict_stats = true;
    /// Hospitals registered in the genesis state.
    std::vector<crypto::PublicKey> genesis_hospitals{};
};

/// The three registries, the map pointer and the hospital registry. Every
/// call validates fully before mutating, so a failure leaves state untouched.
class ContractSet final : public chain::TransactionExecutor {
public:
    explicit ContractSet(ContractsConfig config = {})
        : config_(std::move(config)), hospitals_(config_.genesis_hospitals.begin(), config_.genesis_hospitals.end()) {}

    Errc execute(const chain::Transaction& tx) override;

    const ContractsConfig& config() const noexcept { return config_; }

    bool is_registered_hospital(const crypto::PublicKey& key) const { return hospitals_.contains(key); }
    const std::set<crypto::PublicKey>& hospitals() const noexcept { return hospitals_; }

    std::vector<HashParts> record_list(const crypto::PublicKey& patient) const;
    std::vector<HashParts> access_list(const CombinedKey& ck) const;
    /// Comma-joined text form of each entry.
    std::vector<std::string> record_list_text(const crypto::PublicKey& patient) const;
    std::vector<std::string> access_list_text(const CombinedKey& ck) const;

    std::uint64_t stats_get(std::string_view disease) const;
    std::uint64_t stats_get(std::string_view disease, std::string_view location) const;
    std::uint64_t stats_total() const;

    /// Throws EmptyPointer before the first set.
    cas::ContentHash map_pointer_get() const;

    /// Sorted text, one mapping entry per line.
    std::string dump() const;

private:
    Errc governance(const chain::Transaction& tx);
    Errc record_store(const chain::Transaction& tx, ByteReader& r);
    Errc access_grant(const chain::Transaction& tx, ByteReader& r);
    Errc access_revoke(const chain::Transaction& tx, ByteReader& r);
    Errc stats_update(const chain::Transaction& tx, ByteReader& r);
    Errc map_pointer_set(const chain::Transaction& tx, ByteReader& r);

    ContractsConfig config_;
    std::set<crypto::PublicKey> hospitals_;
    std::map<crypto::PublicKey, std::vector<HashParts>> records_;
    std::map<CombinedKey, std::vector<HashParts>> access_;
    std::map<std::string, std::uint64_t, std::less<>> stats_;
    std::map<std::pair<std::string, std::string>, std::uint64_t, std::less<>> stats_at_;
    std::optional<cas::ContentHash> map_pointer_;
};

}  // namespace medchain::contracts
