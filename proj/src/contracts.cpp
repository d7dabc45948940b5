#include "medchain/contracts.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace medchain::contracts {

namespace {

using crypto::PublicKey;
using crypto::Signature;

PublicKey read_key(ByteReader& r) { return PublicKey(r.fixed<crypto::kPublicKeySize>()); }
Signature read_sig(ByteReader& r) { return Signature{r.fixed<crypto::kSignatureSize>()}; }

HashParts read_parts(ByteReader& r) {
    HashParts parts;
    parts.part1 = r.fixed<kPartWidth>();
    parts.part2 = r.fixed<kPartWidth>();
    return parts;
}

void write_parts(ByteWriter& w, const HashParts& parts) { w.raw(parts.part1).raw(parts.part2); }

bool valid_disease_name(std::string_view s) {
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
        return static_cast<unsigned char>(c) < 0x20 || c == 0x7f;
    });
}

bool valid_location(std::string_view s) {
    return std::none_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x20 || c == 0x7f; });
}

std::string index_field(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return buf;
}

}  // namespace

CombinedKey::CombinedKey(const PublicKey& patient, const PublicKey& hospital) {
    std::copy(patient.bytes().begin(), patient.bytes().end(), bytes_.begin());
    std::copy(hospital.bytes().begin(), hospital.bytes().end(), bytes_.begin() + crypto::kPublicKeySize);
}

CombinedKey CombinedKey::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) throw Error(Errc::MalformedKey, "combined key length");
    CombinedKey ck;
    std::copy(bytes.begin(), bytes.end(), ck.bytes_.begin());
    return ck;
}

PublicKey CombinedKey::patient() const { return PublicKey::from_bytes(ByteView(bytes_).first<crypto::kPublicKeySize>()); }

PublicKey CombinedKey::hospital() const { return PublicKey::from_bytes(ByteView(bytes_).last<crypto::kPublicKeySize>()); }

Bytes record_store_payload(const PublicKey& patient, const HashParts& parts, const Signature& patient_sig) {
    ByteWriter w;
    w.str(kRecordStoreOp).raw(patient.bytes());
    write_parts(w, parts);
    w.raw(patient_sig.bytes);
    return std::move(w).take();
}

Bytes access_grant_payload(const CombinedKey& ck, const HashParts& parts, const Signature& patient_sig) {
    ByteWriter w;
    w.str(kAccessGrantOp).raw(ck.bytes());
    write_parts(w, parts);
    w.raw(patient_sig.bytes);
    return std::move(w).take();
}

Bytes access_revoke_payload(const CombinedKey& ck, const Signature& sig_ck, const Signature& sig_hkey,
                            const HashParts& parts) {
    ByteWriter w;
    w.str(kAccessRevokeOp).raw(ck.bytes()).raw(sig_ck.bytes).raw(sig_hkey.bytes);
    write_parts(w, parts);
    return std::move(w).take();
}

Bytes stats_update_payload(const std::vector<StatUpdate>& updates) {
    ByteWriter w;
    w.str(kStatsUpdateOp).u32(static_cast<std::uint32_t>(updates.size()));
    for (const auto& u : updates) w.str(u.disease).str(u.location);
    return std::move(w).take();
}

Bytes map_pointer_set_payload(const std::optional<cas::ContentHash>& expected_previous, const cas::ContentHash& next) {
    ByteWriter w;
    w.str(kMapPointerSetOp).str(expected_previous ? expected_previous->text() : "").str(next.text());
    return std::move(w).take();
}

Bytes access_log_payload(std::string_view activity, const PublicKey& subject) {
    ByteWriter w;
    w.str(activity).raw(subject.bytes());
    return std::move(w).take();
}

Bytes hash_message(const cas::ContentHash& hash) { return to_bytes(hash.text()); }

Errc ContractSet::execute(const chain::Transaction& tx) {
    using chain::ContractId;
    try {
        ByteReader r(tx.payload, Errc::MalformedTransaction);
        auto op = r.str();
        switch (tx.contract) {
            case ContractId::Governance: return governance(tx);
            case ContractId::AccessLog:
                if (op != kViewRecordsOp && op != kHospitalViewOp) return Errc::MalformedTransaction;
                read_key(r);
                r.expect_done();
                return Errc::Ok;
            case ContractId::RecordRegistry:
                return op == kRecordStoreOp ? record_store(tx, r) : Errc::MalformedTransaction;
            case ContractId::AccessRegistry:
                if (op == kAccessGrantOp) return access_grant(tx, r);
                if (op == kAccessRevokeOp) return access_revoke(tx, r);
                return Errc::MalformedTransaction;
            case ContractId::DiseaseStats:
                return op == kStatsUpdateOp ? stats_update(tx, r) : Errc::MalformedTransaction;
            case ContractId::MapPointer:
                return op == kMapPointerSetOp ? map_pointer_set(tx, r) : Errc::MalformedTransaction;
        }
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::MalformedTransaction;
}

Errc ContractSet::governance(const chain::Transaction& tx) {
    ByteReader r(tx.payload, Errc::MalformedTransaction);
    if (r.str() != chain::kAddAuthorityOp) return Errc::MalformedTransaction;
    auto key = read_key(r);
    r.expect_done();
    hospitals_.insert(key);
    return Errc::Ok;
}

Errc ContractSet::record_store(const chain::Transaction& tx, ByteReader& r) {
    auto patient = read_key(r);
    auto parts = read_parts(r);
    auto sig = read_sig(r);
    r.expect_done();
    if (!hospitals_.contains(tx.sender)) return Errc::UnregisteredHospital;
    auto hash = join_hash(parts);
    if (!crypto::verify(patient, hash_message(hash), sig)) return Errc::InvalidPatientSignature;
    records_[patient].push_back(parts);
    return Errc::Ok;
}

Errc ContractSet::access_grant(const chain::Transaction& tx, ByteReader& r) {
    auto ck = CombinedKey::from_bytes(r.raw(CombinedKey::kSize));
    auto parts = read_parts(r);
    auto sig = read_sig(r);
    r.expect_done();
    auto hash = join_hash(parts);
    auto patient = ck.patient();
    if (tx.sender != patient || !crypto::verify(patient, hash_message(hash), sig)) {
        return Errc::InvalidPatientSignature;
    }
    access_[ck].push_back(parts);
    return Errc::Ok;
}

Errc ContractSet::access_revoke(const chain::Transaction& tx, ByteReader& r) {
    auto ck = CombinedKey::from_bytes(r.raw(CombinedKey::kSize));
    auto sig_ck = read_sig(r);
    auto sig_hkey = read_sig(r);
    auto parts = read_parts(r);
    r.expect_done();
    auto target = join_hash_text(parts);
    auto patient = ck.patient();
    if (tx.sender != patient || !crypto::verify(patient, ck.bytes(), sig_ck) ||
        !crypto::verify(patient, ck.hospital().bytes(), sig_hkey)) {
        return Errc::InvalidPatientSignature;
    }
    auto it = access_.find(ck);
    if (it == access_.end()) return Errc::NoSuchEntry;
    auto& entries = it->second;
    auto match = std::find_if(entries.begin(), entries.end(),
                              [&](const HashParts& p) { return join_hash_text(p) == target; });
    if (match == entries.end()) return Errc::NoSuchEntry;
    entries.erase(match);
    if (entries.empty()) access_.erase(it);
    return Errc::Ok;
}

Errc ContractSet::stats_update(const chain::Transaction& tx, ByteReader& r) {
    auto count = r.u32();
    std::vector<StatUpdate> updates;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto disease = r.str();
        auto location = r.str();
        updates.push_back({std::move(disease), std::move(location)});
    }
    r.expect_done();
    if (!hospitals_.contains(tx.sender)) return Errc::UnregisteredHospital;
    if (updates.empty()) return Errc::MalformedTransaction;
    std::set<std::string_view> distinct;
    for (const auto& u : updates) {
        if (!valid_disease_name(u.disease) || !valid_location(u.location)) return Errc::MalformedTransaction;
        distinct.insert(u.disease);
    }
    if (config_.strict_stats && distinct.size() < 2) return Errc::BatchTooSmall;
    for (const auto& u : updates) {
        ++stats_[u.disease];
        if (!u.location.empty()) ++stats_at_[{u.location, u.disease}];
    }
    return Errc::Ok;
}

Errc ContractSet::map_pointer_set(const chain::Transaction& tx, ByteReader& r) {
    auto expected = r.str();
    auto next = cas::ContentHash::parse(r.str());
    r.expect_done();
    if (!hospitals_.contains(tx.sender)) return Errc::UnregisteredHospital;
    auto current = map_pointer_ ? map_pointer_->text() : std::string();
    if (expected != current) return Errc::StaleMap;
    map_pointer_ = next;
    return Errc::Ok;
}

std::vector<HashParts> ContractSet::record_list(const PublicKey& patient) const {
    auto it = records_.find(patient);
    return it == records_.end() ? std::vector<HashParts>{} : it->second;
}

std::vector<HashParts> ContractSet::access_list(const CombinedKey& ck) const {
    auto it = access_.find(ck);
    return it == access_.end() ? std::vector<HashParts>{} : it->second;
}

std::vector<std::string> ContractSet::record_list_text(const PublicKey& patient) const {
    std::vector<std::string> out;
    for (const auto& p : record_list(patient)) out.push_back(p.text());
    return out;
}

std::vector<std::string> ContractSet::access_list_text(const CombinedKey& ck) const {
    std::vector<std::string> out;
    for (const auto& p : access_list(ck)) out.push_back(p.text());
    return out;
}

std::uint64_t ContractSet::stats_get(std::string_view disease) const {
    auto it = stats_.find(disease);
    return it == stats_.end() ? 0 : it->second;
}

std::uint64_t ContractSet::stats_get(std::string_view disease, std::string_view location) const {
    auto it = stats_at_.find(std::pair<std::string, std::string>(location, disease));
    return it == stats_at_.end() ? 0 : it->second;
}

std::uint64_t ContractSet::stats_total() const {
    std::uint64_t total = 0;
    for (const auto& [_, n] : stats_) total += n;
    return total;
}

cas::ContentHash ContractSet::map_pointer_get() const {
    if (!map_pointer_) throw Error(Errc::EmptyPointer);
    return *map_pointer_;
}

std::string ContractSet::dump() const {
    std::vector<std::string> lines;
    for (const auto& h : hospitals_) lines.push_back("hospital " + h.hex());
    for (const auto& [patient, list] : records_) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            lines.push_back("record " + patient.hex() + " " + index_field(i) + " " + list[i].text());
        }
    }
    for (const auto& [ck, list] : access_) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            lines.push_back("access " + to_hex(ck.bytes()) + " " + index_field(i) + " " + list[i].text());
        }
    }
    for (const auto& [disease, n] : stats_) lines.push_back("stats " + disease + "\t" + std::to_string(n));
    for (const auto& [key, n] : stats_at_) {
        lines.push_back("stats-at " + key.first + "\t" + key.second + "\t" + std::to_string(n));
    }
    if (map_pointer_) lines.push_back("map-pointer " + map_pointer_->text());
    std::sort(lines.begin(), lines.end());
    std::ostringstream out;
    for (const auto& l : lines) out << l << '\n';
    return out.str();
}

}  // namespace medchain::contracts
