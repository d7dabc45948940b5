#include "medchain/chain.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace medchain::chain {

namespace {

constexpr std::array<std::pair<ContractId, std::string_view>, 6> kContractNames{{
    {ContractId::AccessLog, "access-log"},
    {ContractId::RecordRegistry, "record-registry"},
    {ContractId::AccessRegistry, "access-registry"},
    {ContractId::DiseaseStats, "disease-stats"},
    {ContractId::MapPointer, "map-pointer"},
    {ContractId::Governance, "governance"},
}};

constexpr std::uint32_t kMaxErrc = static_cast<std::uint32_t>(Errc::InvalidConfig);

bool matches(const LogFilter& f, const Transaction& tx) {
    if (f.sender && *f.sender != tx.sender) return false;
    if (f.contract && *f.contract != tx.contract) return false;
    if (f.activity && *f.activity != tx.activity()) return false;
    return true;
}

bool is_precheck_status(Errc e) { return e == Errc::BadSignature || e == Errc::BadNonce; }

}  // namespace

std::string_view to_string(ContractId id) noexcept {
    for (const auto& [c, n] : kContractNames) {
        if (c == id) return n;
    }
    return "unknown";
}

std::optional<ContractId> contract_from_string(std::string_view name) noexcept {
    for (const auto& [c, n] : kContractNames) {
        if (n == name) return c;
    }
    return std::nullopt;
}

Transaction Transaction::make(const crypto::KeyPair& signer, ContractId contract, Bytes payload, std::uint64_t nonce) {
    Transaction tx{signer.public_key, contract, std::move(payload), nonce, {}};
    tx.signature = crypto::sign(signer.private_key, tx.signing_bytes());
    return tx;
}

Bytes Transaction::signing_bytes() const {
    ByteWriter w;
    w.str("medchain/tx/v1").u8(static_cast<std::uint8_t>(contract)).blob(payload).u64(nonce);
    return std::move(w).take();
}

bool Transaction::signature_valid() const { return crypto::verify(sender, signing_bytes(), signature); }

std::string Transaction::activity() const {
    try {
        ByteReader r(payload, Errc::MalformedTransaction);
        return r.str();
    } catch (const Error&) {
        return {};
    }
}

void Transaction::encode(ByteWriter& w) const {
    w.raw(sender.bytes()).u8(static_cast<std::uint8_t>(contract)).blob(payload).u64(nonce).raw(signature.bytes);
}

Transaction Transaction::decode(ByteReader& r) {
    Transaction tx;
    tx.sender = crypto::PublicKey(r.fixed<crypto::kPublicKeySize>());
    auto c = r.u8();
    if (c > static_cast<std::uint8_t>(ContractId::Governance)) throw Error(Errc::MalformedBlock, "contract id");
    tx.contract = static_cast<ContractId>(c);
    tx.payload = r.blob();
    tx.nonce = r.u64();
    tx.signature.bytes = r.fixed<crypto::kSignatureSize>();
    return tx;
}

Bytes BlockHeader::signing_bytes() const {
    ByteWriter w;
    w.str("medchain/block/v1").u64(height).raw(prev_hash).raw(body_hash).raw(authority.bytes()).u64(timestamp);
    return std::move(w).take();
}

Bytes BlockHeader::encode() const {
    ByteWriter w;
    w.u64(height).raw(prev_hash).raw(body_hash).raw(authority.bytes()).u64(timestamp).raw(authority_signature.bytes);
    return std::move(w).take();
}

Digest256 BlockHeader::hash() const { return sha256(encode()); }

Digest256 Block::compute_body_hash() const {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(transactions.size()));
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        transactions[i].encode(w);
        w.u32(static_cast<std::uint32_t>(receipts.at(i)));
    }
    return sha256(w.bytes());
}

Bytes Block::encode() const {
    ByteWriter w;
    w.raw(header.encode());
    w.u32(static_cast<std::uint32_t>(transactions.size()));
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        transactions[i].encode(w);
        w.u32(static_cast<std::uint32_t>(receipts.at(i)));
    }
    return std::move(w).take();
}

Block Block::decode(ByteView bytes) {
    ByteReader r(bytes, Errc::MalformedBlock);
    Block b;
    b.header.height = r.u64();
    b.header.prev_hash = r.fixed<32>();
    b.header.body_hash = r.fixed<32>();
    b.header.authority = crypto::PublicKey(r.fixed<crypto::kPublicKeySize>());
    b.header.timestamp = r.u64();
    b.header.authority_signature.bytes = r.fixed<crypto::kSignatureSize>();
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        b.transactions.push_back(Transaction::decode(r));
        auto status = r.u32();
        if (status > kMaxErrc) throw Error(Errc::MalformedBlock, "receipt status");
        b.receipts.push_back(static_cast<Errc>(status));
    }
    r.expect_done();
    return b;
}

Bytes add_authority_payload(const crypto::PublicKey& key) {
    ByteWriter w;
    w.str(kAddAuthorityOp).raw(key.bytes());
    return std::move(w).take();
}

Errc apply_transaction(const Transaction& tx, std::vector<crypto::PublicKey>& authorities,
                       TransactionExecutor& executor) {
    if (tx.contract != ContractId::Governance) return executor.execute(tx);

    if (std::find(authorities.begin(), authorities.end(), tx.sender) == authorities.end()) {
        return Errc::NotAnAuthority;
    }
    crypto::PublicKey added;
    try {
        ByteReader r(tx.payload, Errc::MalformedTransaction);
        if (r.str() != kAddAuthorityOp) return Errc::MalformedTransaction;
        added = crypto::PublicKey(r.fixed<crypto::kPublicKeySize>());
        r.expect_done();
    } catch (const Error& e) {
        return e.code();
    }
    auto status = executor.execute(tx);
    if (status == Errc::Ok && std::find(authorities.begin(), authorities.end(), added) == authorities.end()) {
        authorities.push_back(added);
    }
    return status;
}

Chain::Chain(ChainConfig config, TransactionExecutor& executor, const crypto::KeyPair& genesis_signer,
             std::uint64_t tick)
    : config_(std::move(config)), executor_(executor), authorities_(config_.genesis_authorities) {
    if (authorities_.empty()) throw Error(Errc::InvalidConfig, "authority set must not be empty");
    if (genesis_signer.public_key != authorities_.front()) throw Error(Errc::NotAnAuthority, "genesis signer");

    Block genesis;
    genesis.header.height = 0;
    genesis.header.authority = genesis_signer.public_key;
    genesis.header.timestamp = tick;
    genesis.header.body_hash = genesis.compute_body_hash();
    genesis.header.authority_signature = crypto::sign(genesis_signer.private_key, genesis.header.signing_bytes());
    blocks_.push_back(std::move(genesis));
}

std::uint64_t Chain::next_nonce(const crypto::PublicKey& sender) const {
    auto it = last_nonce_.find(sender);
    return it == last_nonce_.end() ? 1 : it->second + 1;
}

void Chain::submit_tx(const Transaction& tx) {
    if (!tx.signature_valid()) {
        pool_.push_back({tx, Errc::BadSignature});
        throw Error(Errc::BadSignature, "transaction signature");
    }
    if (tx.nonce != next_nonce(tx.sender)) {
        pool_.push_back({tx, Errc::BadNonce});
        throw Error(Errc::BadNonce, "expected " + std::to_string(next_nonce(tx.sender)));
    }
    last_nonce_[tx.sender] = tx.nonce;
    pool_.push_back({tx, Errc::Ok});
}

std::size_t Chain::pending_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(pool_.begin(), pool_.end(), [](const Pending& p) { return p.precheck == Errc::Ok; }));
}

const crypto::PublicKey& Chain::expected_signer(std::uint64_t h) const { return authorities_[h % authorities_.size()]; }

bool Chain::is_authority(const crypto::PublicKey& key) const {
    return std::find(authorities_.begin(), authorities_.end(), key) != authorities_.end();
}

const Block& Chain::mine_block(const crypto::KeyPair& authority, std::uint64_t tick) {
    if (!is_authority(authority.public_key)) throw Error(Errc::NotAnAuthority);
    const auto next = height() + 1;
    if (expected_signer(next) != authority.public_key) throw Error(Errc::NotYourTurn, "height " + std::to_string(next));
    if (pool_.empty() && !config_.allow_empty_blocks) throw Error(Errc::EmptyPool);

    Block block;
    block.header.height = next;
    block.header.prev_hash = blocks_.back().header.hash();
    block.header.authority = authority.public_key;
    block.header.timestamp = tick;
    for (auto& p : pool_) {
        auto status = p.precheck == Errc::Ok ? apply_transaction(p.tx, authorities_, executor_) : p.precheck;
        block.transactions.push_back(std::move(p.tx));
        block.receipts.push_back(status);
    }
    pool_.clear();
    block.header.body_hash = block.compute_body_hash();
    block.header.authority_signature = crypto::sign(authority.private_key, block.header.signing_bytes());
    blocks_.push_back(std::move(block));
    return blocks_.back();
}

std::vector<LogEntry> Chain::query_log(const LogFilter& filter) const {
    std::vector<LogEntry> out;
    for (const auto& b : blocks_) {
        for (std::size_t i = 0; i < b.transactions.size(); ++i) {
            if (matches(filter, b.transactions[i])) out.push_back({b.header.height, b.transactions[i], b.receipts[i]});
        }
    }
    return out;
}

std::size_t Chain::log_size() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.transactions.size();
    return n;
}

void Chain::export_lines(std::ostream& out) const {
    for (const auto& b : blocks_) out << to_hex(b.encode()) << '\n';
}

std::vector<Block> import_lines(std::istream& in) {
    std::vector<Block> blocks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        blocks.push_back(Block::decode(from_hex(line)));
    }
    return blocks;
}

namespace {

VerifyResult fail(std::uint64_t height, std::string reason) { return {false, height, std::move(reason)}; }

}  // namespace

VerifyResult verify_chain(std::span<const Block> blocks, std::span<const crypto::PublicKey> genesis_authorities) {
    std::vector<crypto::PublicKey> authorities(genesis_authorities.begin(), genesis_authorities.end());
    if (authorities.empty()) return fail(0, "empty authority set");
    std::map<crypto::PublicKey, std::uint64_t> last_nonce;

    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        const auto& h = b.header;
        if (h.height != i) return fail(i, "height out of sequence");
        Digest256 expected_prev{};
        if (i > 0) expected_prev = blocks[i - 1].header.hash();
        if (h.prev_hash != expected_prev) return fail(i, "prev_hash mismatch");
        if (b.receipts.size() != b.transactions.size()) return fail(i, "receipt count");
        if (h.body_hash != b.compute_body_hash()) return fail(i, "body hash mismatch");
        if (h.authority != authorities[h.height % authorities.size()]) return fail(i, "signer out of turn");
        if (!crypto::verify(h.authority, h.signing_bytes(), h.authority_signature)) return fail(i, "block signature");

        for (std::size_t t = 0; t < b.transactions.size(); ++t) {
            const auto& tx = b.transactions[t];
            auto status = b.receipts[t];
            bool sig_ok = tx.signature_valid();
            if ((status == Errc::BadSignature) == sig_ok) return fail(i, "signature receipt mismatch");
            if (!sig_ok) continue;
            bool nonce_ok = tx.nonce == last_nonce[tx.sender] + 1;
            if ((status == Errc::BadNonce) == nonce_ok) return fail(i, "nonce receipt mismatch");
            if (!nonce_ok) continue;
            last_nonce[tx.sender] = tx.nonce;
            if (tx.contract == ContractId::Governance && status == Errc::Ok) {
                try {
                    ByteReader r(tx.payload, Errc::MalformedTransaction);
                    r.str();
                    crypto::PublicKey added(r.fixed<crypto::kPublicKeySize>());
                    if (std::find(authorities.begin(), authorities.end(), added) == authorities.end()) {
                        authorities.push_back(added);
                    }
                } catch (const Error&) {
                    return fail(i, "governance payload");
                }
            }
        }
    }
    return {};
}

VerifyResult replay_chain(std::span<const Block> blocks, std::span<const crypto::PublicKey> genesis_authorities,
                          TransactionExecutor& fresh) {
    std::vector<crypto::PublicKey> authorities(genesis_authorities.begin(), genesis_authorities.end());
    for (const auto& b : blocks) {
        for (std::size_t t = 0; t < b.transactions.size(); ++t) {
            if (is_precheck_status(b.receipts[t])) continue;
            auto status = apply_transaction(b.transactions[t], authorities, fresh);
            if (status != b.receipts[t]) {
                return fail(b.header.height, "receipt " + std::to_string(t) + " replayed as " +
                                                 std::string(medchain::to_string(status)));
            }
        }
    }
    return {};
}

void LightNode::sync(const Chain& full) {
    auto blocks = full.blocks();
    for (std::size_t i = headers_.size(); i < blocks.size(); ++i) {
        const auto& h = blocks[i].header;
        Digest256 expected_prev{};
        if (i > 0) expected_prev = headers_.back().hash();
        if (h.height != i || h.prev_hash != expected_prev) {
            throw Error(Errc::MalformedBlock, "header link broken at " + std::to_string(i));
        }
        headers_.push_back(h);
    }
}

std::vector<LogEntry> LightNode::query_log(const Chain& full, const LogFilter& filter) const {
    std::vector<LogEntry> out;
    auto blocks = full.blocks();
    for (const auto& h : headers_) {
        if (h.height >= blocks.size()) {
            throw Error(Errc::MalformedBlock, "full node is missing block " + std::to_string(h.height));
        }
        const auto& b = blocks[h.height];
        if (b.header != h || b.compute_body_hash() != h.body_hash) {
            throw Error(Errc::MalformedBlock, "served block does not match header " + std::to_string(h.height));
        }
        for (std::size_t i = 0; i < b.transactions.size(); ++i) {
            if (matches(filter, b.transactions[i])) out.push_back({h.height, b.transactions[i], b.receipts[i]});
        }
    }
    return out;
}

}  // namespace medchain::chain
