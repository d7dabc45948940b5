#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medchain/bytes.hpp"
#include "medchain/crypto.hpp"
#include "medchain/digest.hpp"

namespace medchain::chain {

enum class ContractId : std::uint8_t {
    AccessLog = 0,  // no-op transactions recording read access
    RecordRegistry = 1,
    AccessRegistry = 2,
    DiseaseStats = 3,
    MapPointer = 4,
    Governance = 5,
};

std::string_view to_string(ContractId id) noexcept;
std::optional<ContractId> contract_from_string(std::string_view name) noexcept;

/// A signed contract call. The signature covers (contract, payload, nonce).
/// Payloads start with a length-prefixed operation name.
struct Transaction {
    crypto::PublicKey sender;
    ContractId contract = ContractId::AccessLog;
    Bytes payload;
    std::uint64_t nonce = 0;
    crypto::Signature signature;

    static Transaction make(const crypto::KeyPair& signer, ContractId contract, Bytes payload, std::uint64_t nonce);

    Bytes signing_bytes() const;
    bool signature_valid() const;
    /// Operation name carried at the start of the payload ("" if unreadable).
    std::string activity() const;

    void encode(ByteWriter& w) const;
    static Transaction decode(ByteReader& r);

    bool operator==(const Transaction&) const = default;
};

struct BlockHeader {
    std::uint64_t height = 0;
    Digest256 prev_hash{};
    Digest256 body_hash{};
    crypto::PublicKey authority;
    std::uint64_t timestamp = 0;
    crypto::Signature authority_signature;

    Bytes signing_bytes() const;
    Bytes encode() const;
    /// SHA-256 of the full encoded header, signature included.
    Digest256 hash() const;

    bool operator==(const BlockHeader&) const = default;
};

/// Transactions in arrival order, each with the status it produced.
struct Block {
    BlockHeader header;
    std::vector<Transaction> transactions;
    std::vector<Errc> receipts;

    Digest256 compute_body_hash() const;

    /// Canonical encoding: header then u32 count of (transaction, u32 status) pairs. Big-endian.
    Bytes encode() const;
    /// Throws Error(Errc::MalformedBlock).
    static Block decode(ByteView bytes);

    bool operator==(const Block&) const = default;
};

/// Applies contract calls. Must leave state untouched when it returns a failure.
class TransactionExecutor {
public:
    virtual ~TransactionExecutor() = default;
    virtual Errc execute(const Transaction& tx) = 0;
};

/// Governance payload adding a hospital to the authority set.
Bytes add_authority_payload(const crypto::PublicKey& key);
inline constexpr std::string_view kAddAuthorityOp = "add_authority";

struct ChainConfig {
    std::vector<crypto::PublicKey> genesis_authorities;
    bool allow_empty_blocks = false;
};

struct LogFilter {
    std::optional<crypto::PublicKey> sender{};
    std::optional<ContractId> contract{};
    std::optional<std::string> activity{};
};

struct LogEntry {
    std::uint64_t height = 0;
    Transaction tx;
    Errc status = Errc::Ok;
};

/// Full node: pending pool, round-robin Proof-of-Authority block production,
/// and the append-only history.
class Chain {
public:
    /// Mines the empty genesis block at height 0 with `genesis_signer`, which
    /// must be the first genesis authority.
    Chain(ChainConfig config, TransactionExecutor& executor, const crypto::KeyPair& genesis_signer,
          std::uint64_t tick = 0);

    /// Queues a transaction. A bad signature or nonce throws BadSignature or
    /// BadNonce; the attempt is still queued with that status so it reaches
    /// the log, but it never executes.
    void submit_tx(const Transaction& tx);

    std::uint64_t next_nonce(const crypto::PublicKey& sender) const;
    std::size_t pending_count() const noexcept;
    bool has_pending() const noexcept { return !pool_.empty(); }

    /// Throws NotAnAuthority, NotYourTurn, or EmptyPool.
    const Block& mine_block(const crypto::KeyPair& authority, std::uint64_t tick);

    const crypto::PublicKey& expected_signer(std::uint64_t height) const;
    const std::vector<crypto::PublicKey>& authorities() const noexcept { return authorities_; }
    bool is_authority(const crypto::PublicKey& key) const;

    std::uint64_t height() const noexcept { return blocks_.size() - 1; }
    std::span<const Block> blocks() const noexcept { return blocks_; }
    const ChainConfig& config() const noexcept { return config_; }

    std::vector<LogEntry> query_log(const LogFilter& filter = {}) const;
    std::size_t log_size() const;

    /// One hex-encoded canonical block per line.
    void export_lines(std::ostream& out) const;

private:
    struct Pending {
        Transaction tx;
        Errc precheck;
    };

    ChainConfig config_;
    TransactionExecutor& executor_;
    std::vector<crypto::PublicKey> authorities_;
    std::vector<Block> blocks_;
    std::vector<Pending> pool_;
    std::map<crypto::PublicKey, std::uint64_t> last_nonce_;
};

std::vector<Block> import_lines(std::istream& in);

/// Runs one transaction against the executor and the authority list.
Errc apply_transaction(const Transaction& tx, std::vector<crypto::PublicKey>& authorities,
                       TransactionExecutor& executor);

struct VerifyResult {
    bool ok = true;
    std::uint64_t failed_height = 0;
    std::string reason;
};

/// Checks heights, hash links, body hashes, round-robin authority signatures,
/// and that every signature/nonce receipt matches the transaction.
VerifyResult verify_chain(std::span<const Block> blocks, std::span<const crypto::PublicKey> genesis_authorities);

/// Re-executes the history on `fresh` and reports the first block whose
/// recomputed receipts differ.
VerifyResult replay_chain(std::span<const Block> blocks, std::span<const crypto::PublicKey> genesis_authorities,
                          TransactionExecutor& fresh);

/// Header-only participant. Never mines; checks full-node answers against its headers.
class LightNode {
public:
    /// Pulls and checks headers the node has not seen yet. Throws MalformedBlock on a broken link.
    void sync(const Chain& full);
    std::uint64_t height() const noexcept { return headers_.empty() ? 0 : headers_.back().height; }
    std::span<const BlockHeader> headers() const noexcept { return headers_; }

    /// Throws MalformedBlock if a served block does not match the stored header.
    std::vector<LogEntry> query_log(const Chain& full, const LogFilter& filter = {}) const;

private:
    std::vector<BlockHeader> headers_;
};

}  // namespace medchain::chain
