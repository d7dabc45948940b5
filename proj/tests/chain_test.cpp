#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "medchain/chain.hpp"

using namespace medchain;
using namespace medchain::chain;

namespace {

crypto::KeyPair key(std::string_view name) {
    return crypto::derive_keypair(crypto::Fingerprint::from_text(std::string(name) + "-fingerprint-seed"));
}

Errc error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::Ok;
}

Bytes op(std::string_view name, std::string_view arg = "") {
    ByteWriter w;
    w.str(name).str(arg);
    return std::move(w).take();
}

// Keeps a list of "set" arguments; "fail" calls are rejected without effect.
class ListExecutor final : public TransactionExecutor {
public:
    Errc execute(const Transaction& tx) override {
        ByteReader r(tx.payload, Errc::MalformedTransaction);
        auto name = r.str();
        if (name == kAddAuthorityOp) return Errc::Ok;
        if (name == "fail") return Errc::NoSuchEntry;
        values.push_back(r.str());
        return Errc::Ok;
    }
    std::vector<std::string> values;
};

struct Fixture {
    crypto::KeyPair a = key("authority-a");
    crypto::KeyPair b = key("authority-b");
    crypto::KeyPair c = key("authority-c");
    crypto::KeyPair patient = key("patient-p");
    ListExecutor exec;
    Chain chain{ChainConfig{{a.public_key, b.public_key, c.public_key}, false}, exec, a};

    const crypto::KeyPair& signer_for(std::uint64_t h) const {
        const auto& pub = chain.expected_signer(h);
        return pub == a.public_key ? a : pub == b.public_key ? b : c;
    }

    void send(const crypto::KeyPair& kp, std::string_view name, std::string_view arg = "") {
        chain.submit_tx(Transaction::make(kp, ContractId::RecordRegistry, op(name, arg), chain.next_nonce(kp.public_key)));
    }

    void mine() { chain.mine_block(signer_for(chain.height() + 1), chain.height() + 1); }
};

}  // namespace

TEST(Chain, SubmitValidGrowsPool) {
    Fixture f;
    EXPECT_EQ(f.chain.pending_count(), 0u);
    f.send(f.patient, "set", "x");
    EXPECT_EQ(f.chain.pending_count(), 1u);
}

TEST(Chain, ReplayedNonceRejected) {
    Fixture f;
    auto tx = Transaction::make(f.patient, ContractId::RecordRegistry, op("set", "x"), 1);
    f.chain.submit_tx(tx);
    EXPECT_EQ(error_of([&] { f.chain.submit_tx(tx); }), Errc::BadNonce);
    EXPECT_EQ(f.chain.pending_count(), 1u);
}

TEST(Chain, ForgedSignatureRejected) {
    Fixture f;
    auto tx = Transaction::make(f.patient, ContractId::RecordRegistry, op("set", "x"), 1);
    tx.payload = op("set", "y");
    EXPECT_EQ(error_of([&] { f.chain.submit_tx(tx); }), Errc::BadSignature);

    auto other = Transaction::make(f.patient, ContractId::RecordRegistry, op("set", "x"), 1);
    other.sender = f.a.public_key;
    EXPECT_EQ(error_of([&] { f.chain.submit_tx(other); }), Errc::BadSignature);
    EXPECT_EQ(f.chain.pending_count(), 0u);
}

TEST(Chain, RejectedAttemptsAreLoggedWithoutEffect) {
    Fixture f;
    auto tx = Transaction::make(f.patient, ContractId::RecordRegistry, op("set", "x"), 1);
    f.chain.submit_tx(tx);
    EXPECT_THROW(f.chain.submit_tx(tx), Error);
    f.send(f.patient, "fail");
    f.mine();

    EXPECT_EQ(f.exec.values, std::vector<std::string>{"x"});
    auto log = f.chain.query_log({f.patient.public_key});
    ASSERT_EQ(log.size(), 3u);
    EXPECT_EQ(log[0].status, Errc::Ok);
    EXPECT_EQ(log[1].status, Errc::BadNonce);
    EXPECT_EQ(log[2].status, Errc::NoSuchEntry);
    EXPECT_TRUE(verify_chain(f.chain.blocks(), f.chain.config().genesis_authorities).ok);
}

TEST(Chain, RoundRobinSigners) {
    Fixture f;
    for (int i = 0; i < 3; ++i) {
        f.send(f.patient, "set", std::to_string(i));
        f.mine();
    }
    auto blocks = f.chain.blocks();
    ASSERT_EQ(blocks.size(), 4u);
    EXPECT_EQ(blocks[0].header.authority, f.a.public_key);
    EXPECT_EQ(blocks[1].header.authority, f.b.public_key);
    EXPECT_EQ(blocks[2].header.authority, f.c.public_key);
    EXPECT_EQ(blocks[3].header.authority, f.a.public_key);
}

TEST(Chain, PatientCannotMine) {
    Fixture f;
    f.send(f.patient, "set", "x");
    EXPECT_EQ(error_of([&] { f.chain.mine_block(f.patient, 1); }), Errc::NotAnAuthority);
}

TEST(Chain, OutOfTurnRejected) {
    Fixture f;
    f.send(f.patient, "set", "x");
    EXPECT_EQ(error_of([&] { f.chain.mine_block(f.c, 1); }), Errc::NotYourTurn);
    EXPECT_EQ(error_of([&] { f.chain.mine_block(f.a, 1); }), Errc::NotYourTurn);
    EXPECT_NO_THROW(f.chain.mine_block(f.b, 1));
}

TEST(Chain, EmptyPoolNeedsConfig) {
    Fixture f;
    EXPECT_EQ(error_of([&] { f.chain.mine_block(f.b, 1); }), Errc::EmptyPool);

    ListExecutor exec;
    Chain empty_ok(ChainConfig{{f.a.public_key, f.b.public_key}, true}, exec, f.a);
    EXPECT_EQ(empty_ok.mine_block(f.b, 1).transactions.size(), 0u);
}

TEST(Chain, GenesisSignerMustLeadAuthorities) {
    ListExecutor exec;
    auto a = key("authority-a");
    auto b = key("authority-b");
    EXPECT_EQ(error_of([&] { Chain(ChainConfig{{a.public_key}, false}, exec, b); }), Errc::NotAnAuthority);
    EXPECT_EQ(error_of([&] { Chain(ChainConfig{{}, false}, exec, a); }), Errc::InvalidConfig);
}

TEST(Chain, GovernanceExtendsAuthoritySet) {
    Fixture f;
    auto d = key("authority-d");
    auto gov = [&](const crypto::KeyPair& from, const crypto::PublicKey& added) {
        f.chain.submit_tx(Transaction::make(from, ContractId::Governance, add_authority_payload(added),
                                            f.chain.next_nonce(from.public_key)));
    };
    gov(f.patient, d.public_key);
    f.mine();
    EXPECT_FALSE(f.chain.is_authority(d.public_key));
    EXPECT_EQ(f.chain.query_log({.contract = ContractId::Governance}).back().status, Errc::NotAnAuthority);

    gov(f.a, d.public_key);
    f.mine();
    ASSERT_TRUE(f.chain.is_authority(d.public_key));
    EXPECT_EQ(f.chain.authorities().size(), 4u);
    // height 3 is next: 3 % 4 -> d
    EXPECT_EQ(f.chain.expected_signer(3), d.public_key);
    f.send(f.patient, "set", "y");
    f.chain.mine_block(d, 3);
    EXPECT_TRUE(verify_chain(f.chain.blocks(), f.chain.config().genesis_authorities).ok);
}

TEST(Chain, QueryLogFilters) {
    Fixture f;
    f.send(f.patient, "set", "x");
    f.chain.submit_tx(
        Transaction::make(f.b, ContractId::AccessRegistry, op("grant", "g"), f.chain.next_nonce(f.b.public_key)));
    f.mine();

    EXPECT_EQ(f.chain.query_log({.contract = ContractId::AccessRegistry}).size(), 1u);
    EXPECT_EQ(f.chain.query_log({.activity = "grant"}).size(), 1u);
    EXPECT_EQ(f.chain.query_log({.activity = "set"}).size(), 1u);
    EXPECT_TRUE(f.chain.query_log({key("nobody").public_key}).empty());
    EXPECT_EQ(f.chain.query_log().size(), 2u);
    EXPECT_EQ(f.chain.query_log({.contract = ContractId::AccessRegistry}).front().height, 1u);
}

TEST(Chain, LogIsAppendOnly) {
    Fixture f;
    std::mt19937_64 gen(7);
    std::vector<LogEntry> previous;
    for (int step = 0; step < 200; ++step) {
        switch (gen() % 4) {
            case 0: f.send(f.patient, "set", std::to_string(step)); break;
            case 1: f.send(f.patient, "fail"); break;
            case 2:
                try {
                    f.chain.submit_tx(Transaction::make(f.patient, ContractId::RecordRegistry, op("set"), 1));
                } catch (const Error&) {
                }
                break;
            default:
                if (f.chain.has_pending()) f.mine();
        }
        auto now = f.chain.query_log();
        ASSERT_GE(now.size(), previous.size());
        for (std::size_t i = 0; i < previous.size(); ++i) {
            ASSERT_EQ(now[i].tx, previous[i].tx);
            ASSERT_EQ(now[i].status, previous[i].status);
        }
        previous = std::move(now);
    }
}

TEST(Chain, BlockEncodingRoundTrips) {
    Fixture f;
    f.send(f.patient, "set", "x");
    f.send(f.b, "set", "y");
    f.mine();
    for (const auto& b : f.chain.blocks()) EXPECT_EQ(Block::decode(b.encode()), b);
    EXPECT_EQ(error_of([] { Block::decode(Bytes{1, 2, 3}); }), Errc::MalformedBlock);
}

TEST(Chain, ExportImportVerifies) {
    Fixture f;
    for (int i = 0; i < 5; ++i) {
        f.send(f.patient, "set", std::to_string(i));
        f.mine();
    }
    std::stringstream ss;
    f.chain.export_lines(ss);
    auto blocks = import_lines(ss);
    ASSERT_EQ(blocks.size(), 6u);
    EXPECT_TRUE(std::equal(blocks.begin(), blocks.end(), f.chain.blocks().begin()));
    EXPECT_TRUE(verify_chain(blocks, f.chain.config().genesis_authorities).ok);
}

TEST(Chain, EveryByteMutationFailsVerification) {
    Fixture f;
    for (int i = 0; i < 4; ++i) {
        f.send(f.patient, "set", std::to_string(i));
        if (i % 2) f.send(f.patient, "fail");
        f.mine();
    }
    const auto& auths = f.chain.config().genesis_authorities;
    std::vector<Block> blocks(f.chain.blocks().begin(), f.chain.blocks().end());
    ASSERT_TRUE(verify_chain(blocks, auths).ok);

    std::size_t mutations = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        auto encoded = blocks[bi].encode();
        for (std::size_t i = 0; i < encoded.size(); ++i) {
            auto mutated = encoded;
            mutated[i] ^= 0x01;
            auto copy = blocks;
            try {
                copy[bi] = Block::decode(mutated);
            } catch (const Error&) {
                ++mutations;
                continue;
            }
            auto result = verify_chain(copy, auths);
            ASSERT_FALSE(result.ok) << "block " << bi << " byte " << i;
            ASSERT_GE(result.failed_height, 0u);
            ASSERT_LE(result.failed_height, bi + 1);
            ++mutations;
        }
    }
    EXPECT_GT(mutations, 1000u);
}

TEST(Chain, ReorderedOrDroppedBlocksFail) {
    Fixture f;
    for (int i = 0; i < 3; ++i) {
        f.send(f.patient, "set", std::to_string(i));
        f.mine();
    }
    const auto& auths = f.chain.config().genesis_authorities;
    std::vector<Block> blocks(f.chain.blocks().begin(), f.chain.blocks().end());
    auto dropped = blocks;
    dropped.erase(dropped.begin() + 1);
    EXPECT_FALSE(verify_chain(dropped, auths).ok);
    auto swapped = blocks;
    std::swap(swapped[1], swapped[2]);
    EXPECT_FALSE(verify_chain(swapped, auths).ok);
    EXPECT_FALSE(verify_chain(blocks, std::vector{f.b.public_key, f.a.public_key, f.c.public_key}).ok);
}

TEST(Chain, ReplayReproducesState) {
    Fixture f;
    for (int i = 0; i < 6; ++i) {
        f.send(f.patient, "set", std::to_string(i));
        f.send(f.patient, "fail");
        f.mine();
    }
    ListExecutor fresh;
    auto result = replay_chain(f.chain.blocks(), f.chain.config().genesis_authorities, fresh);
    EXPECT_TRUE(result.ok) << result.reason;
    EXPECT_EQ(fresh.values, f.exec.values);

    std::vector<Block> tampered(f.chain.blocks().begin(), f.chain.blocks().end());
    tampered[2].receipts[1] = Errc::Ok;
    ListExecutor again;
    auto bad = replay_chain(tampered, f.chain.config().genesis_authorities, again);
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.failed_height, 2u);
}

TEST(LightNode, SyncsHeadersAndChecksAnswers) {
    Fixture f;
    LightNode light;
    f.send(f.patient, "set", "x");
    f.mine();
    light.sync(f.chain);
    EXPECT_EQ(light.height(), 1u);
    f.send(f.patient, "set", "y");
    f.mine();
    light.sync(f.chain);
    EXPECT_EQ(light.height(), 2u);
    ASSERT_EQ(light.headers().size(), 3u);
    EXPECT_EQ(light.query_log(f.chain, {f.patient.public_key}).size(), 2u);

    ListExecutor exec;
    Chain forked(ChainConfig{{f.a.public_key, f.b.public_key, f.c.public_key}, false}, exec, f.a, 99);
    EXPECT_EQ(error_of([&] { light.query_log(forked); }), Errc::MalformedBlock);
    LightNode other;
    other.sync(forked);
    EXPECT_EQ(error_of([&] { other.sync(f.chain); }), Errc::MalformedBlock);
}
