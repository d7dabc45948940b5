// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "medchain/base58.hpp"
#include "medchain/hash_codec.hpp"
#include "medchain/linkage.hpp"
#include "medchain/protocol.hpp"
#include "medchain/sim.hpp"

using namespace medchain;
using chain::ContractId;
using protocol::BatchingPolicy;
using protocol::HealthRecord;
using protocol::System;
using protocol::SystemConfig;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

crypto::KeyPair key(std::string_view name) {
    return crypto::derive_keypair(crypto::Fingerprint::from_text(std::string(name) + " acceptance key"));
}

crypto::Fingerprint fp(std::string_view who) {
    return crypto::Fingerprint::from_text(std::string(who) + " right thumb minutiae");
}

std::string random_base58(std::mt19937_64& gen, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, base58::kAlphabet.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += base58::kAlphabet[pick(gen)];
    return out;
}

std::size_t count_ok(const System& sys, ContractId contract) {
    std::size_t n = 0;
    for (const auto& e : sys.chain().query_log()) n += e.tx.contract == contract && e.status == Errc::Ok;
    return n;
}

Outcome codec_exactness() {
    std::mt19937_64 gen(20240601);
    std::mt19937_64 part_rng(7);
    auto start = Clock::now();
    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
        auto text = random_base58(gen, 46);
        if (contracts::join_hash_text(contracts::split_hash(text, part_rng)) != text) ++failures;
        auto real = cas::ContentHash::of(as_bytes(text));
        if (contracts::join_hash(contracts::split_hash(real, part_rng)) != real) ++failures;
    }
    auto secs = seconds_since(start);
    std::ostringstream d;
    d << "20000 round trips, " << failures << " failures, " << secs << " s";
    return {failures == 0 && secs < 5.0, d.str()};
}

Outcome end_to_end_round_trip() {
    auto start = Clock::now();
    System sys;
    for (auto id : {"H1", "H2", "H3"}) sys.hospital_signup(id, std::string(id) + " password", true);
    std::vector<std::string> patients;
    for (int i = 0; i < 10; ++i) patients.push_back(sys.patient_signup(fp("patient-" + std::to_string(i))).patient_id);

    std::mt19937_64 gen(2024);
    std::map<std::string, std::vector<HealthRecord>> created;
    for (int i = 0; i < 100; ++i) {
        auto p = static_cast<std::size_t>(i % 10);
        auto hid = "H" + std::to_string(i % 3 + 1);
        auto rec = protocol::random_health_record(gen, patients[p], hid);
        sys.create_record(hid, patients[p], rec, fp("patient-" + std::to_string(p)));
        created[patients[p]].push_back(rec);
    }
    std::size_t matched = 0;
    for (std::size_t p = 0; p < patients.size(); ++p) {
        auto seen = sys.patient_view_records(patients[p], fp("patient-" + std::to_string(p)));
        auto& want = created[patients[p]];
        for (std::size_t i = 0; i < std::min(seen.size(), want.size()); ++i) matched += seen[i] == want[i];
        if (seen.size() != want.size()) return {false, patients[p] + " saw a different record count"};
    }
    auto secs = seconds_since(start);
    std::ostringstream d;
    d << matched << "/100 records identical in all 13 fields, " << secs << " s";
    return {matched == 100 && secs < 30.0, d.str()};
}

Outcome access_control_fuzz() {
    using namespace contracts;
    auto committee = key("committee");
    auto hospital = key("hospital");
    auto patient = key("patient");
    std::vector<crypto::KeyPair> intruders{key("intruder-1"), key("intruder-2"), key("other-patient")};
    std::map<crypto::PublicKey, crypto::KeyPair> authorities{{committee.public_key, committee},
                                                             {hospital.public_key, hospital}};
    ContractSet state;
    chain::Chain ch(chain::ChainConfig{{committee.public_key}}, state, committee);
    std::uint64_t tick = 0;
    std::mt19937_64 gen(4242);
    auto submit = [&](const crypto::KeyPair& from, ContractId c, Bytes payload) {
        auto tx = chain::Transaction::make(from, c, std::move(payload), ch.next_nonce(from.public_key));
        ch.submit_tx(tx);
        return tx;
    };
    auto mine = [&] { return ch.mine_block(authorities.at(ch.expected_signer(ch.height() + 1)), ++tick).receipts; };
    auto h0 = cas::ContentHash::of(as_bytes(std::string_view("seed record")));
    CombinedKey ck(patient.public_key, hospital.public_key);

    submit(committee, ContractId::Governance, chain::add_authority_payload(hospital.public_key));
    mine();
    submit(hospital, ContractId::RecordRegistry,
           record_store_payload(patient.public_key, split_hash(h0, gen),
                                crypto::sign(patient.private_key, hash_message(h0))));
    std::vector<chain::Transaction> accepted{
        submit(patient, ContractId::AccessRegistry,
               access_grant_payload(ck, split_hash(h0, gen), crypto::sign(patient.private_key, hash_message(h0))))};
    auto setup = mine();
    if (setup != std::vector<Errc>{Errc::Ok, Errc::Ok}) return {false, "setup transactions failed"};
    const auto before = state.dump();
    const auto log_before = ch.log_size();

    std::map<std::string, int> kinds;
    for (int i = 0; i < 1000; ++i) {
        const auto& bad = intruders[gen() % intruders.size()];
        auto h = cas::ContentHash::of(as_bytes("fuzz " + std::to_string(i)));
        switch (gen() % 6) {
            case 0:
                ++kinds["wrong-signer"];
                submit(hospital, ContractId::RecordRegistry,
                       record_store_payload(patient.public_key, split_hash(h, gen),
                                            crypto::sign(bad.private_key, hash_message(h))));
                break;
            case 1:
                ++kinds["unregistered-hospital"];
                submit(bad, ContractId::RecordRegistry,
                       record_store_payload(patient.public_key, split_hash(h, gen),
                                            crypto::sign(patient.private_key, hash_message(h))));
                break;
            case 2: {
                ++kinds["forged-revoke"];
                const auto& sender = gen() % 2 ? hospital : bad;
                submit(sender, ContractId::AccessRegistry,
                       access_revoke_payload(ck, crypto::sign(sender.private_key, ck.bytes()),
                                             crypto::sign(sender.private_key, ck.hospital().bytes()),
                                             split_hash(h0, gen)));
                break;
            }
            case 3:
                ++kinds["forged-grant"];
                submit(bad, ContractId::AccessRegistry,
                       access_grant_payload(ck, split_hash(h, gen), crypto::sign(bad.private_key, hash_message(h))));
                break;
            case 4:
                ++kinds["replayed-nonce"];
                try {
                    ch.submit_tx(accepted[gen() % accepted.size()]);
                } catch (const Error&) {
                }
                break;
            default:
                ++kinds["unregistered-stats"];
                submit(bad, ContractId::DiseaseStats, stats_update_payload({{"flu", "pune"}, {"cold", "pune"}}));
                break;
        }
        if (gen() % 4 == 0) mine();
    }
    if (ch.has_pending()) mine();

    auto log = ch.query_log();
    std::size_t attempts = log.size() - log_before;
    std::size_t flagged = 0;
    for (std::size_t i = log_before; i < log.size(); ++i) flagged += log[i].status != Errc::Ok;
    bool unchanged = state.dump() == before;
    std::ostringstream d;
    d << attempts << " attempts logged, " << flagged << " flagged as failures, state "
      << (unchanged ? "unchanged" : "CHANGED") << " (";
    for (auto it = kinds.begin(); it != kinds.end(); ++it) {
        d << (it == kinds.begin() ? "" : " ") << it->first << "=" << it->second;
    }
    d << ")";
    return {unchanged && attempts == 1000 && flagged == 1000, d.str()};
}

Outcome revocation() {
    SystemConfig c;
    c.kdf_iterations = 256;
    System sys(c);
    for (auto id : {"H1", "H2", "H3"}) sys.hospital_signup(id, "pw", true);
    auto pid = sys.patient_signup(fp("revoking patient")).patient_id;
    auto pfp = fp("revoking patient");
    std::mt19937_64 gen(5);
    sys.create_record("H1", pid, protocol::random_health_record(gen, pid, "H1"), pfp);

    auto compliant_obj = sys.grant_access(pid, pfp, "H2", {0}).at(0);
    bool seen_before = sys.hospital_view_records("H2", "pw", pid).size() == 1;
    sys.revoke_access(pid, pfp, "H2", 0);
    bool empty_after = sys.hospital_view_records("H2", "pw", pid).empty();
    bool compliant_clean = sys.audit_revocation(pid, compliant_obj).empty();

    sys.set_compliant("H3", false);
    auto rogue_obj = sys.grant_access(pid, pfp, "H3", {0}).at(0);
    sys.hospital_view_records("H3", "pw", pid);
    sys.revoke_access(pid, pfp, "H3", 0);
    bool rogue_empty = sys.hospital_view_records("H3", "pw", pid).empty();
    auto found = sys.audit_revocation(pid, rogue_obj);
    bool rogue_found = found == std::set<cas::NodeId>{sys.hospital("H3").node};

    auto script = sim::run_scenario(sim::SimConfig::parse("n_hospitals=3\nkdf_iterations=64\n"),
                                    "create H1 P0001 flu\ngrant P0001 H2 0\nview H2 P0001\nrevoke P0001 H2 0\n"
                                    "view H2 P0001\naudit P0001 H2 0\nnoncompliant H3\ngrant P0001 H3 0\n"
                                    "view H3 P0001\nrevoke P0001 H3 0\naudit P0001 H3 0\n",
                                    true);
    bool scripted = script.exit_status == 0 && script.transcript.find("audit P0001 H2 0 -> ok providers=[] ") !=
                                                   std::string::npos &&
                    script.transcript.find("audit P0001 H3 0 -> ok providers=[H3] ") != std::string::npos &&
                    script.transcript.find("5 view H2 P0001 -> ok records=0 ") != std::string::npos;

    std::ostringstream d;
    d << "view before revoke " << (seen_before ? "ok" : "missing") << ", after revoke "
      << (empty_after && rogue_empty ? "empty" : "NOT EMPTY") << ", compliant audit "
      << (compliant_clean ? "empty" : "non-empty") << ", non-compliant audit "
      << (rogue_found ? "exactly H3's node" : "wrong set") << ", scripted " << (scripted ? "ok" : "mismatch");
    return {seen_before && empty_after && compliant_clean && rogue_empty && rogue_found && scripted, d.str()};
}

Outcome privacy_bound() {
    auto strict = protocol::linkage_attack_estimate(1000, BatchingPolicy::strict2());
    auto none = protocol::linkage_attack_estimate(1000, BatchingPolicy::none());
    std::ostringstream d;
    d << "strict pairwise accuracy " << strict << " over 1000 trials, no batching " << none;
    return {strict >= 0.45 && strict <= 0.55 && none >= 0.95, d.str()};
}

Outcome decoupled_statistics() {
    const std::vector<std::string> diseases{"flu",      "diabetes", "malaria", "dengue", "asthma",
                                            "diabetes", "flu",      "asthma",  "dengue", "malaria"};
    auto run = [&](BatchingPolicy policy) {
        SystemConfig c;
        c.kdf_iterations = 64;
        c.batching = policy;
        auto sys = std::make_unique<System>(c);
        sys->hospital_signup("H1", "pw", true);
        auto pid = sys->patient_signup(fp("stats patient")).patient_id;
        std::mt19937_64 gen(10);
        for (const auto& d : diseases) {
            auto rec = protocol::random_health_record(gen, pid, "H1");
            rec.disease = d;
            sys->create_record("H1", pid, rec, fp("stats patient"));
        }
        sys->flush_disease_batch("H1");
        return sys;
    };
    auto decoupled = run(BatchingPolicy::decoupled(10, 9));
    auto strict = run(BatchingPolicy::strict2());
    auto updates = count_ok(*decoupled, ContractId::DiseaseStats);
    auto records = count_ok(*decoupled, ContractId::RecordRegistry);
    auto total = strict->contracts().stats_total();
    auto held = strict->batch("H1").pending.size();
    std::ostringstream d;
    d << "decoupled(10,9): " << records << " record txs, " << updates << " count updates; strict: sum of counts "
      << total << " for " << diseases.size() << " records, " << held << " held";
    return {records == 10 && updates == 9 && total == diseases.size() && held == 0, d.str()};
}

Outcome chain_integrity() {
    SystemConfig c;
    c.kdf_iterations = 64;
    System sys(c);
    sys.hospital_signup("H1", "pw", true);
    std::mt19937_64 gen(77);
    auto a = sys.patient_signup(fp("a")).patient_id;
    auto b = sys.patient_signup(fp("b")).patient_id;
    sys.create_record("H1", a, protocol::random_health_record(gen, a, "H1"), fp("a"));
    sys.hospital_signup("H2", "pw", true);
    sys.create_record("H2", b, protocol::random_health_record(gen, b, "H2"), fp("b"));
    sys.hospital_signup("H3", "pw", true);
    sys.create_record("H3", a, protocol::random_health_record(gen, a, "H3"), fp("a"));
    sys.grant_access(a, fp("a"), "H2", {0, 1});
    sys.hospital_view_records("H2", "pw", a);
    sys.revoke_access(a, fp("a"), "H2", 1);
    sys.patient_view_records(b, fp("b"));
    try {
        sys.create_record("H1", b, protocol::random_health_record(gen, b, "H1"), fp("a"));
    } catch (const Error&) {
    }
    auto stranger = key("stranger");
    sys.submit_raw(chain::Transaction::make(stranger, ContractId::DiseaseStats,
                                            contracts::stats_update_payload({{"flu", ""}, {"cold", ""}}), 1));
    sys.settle();

    const auto& ch = sys.chain();
    std::vector<chain::Block> blocks(ch.blocks().begin(), ch.blocks().end());
    const auto& genesis = ch.config().genesis_authorities;
    bool verified = chain::verify_chain(blocks, genesis).ok;

    std::size_t mutations = 0, undetected = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        auto encoded = blocks[bi].encode();
        auto end = std::min(blocks.size(), bi + 2);
        std::vector<chain::Block> prefix(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(end));
        for (std::size_t i = 0; i < encoded.size(); ++i) {
            auto mutated = encoded;
            mutated[i] ^= 0x20;
            ++mutations;
            try {
                prefix[bi] = chain::Block::decode(mutated);
            } catch (const Error&) {
                continue;
            }
            if (chain::verify_chain(prefix, genesis).ok) ++undetected;
            prefix[bi] = blocks[bi];
        }
    }

    std::map<Bytes, crypto::PublicKey> governance;
    for (const auto& id : sys.hospital_ids()) {
        governance.emplace(chain::add_authority_payload(sys.hospital(id).public_key), sys.hospital(id).public_key);
    }
    std::vector<crypto::PublicKey> auths(genesis.begin(), genesis.end());
    std::size_t out_of_order = 0;
    for (std::size_t h = 1; h < blocks.size(); ++h) {
        if (blocks[h].header.authority != auths[h % auths.size()]) ++out_of_order;
        for (std::size_t t = 0; t < blocks[h].transactions.size(); ++t) {
            const auto& tx = blocks[h].transactions[t];
            if (tx.contract == ContractId::Governance && blocks[h].receipts[t] == Errc::Ok) {
                auths.push_back(governance.at(tx.payload));
            }
        }
    }

    contracts::ContractSet fresh(sys.contracts().config());
    bool replayed = chain::replay_chain(blocks, genesis, fresh).ok && fresh.dump() == sys.contracts().dump();

    std::ostringstream d;
    d << blocks.size() << " blocks verify " << (verified ? "ok" : "FAILED") << ", " << mutations
      << " single-byte mutations, " << undetected << " undetected, " << out_of_order
      << " signers out of round-robin order, replay " << (replayed ? "bit-identical" : "DIFFERS");
    return {verified && undetected == 0 && out_of_order == 0 && replayed, d.str()};
}

Outcome replication() {
    cas::ContentStore store(99);
    std::vector<cas::NodeId> nodes;
    for (int i = 0; i < 25; ++i) nodes.push_back(store.add_node());
    auto h = store.put(nodes[0], as_bytes(std::string_view("replicated encrypted record")));
    store.replicate(h, 20);
    auto providers = store.find_providers(h);

    std::mt19937_64 gen(8);
    std::size_t trials = 0, failures = 0;
    auto attempt = [&](const std::vector<cas::NodeId>& offline) {
        std::set<cas::NodeId> down(offline.begin(), offline.end());
        cas::NodeId reader = nodes[0];
        for (auto n : nodes) {
            if (!down.contains(n) && !store.holds(n, h)) reader = n;
        }
        if (down.contains(reader)) {
            for (auto n : nodes) {
                if (!down.contains(n)) reader = n;
            }
        }
        bool held = store.holds(reader, h);
        for (auto n : down) store.set_online(n, false);
        ++trials;
        try {
            store.get(reader, h);
        } catch (const Error&) {
            ++failures;
        }
        if (!held && store.holds(reader, h)) store.remove_local(reader, h);
        for (auto n : down) store.set_online(n, true);
    };
    std::vector<cas::NodeId> worst(providers.begin(), providers.end());
    worst.resize(6);
    attempt(worst);
    for (int i = 0; i < 500; ++i) {
        auto shuffled = nodes;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        shuffled.resize(6);
        attempt(shuffled);
    }
    std::ostringstream d;
    d << providers.size() << " providers on 25 nodes, " << trials - failures << "/" << trials
      << " gets succeeded with 6 nodes offline";
    return {providers.size() >= 20 && failures == 0, d.str()};
}

Outcome mode_equivalence() {
    std::string script = "signup-patient a\nsignup-patient b\n";
    for (int i = 0; i < 6; ++i) {
        script += "create H" + std::to_string(i % 3 + 1) + " a\ncreate H" + std::to_string((i + 1) % 3 + 1) + " b\n";
    }
    script += "view a\nview b\ngrant a H2 0 3 5\ngrant b H3 all\nview H2 a\nview H3 b\nview H1 a\n"
              "revoke a H2 3\nview H2 a\nrevoke b H3 0\nview H3 b\ncreate H1 a\nview a\nview H2 a\n";
    auto base = std::string("n_hospitals=3\nkdf_iterations=64\nseed=31\n");
    auto contract = sim::run_scenario(sim::SimConfig::parse(base + "storage_mode=contract\n"), script, true);
    auto map = sim::run_scenario(sim::SimConfig::parse(base + "storage_mode=ipfs-map\n"), script, true);
    auto views = [](const std::string& transcript) {
        std::vector<std::string> out;
        std::istringstream in(transcript);
        for (std::string line; std::getline(in, line);) {
            if (line.find(" view ") != std::string::npos) out.push_back(line.substr(0, line.rfind(" height=")));
        }
        return out;
    };
    auto cv = views(contract.transcript);
    auto mv = views(map.transcript);
    std::ostringstream d;
    d << cv.size() << " view outputs per mode, " << (cv == mv ? "identical" : "DIFFERENT") << ", exit "
      << contract.exit_status << "/" << map.exit_status;
    return {cv == mv && cv.size() == 9 && contract.exit_status == 0 && map.exit_status == 0, d.str()};
}

Outcome benchmarks() {
    auto config = sim::SimConfig::parse("n_hospitals=2\nkdf_iterations=64\nseed=3\n");
    auto rows = sim::bench_retrieval(config, 40, 5);
    bool monotone = true, same_plaintexts = true;
    std::map<protocol::RecordBackend, std::uint64_t> last;
    std::map<std::size_t, const std::vector<HealthRecord>*> first_backend;
    for (const auto& r : rows) {
        if (r.sim_ticks < last[r.backend]) monotone = false;
        last[r.backend] = r.sim_ticks;
        auto [it, fresh] = first_backend.emplace(r.records, &r.plaintexts);
        if (!fresh && *it->second != r.plaintexts) same_plaintexts = false;
        if (r.plaintexts.size() != r.records) same_plaintexts = false;
    }
    auto hashes = sim::bench_hash_retrieval(config, 30, 5);
    bool identical = !hashes.empty();
    for (const auto& h : hashes) {
        identical = identical && h.record_hashes == hashes[0].record_hashes &&
                    h.access_hashes == hashes[0].access_hashes;
    }
    std::ostringstream d;
    d << rows.size() << " retrieval rows, ticks " << (monotone ? "non-decreasing" : "DECREASING")
      << ", plaintexts " << (same_plaintexts ? "identical" : "DIFFER") << " across backends; " << hashes.size()
      << " hash rows, hash sets " << (identical ? "identical" : "DIFFER");
    return {rows.size() == 16 && monotone && same_plaintexts && hashes.size() == 6 && identical, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"codec exactness", codec_exactness},
        {"end-to-end round trip", end_to_end_round_trip},
        {"access control", access_control_fuzz},
        {"revocation", revocation},
        {"privacy bound", privacy_bound},
        {"decoupled statistics", decoupled_statistics},
        {"chain integrity and PoA", chain_integrity},
        {"replication", replication},
        {"mode equivalence", mode_equivalence},
        {"benchmarks", benchmarks},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
