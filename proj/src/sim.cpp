#include "medchain/sim.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "medchain/digest.hpp"

namespace medchain::sim {

namespace {

using protocol::HealthRecord;
using protocol::System;

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    while (!text.empty()) {
        auto nl = text.find('\n');
        out.push_back(text.substr(0, nl));
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return out;
}

std::string strip_comment(std::string_view line) {
    return std::string(trim(line.substr(0, line.find('#'))));
}

bool parse_u64(std::string_view text, std::uint64_t& out) {
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return !text.empty() && ec == std::errc{} && end == text.data() + text.size();
}

std::string at_line(std::size_t line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

std::uint64_t config_number(std::size_t line, std::string_view key, std::string_view value) {
    std::uint64_t v = 0;
    if (!parse_u64(value, v)) throw Error(Errc::InvalidConfig, at_line(line, std::string(key) + " wants a number"));
    return v;
}

std::uint32_t config_u32(std::size_t line, std::string_view key, std::string_view value) {
    auto v = config_number(line, key, value);
    if (v > UINT32_MAX) throw Error(Errc::InvalidConfig, at_line(line, std::string(key) + " out of range"));
    return static_cast<std::uint32_t>(v);
}

std::uint64_t elapsed_us(std::chrono::steady_clock::time_point start) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count());
}

std::string records_summary(const std::vector<HealthRecord>& records) {
    std::string diseases;
    Bytes all;
    for (const auto& r : records) {
        if (!diseases.empty()) diseases += ",";
        diseases += r.disease;
        auto b = r.serialize();
        all.insert(all.end(), b.begin(), b.end());
    }
    auto d = sha256(all);
    return "records=" + std::to_string(records.size()) + " diseases=[" + diseases + "] digest=" +
           to_hex(ByteView(d.data(), 8));
}

// Arity per command: {min, max} argument counts.
const std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> kCommands{
    {"signup-patient", {1, 1}}, {"signup-hospital", {1, 2}}, {"create", {2, 4}},      {"view", {1, 2}},
    {"grant", {3, 64}},         {"revoke", {3, 3}},          {"audit", {3, 3}},       {"flush", {1, 2}},
    {"tick", {1, 1}},           {"offline", {1, 1}},         {"online", {1, 1}},      {"noncompliant", {1, 1}},
    {"compliant", {1, 1}},      {"replicate", {3, 3}},
};

void check_number(const Command& c, std::size_t arg) {
    std::uint64_t v = 0;
    if (!parse_u64(c.args[arg], v)) {
        throw Error(Errc::ParseError, at_line(c.line, c.name + ": '" + c.args[arg] + "' is not a number"));
    }
}

class Runner {
public:
    explicit Runner(const SimConfig& config) : config_(config), sys_(config.system_config()), gen_(config.system.seed) {
        for (std::size_t i = 0; i < config.n_hospitals; ++i) hospitals_.insert("H" + std::to_string(i + 1));
        for (std::size_t i = 0; i < config.n_patients; ++i) {
            char alias[16];
            std::snprintf(alias, sizeof alias, "P%04zu", i + 1);
            signup(alias);
        }
    }

    System& system() { return sys_; }

    std::string execute(const Command& c) {
        const auto& a = c.args;
        if (c.name == "signup-patient") return "ok " + signup(a[0]);
        if (c.name == "signup-hospital") {
            bool approved = a.size() < 2 || a[1] == "approved";
            hospitals_.insert(a[0]);
            sys_.hospital_signup(a[0], hospital_password(a[0]), approved);
            return "ok registered";
        }
        if (c.name == "create") {
            const auto& [pid, fp] = patient(a[1]);
            auto rec = protocol::random_health_record(gen_, pid, a[0]);
            if (a.size() > 2) rec.disease = a[2];
            if (a.size() > 3) rec.location = a[3];
            auto h = sys_.create_record(a[0], pid, rec, fp);
            std::string out = "ok hash=" + h.text();
            if (config_.replication_factor > 0) {
                out += " providers=" + std::to_string(sys_.replicate(h, config_.replication_factor).size());
            }
            return out;
        }
        if (c.name == "view") {
            if (a.size() == 1) {
                const auto& [pid, fp] = patient(a[0]);
                return "ok " + records_summary(sys_.patient_view_records(pid, fp));
            }
            return "ok " +
                   records_summary(sys_.hospital_view_records(a[0], hospital_password(a[0]), patient(a[1]).first));
        }
        if (c.name == "grant") {
            const auto& [pid, fp] = patient(a[0]);
            std::vector<std::size_t> indices;
            if (a.size() == 3 && a[2] == "all") {
                for (std::size_t i = 0; i < sys_.record_hashes(pid).size(); ++i) indices.push_back(i);
            } else {
                for (std::size_t i = 2; i < a.size(); ++i) indices.push_back(std::stoull(a[i]));
            }
            return "ok granted=" + std::to_string(sys_.grant_access(pid, fp, a[1], indices).size());
        }
        if (c.name == "revoke") {
            const auto& [pid, fp] = patient(a[0]);
            auto index = std::stoull(a[2]);
            auto notice = sys_.revoke_access(pid, fp, a[1], index);
            revoked_.insert_or_assign({pid, a[1], index}, notice.object);
            return "ok notice=" + notice.hospital_id;
        }
        if (c.name == "audit") {
            const auto& pid = patient(a[0]).first;
            auto it = revoked_.find({pid, a[1], std::stoull(a[2])});
            if (it == revoked_.end()) throw Error(Errc::NoSuchGrant, "nothing revoked for " + a[0] + " " + a[1]);
            std::string names;
            for (auto node : sys_.audit_revocation(pid, it->second)) {
                names += (names.empty() ? "" : ",") + sys_.node_name(node);
            }
            return "ok providers=[" + names + "]";
        }
        if (c.name == "flush") {
            auto before = sys_.chain().height();
            sys_.flush_disease_batch(a[0], a.size() > 1 && a[1] == "force");
            return sys_.chain().height() == before ? "ok held" : "ok posted";
        }
        if (c.name == "tick") {
            sys_.tick(std::stoull(a[0]));
            return "ok clock=" + std::to_string(sys_.clock());
        }
        if (c.name == "offline" || c.name == "online") {
            sys_.set_online(actor(a[0]), c.name == "online");
            return "ok";
        }
        if (c.name == "noncompliant" || c.name == "compliant") {
            sys_.set_compliant(a[0], c.name == "compliant");
            return "ok";
        }
        if (c.name == "replicate") {
            const auto& pid = patient(a[0]).first;
            auto hashes = sys_.record_hashes(pid);
            auto index = std::stoull(a[1]);
            if (index >= hashes.size()) throw Error(Errc::NoSuchRecord, a[0] + " " + a[1]);
            return "ok providers=" + std::to_string(sys_.replicate(hashes[index], std::stoull(a[2])).size());
        }
        throw Error(Errc::ParseError, at_line(c.line, "unknown command " + c.name));
    }

    void advance() { sys_.tick(config_.block_interval); }

private:
    std::string signup(const std::string& alias) {
        auto fp = patient_fingerprint(alias);
        auto id = sys_.patient_signup(fp).patient_id;
        patients_.insert_or_assign(alias, std::pair{id, fp});
        patients_.insert_or_assign(id, std::pair{id, fp});
        return id;
    }

    const std::pair<std::string, crypto::Fingerprint>& patient(const std::string& name) const {
        auto it = patients_.find(name);
        if (it == patients_.end()) throw Error(Errc::UnknownPatient, name);
        return it->second;
    }

    std::string actor(const std::string& name) const {
        auto it = patients_.find(name);
        return it == patients_.end() ? name : it->second.first;
    }

    const SimConfig& config_;
    System sys_;
    std::mt19937_64 gen_;
    std::set<std::string> hospitals_;
    std::map<std::string, std::pair<std::string, crypto::Fingerprint>> patients_;
    std::map<std::tuple<std::string, std::string, std::size_t>, cas::ContentHash> revoked_;
};

}  // namespace

SimConfig SimConfig::parse(std::string_view text) {
    SimConfig c;
    std::size_t line_no = 0;
    for (auto raw : lines_of(text)) {
        ++line_no;
        auto line = strip_comment(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::ParseError, at_line(line_no, "expected key=value"));
        auto key = std::string(trim(std::string_view(line).substr(0, eq)));
        auto value = std::string(trim(std::string_view(line).substr(eq + 1)));
        auto& s = c.system;
        if (key == "n_hospitals") {
            c.n_hospitals = config_number(line_no, key, value);
        } else if (key == "n_patients") {
            c.n_patients = config_number(line_no, key, value);
        } else if (key == "replication_factor") {
            c.replication_factor = config_number(line_no, key, value);
        } else if (key == "block_interval") {
            c.block_interval = config_number(line_no, key, value);
        } else if (key == "seed" || key == "rng_seed") {
            s.seed = config_number(line_no, key, value);
        } else if (key == "storage_mode") {
            if (value == "contract") {
                s.storage_mode = protocol::StorageMode::Contract;
            } else if (value == "ipfs-map") {
                s.storage_mode = protocol::StorageMode::IpfsMap;
            } else {
                throw Error(Errc::InvalidConfig, at_line(line_no, "storage_mode is contract or ipfs-map"));
            }
        } else if (key == "batching" || key == "batching_policy") {
            try {
                s.batching = protocol::BatchingPolicy::parse(value);
            } catch (const Error& e) {
                throw Error(Errc::InvalidConfig, at_line(line_no, e.what()));
            }
        } else if (key == "backend") {
            if (value == "cas") {
                s.backend = protocol::RecordBackend::Cas;
            } else if (value == "kv") {
                s.backend = protocol::RecordBackend::KeyValue;
            } else {
                throw Error(Errc::InvalidConfig, at_line(line_no, "backend is cas or kv"));
            }
        } else if (key == "ipns_grants") {
            if (value != "true" && value != "false") {
                throw Error(Errc::InvalidConfig, at_line(line_no, "ipns_grants is true or false"));
            }
            s.ipns_grants = value == "true";
        } else if (key == "kdf_iterations") {
            s.kdf_iterations = config_u32(line_no, key, value);
        } else if (key == "min_hop_ticks") {
            s.latency.min_hop_ticks = config_u32(line_no, key, value);
        } else if (key == "max_hop_ticks") {
            s.latency.max_hop_ticks = config_u32(line_no, key, value);
        } else if (key == "bytes_per_tick") {
            s.latency.bytes_per_tick = config_u32(line_no, key, value);
        } else if (key == "kv_round_trip_ticks") {
            s.kv_round_trip_ticks = config_u32(line_no, key, value);
        } else if (key == "storage_nodes") {
            s.storage_nodes = config_number(line_no, key, value);
        } else if (key == "bench_max_records") {
            c.bench_max_records = config_number(line_no, key, value);
        } else if (key == "bench_record_step") {
            c.bench_record_step = config_number(line_no, key, value);
        } else if (key == "bench_max_participants") {
            c.bench_max_participants = config_number(line_no, key, value);
        } else if (key == "bench_participant_step") {
            c.bench_participant_step = config_number(line_no, key, value);
        } else {
            throw Error(Errc::ParseError, at_line(line_no, "unknown key " + key));
        }
    }
    if (c.n_hospitals == 0) throw Error(Errc::InvalidConfig, "n_hospitals must be at least 1");
    if (c.system.latency.min_hop_ticks > c.system.latency.max_hop_ticks || c.system.latency.bytes_per_tick == 0) {
        throw Error(Errc::InvalidConfig, "latency parameters");
    }
    return c;
}

SimConfig SimConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::InvalidConfig, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

protocol::SystemConfig SimConfig::system_config() const {
    auto s = system;
    s.genesis_hospitals.clear();
    for (std::size_t i = 0; i < n_hospitals; ++i) {
        auto id = "H" + std::to_string(i + 1);
        s.genesis_hospitals.emplace_back(id, hospital_password(id));
    }
    return s;
}

std::string hospital_password(std::string_view hospital_id) { return "password-" + std::string(hospital_id); }

crypto::Fingerprint patient_fingerprint(std::string_view alias) {
    return crypto::Fingerprint::from_text("simulated fingerprint of " + std::string(alias));
}

std::vector<Command> parse_script(std::string_view text) {
    std::vector<Command> out;
    std::size_t line_no = 0;
    for (auto raw : lines_of(text)) {
        ++line_no;
        std::istringstream words(strip_comment(raw));
        Command c;
        c.line = line_no;
        if (!(words >> c.name)) continue;
        for (std::string w; words >> w;) c.args.push_back(w);

        auto arity = kCommands.find(c.name);
        if (arity == kCommands.end()) throw Error(Errc::ParseError, at_line(line_no, "unknown command " + c.name));
        auto [lo, hi] = arity->second;
        if (c.args.size() < lo || c.args.size() > hi) {
            throw Error(Errc::ParseError, at_line(line_no, c.name + ": wrong number of arguments"));
        }
        if (c.name == "signup-hospital" && c.args.size() == 2 && c.args[1] != "approved" &&
            c.args[1] != "unapproved") {
            throw Error(Errc::ParseError, at_line(line_no, "signup-hospital: expected approved or unapproved"));
        }
        if (c.name == "flush" && c.args.size() == 2 && c.args[1] != "force") {
            throw Error(Errc::ParseError, at_line(line_no, "flush: expected force"));
        }
        if (c.name == "grant" && !(c.args.size() == 3 && c.args[2] == "all")) {
            for (std::size_t i = 2; i < c.args.size(); ++i) check_number(c, i);
        }
        if (c.name == "revoke" || c.name == "audit") check_number(c, 2);
        if (c.name == "tick") check_number(c, 0);
        if (c.name == "replicate") {
            check_number(c, 1);
            check_number(c, 2);
        }
        out.push_back(std::move(c));
    }
    return out;
}

ScenarioResult run_scenario(const SimConfig& config, std::string_view script, bool strict) {
    auto commands = parse_script(script);
    Runner runner(config);
    auto& sys = runner.system();

    ScenarioResult result;
    std::ostringstream t;
    t << "# scenario seed=" << config.system.seed << " mode=" << protocol::to_string(config.system.storage_mode)
      << " batching=" << config.system.batching.text() << " backend=" << protocol::to_string(config.system.backend)
      << " hospitals=" << config.n_hospitals << " patients=" << config.n_patients << "\n";
    t << "genesis height=" << sys.chain().height() << " authorities=" << sys.chain().authorities().size() << "\n";
    for (const auto& c : commands) {
        t << c.line << " " << c.name;
        for (const auto& a : c.args) t << " " << a;
        t << " -> ";
        bool failed = false;
        try {
            t << runner.execute(c);
        } catch (const Error& e) {
            t << "error " << e.what();
            failed = true;
        }
        runner.advance();
        t << " height=" << sys.chain().height() << "\n";
        if (failed) {
            ++result.failures;
            if (strict) {
                result.exit_status = 1;
                t << "aborted at line " << c.line << "\n";
                break;
            }
        }
    }
    t << "end height=" << sys.chain().height() << " failures=" << result.failures << "\n";
    result.transcript = t.str();
    return result;
}

std::vector<RetrievalRow> bench_retrieval(const SimConfig& config, std::size_t max_records, std::size_t step) {
    if (step == 0) throw Error(Errc::InvalidConfig, "step must be at least 1");
    std::vector<RetrievalRow> rows;
    for (std::size_t k = step; k <= max_records; k += step) {
        for (auto backend : {protocol::RecordBackend::Cas, protocol::RecordBackend::KeyValue}) {
            auto sc = config.system_config();
            sc.backend = backend;
            System sys(sc);
            auto fp = patient_fingerprint("bench-patient");
            auto pid = sys.patient_signup(fp).patient_id;
            std::mt19937_64 gen(config.system.seed);
            for (std::size_t i = 0; i < k; ++i) {
                sys.create_record("H1", pid, protocol::random_health_record(gen, pid, "H1"), fp);
            }
            RetrievalRow row;
            row.records = k;
            row.backend = backend;
            auto ticks = sys.record_fetch_ticks();
            auto start = std::chrono::steady_clock::now();
            row.plaintexts = sys.patient_view_records(pid, fp);
            row.wall_us = elapsed_us(start);
            row.sim_ticks = sys.record_fetch_ticks() - ticks;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string retrieval_csv(const std::vector<RetrievalRow>& rows) {
    std::ostringstream out;
    out << "records,backend,sim_ticks,wall_us\n";
    for (const auto& r : rows) {
        out << r.records << "," << protocol::to_string(r.backend) << "," << r.sim_ticks << "," << r.wall_us << "\n";
    }
    return out.str();
}

std::vector<HashRow> bench_hash_retrieval(const SimConfig& config, std::size_t max_participants, std::size_t step) {
    if (step == 0) throw Error(Errc::InvalidConfig, "step must be at least 1");
    constexpr std::size_t kProbeRecords = 4;
    std::vector<HashRow> rows;
    for (std::size_t p = step; p <= max_participants; p += step) {
        auto cfg = config;
        cfg.n_hospitals = std::max<std::size_t>(cfg.n_hospitals, 2);
        System sys(cfg.system_config());
        std::mt19937_64 gen(config.system.seed);

        auto probe_fp = patient_fingerprint("probe");
        auto probe = sys.patient_signup(probe_fp).patient_id;
        for (std::size_t i = 0; i < kProbeRecords; ++i) {
            sys.create_record("H1", probe, protocol::random_health_record(gen, probe, "H1"), probe_fp);
        }
        sys.grant_access(probe, probe_fp, "H2", {0, 2});
        for (std::size_t i = 1; i < p; ++i) {
            auto fp = patient_fingerprint("participant-" + std::to_string(i));
            auto pid = sys.patient_signup(fp).patient_id;
            sys.create_record("H1", pid, protocol::random_health_record(gen, pid, "H1"), fp);
        }

        HashRow row;
        row.participants = p;
        auto start = std::chrono::steady_clock::now();
        row.record_hashes = sys.record_hashes(probe);
        row.access_hashes = sys.access_hashes("H2", probe);
        row.wall_us = elapsed_us(start);
        std::uint64_t bytes = 0;
        for (const auto& h : row.record_hashes) bytes += h.text().size();
        for (const auto& h : row.access_hashes) bytes += h.text().size();
        const auto& sc = config.system;
        auto per_tick = sc.latency.bytes_per_tick;
        row.sim_ticks = 2 * sc.kv_round_trip_ticks + (bytes + per_tick - 1) / per_tick;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string hash_csv(const std::vector<HashRow>& rows) {
    std::ostringstream out;
    out << "participants,record_hashes,access_hashes,hash_digest,sim_ticks,wall_us\n";
    for (const auto& r : rows) {
        Bytes all;
        for (const auto* list : {&r.record_hashes, &r.access_hashes}) {
            for (const auto& h : *list) {
                auto t = h.text();
                all.insert(all.end(), t.begin(), t.end());
                all.push_back('\n');
            }
        }
        auto d = sha256(all);
        out << r.participants << "," << r.record_hashes.size() << "," << r.access_hashes.size() << ","
            << to_hex(ByteView(d.data(), 8)) << "," << r.sim_ticks << "," << r.wall_us << "\n";
    }
    return out.str();
}

}  // namespace medchain::sim
