#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "medchain/protocol.hpp"

namespace medchain::sim {

struct SimConfig {
    std::size_t n_hospitals = 2;
    std::size_t n_patients = 2;
    /// Applied to every created record when non-zero.
    std::size_t replication_factor = 0;
    /// Logical ticks the clock advances after each script command.
    std::uint64_t block_interval = 1;
    protocol::SystemConfig system{};

    std::size_t bench_max_records = 50;
    std::size_t bench_record_step = 10;
    std::size_t bench_max_participants = 20;
    std::size_t bench_participant_step = 5;

    /// key=value lines, '#' comments. Throws ParseError (unknown key, missing
    /// '=') or InvalidConfig (bad value), with the line number in the message.
    static SimConfig parse(std::string_view text);
    static SimConfig load(const std::filesystem::path& path);

    /// System config with hospitals H1..Hn seated at genesis.
    protocol::SystemConfig system_config() const;
};

std::string hospital_password(std::string_view hospital_id);
crypto::Fingerprint patient_fingerprint(std::string_view alias);

struct Command {
    std::size_t line = 0;
    std::string name;
    std::vector<std::string> args;
};

/// Throws ParseError ("line N: ...") on an unknown command or bad arguments.
std::vector<Command> parse_script(std::string_view text);

struct ScenarioResult {
    int exit_status = 0;
    std::size_t failures = 0;
    std::string transcript;
};

/// Runs the script against a fresh network. Failing commands are reported on
/// their transcript line; with `strict` the first failure aborts the run with
/// exit status 1. Throws ParseError before running anything if the script is bad.
ScenarioResult run_scenario(const SimConfig& config, std::string_view script, bool strict = false);

struct RetrievalRow {
    std::size_t records = 0;
    protocol::RecordBackend backend = protocol::RecordBackend::Cas;
    std::uint64_t sim_ticks = 0;
    std::uint64_t wall_us = 0;
    std::vector<protocol::HealthRecord> plaintexts;
};

/// For k = step, 2*step, ... <= max_records, times one patient view of k
/// records under each backend on a fresh network.
std::vector<RetrievalRow> bench_retrieval(const SimConfig& config, std::size_t max_records, std::size_t step);
std::string retrieval_csv(const std::vector<RetrievalRow>& rows);

struct HashRow {
    std::size_t participants = 0;
    std::vector<cas::ContentHash> record_hashes;
    std::vector<cas::ContentHash> access_hashes;
    std::uint64_t sim_ticks = 0;
    std::uint64_t wall_us = 0;
};

/// For each participant count, looks up one probe patient's record and access
/// lists on a network with that many patients.
std::vector<HashRow> bench_hash_retrieval(const SimConfig& config, std::size_t max_participants, std::size_t step);
std::string hash_csv(const std::vector<HashRow>& rows);

}  // namespace medchain::sim
