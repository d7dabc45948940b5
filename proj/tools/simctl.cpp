#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "medchain/linkage.hpp"
#include "medchain/sim.hpp"

using namespace medchain;

namespace {

constexpr int kOk = 0;
constexpr int kScenarioFailure = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::InvalidConfig, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::InvalidConfig, "cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medchain network simulator"};
    app.require_subcommand(1);

    std::string config_path, script_path, out_path, target, batching = "strict2";
    bool strict = false;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "Run a scenario script and print its transcript");
    run->add_option("--config", config_path, "key=value config file")->required();
    run->add_option("--script", script_path, "scenario script")->required();
    run->add_option("--out", out_path, "transcript file (default stdout)");
    run->add_flag("--strict", strict, "abort on the first failing command");

    auto* bench = app.add_subcommand("bench", "Emit benchmark CSV");
    bench->add_option("target", target, "retrieval or hashes")
        ->required()
        ->check(CLI::IsMember({"retrieval", "hashes"}));
    bench->add_option("--config", config_path, "key=value config file")->required();
    bench->add_option("--out", out_path, "CSV file (default stdout)");

    auto* linkage = app.add_subcommand("linkage", "Estimate linkage attack accuracy");
    linkage->add_option("--trials", trials, "batches to simulate")->check(CLI::Range(100, 1000000));
    linkage->add_option("--batching", batching, "strict2, none or decoupled(n,m)");
    linkage->add_option("--seed", seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) {
            auto config = sim::SimConfig::load(config_path);
            auto result = sim::run_scenario(config, read_file(script_path), strict);
            write_out(out_path, result.transcript);
            return result.exit_status == 0 ? kOk : kScenarioFailure;
        }
        if (*bench) {
            auto config = sim::SimConfig::load(config_path);
            if (target == "retrieval") {
                write_out(out_path, sim::retrieval_csv(sim::bench_retrieval(config, config.bench_max_records,
                                                                            config.bench_record_step)));
            } else {
                write_out(out_path, sim::hash_csv(sim::bench_hash_retrieval(config, config.bench_max_participants,
                                                                            config.bench_participant_step)));
            }
            return kOk;
        }
        auto policy = protocol::BatchingPolicy::parse(batching);
        std::cout << "policy=" << policy.text() << " trials=" << trials
                  << " accuracy=" << protocol::linkage_attack_estimate(trials, policy, seed) << "\n";
        return kOk;
    } catch (const Error& e) {
        std::cerr << "simctl: " << e.what() << "\n";
        return e.code() == Errc::ParseError || e.code() == Errc::InvalidConfig ? kUsage : kScenarioFailure;
    }
}
