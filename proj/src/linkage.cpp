#include "medchain/linkage.hpp"

#include <algorithm>
#include <numeric>

namespace medchain::protocol {

namespace {

constexpr std::uint32_t kSimulationKdfIterations = 32;

double choose(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

std::vector<std::string> stats_diseases(const Bytes& payload) {
    ByteReader r(payload, Errc::MalformedTransaction);
    if (r.str() != contracts::kStatsUpdateOp) return {};
    std::vector<std::string> out(r.u32());
    for (auto& d : out) {
        d = r.str();
        r.str();
    }
    return out;
}

void attribute(std::size_t first_record, std::size_t records, const std::vector<std::string>& increments,
               std::vector<LinkGuess>& out) {
    const auto m = increments.size();
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = std::min(i, records - 1);
        if (m < records) {
            double best = -1.0;
            for (std::size_t c = 0; c < records; ++c) {
                auto p = decoupled_link_probability(i, c, records, m);
                if (p > best) best = p, j = c;
            }
        }
        out.push_back({increments[i], first_record + j});
    }
}

}  // namespace

double decoupled_link_probability(std::size_t i, std::size_t j, std::size_t n, std::size_t m) {
    if (m == 0 || i >= m || j >= n || j < i || n - 1 - j < m - 1 - i) return 0.0;
    return choose(j, i) * choose(n - 1 - j, m - 1 - i) / choose(n, m);
}

std::vector<LinkGuess> observe_linkage(const std::vector<chain::LogEntry>& log, const crypto::PublicKey& hospital) {
    std::vector<LinkGuess> out;
    std::size_t records = 0;
    std::size_t run_start = 0;
    std::vector<std::string> increments;
    for (const auto& e : log) {
        if (e.status != Errc::Ok || e.tx.sender != hospital) continue;
        if (e.tx.contract == chain::ContractId::RecordRegistry || e.tx.contract == chain::ContractId::MapPointer) {
            if (!increments.empty()) {
                attribute(run_start, records - run_start, increments, out);
                increments.clear();
                run_start = records;
            }
            ++records;
        } else if (e.tx.contract == chain::ContractId::DiseaseStats) {
            for (auto& d : stats_diseases(e.tx.payload)) increments.push_back(std::move(d));
        }
    }
    if (!increments.empty() && records > run_start) attribute(run_start, records - run_start, increments, out);
    return out;
}

double linkage_attack_estimate(std::size_t trials, const BatchingPolicy& policy, std::uint64_t seed) {
    if (trials < 100) throw Error(Errc::InvalidConfig, "linkage estimate needs at least 100 trials");

    SystemConfig config;
    config.seed = seed;
    config.batching = policy;
    config.kdf_iterations = kSimulationKdfIterations;
    System sys(config);
    const auto& hospital = sys.hospital_signup("H1", "linkage-observer", true);
    auto fp = crypto::Fingerprint::from_text("linkage-simulated-patient");
    auto patient_id = sys.patient_signup(fp).patient_id;

    std::size_t pool = 10;
    if (policy.kind == BatchingPolicy::Kind::Decoupled) pool = std::max<std::size_t>(pool, policy.n_hashes);
    std::vector<std::string> names(pool);
    for (std::size_t i = 0; i < pool; ++i) names[i] = "condition-" + std::to_string(i);

    std::mt19937_64 gen(seed ^ 0x6c696e6b616765ULL);
    std::vector<std::string> truth;
    for (std::size_t t = 0; t < trials; ++t) {
        std::shuffle(names.begin(), names.end(), gen);
        std::size_t batch = 1;
        if (policy.kind == BatchingPolicy::Kind::Strict2) batch = 2;
        if (policy.kind == BatchingPolicy::Kind::Decoupled) batch = policy.n_hashes;
        for (std::size_t k = 0; k < batch; ++k) {
            auto rec = random_health_record(gen, patient_id, "H1");
            rec.disease = names[k];
            sys.create_record("H1", patient_id, rec, fp);
            truth.push_back(rec.disease);
        }
    }
    sys.flush_disease_batch("H1");

    auto guesses = observe_linkage(sys.chain().query_log(), hospital.public_key);
    if (guesses.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& g : guesses) correct += g.record < truth.size() && truth[g.record] == g.disease;
    return static_cast<double>(correct) / static_cast<double>(guesses.size());
}

}  // namespace medchain::protocol
