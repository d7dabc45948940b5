#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "medchain/chain.hpp"
#include "medchain/protocol.hpp"

namespace medchain::protocol {

/// One disease increment as seen on chain and the record transaction the
/// observer attributes it to (index into the hospital's record transactions).
struct LinkGuess {
    std::string disease;
    std::size_t record = 0;
};

/// Probability that the i-th posted increment belongs to the j-th of n record
/// transactions when m of them were kept uniformly at random, in order.
double decoupled_link_probability(std::size_t i, std::size_t j, std::size_t n, std::size_t m);

/// Observer reading one hospital's successful transactions. Increments posted
/// after a run of record transactions are attributed to that run: positionally
/// when there are at least as many increments as records, otherwise by the most
/// likely record under random dropping (lowest index on ties).
std::vector<LinkGuess> observe_linkage(const std::vector<chain::LogEntry>& log, const crypto::PublicKey& hospital);

/// Fraction of posted increments the observer attributes to a record of that
/// disease. One trial is one batch: a pair of distinct diseases (strict), one
/// record (none), or one window of n_hashes distinct diseases (decoupled).
/// Throws InvalidConfig if trials < 100.
double linkage_attack_estimate(std::size_t trials, const BatchingPolicy& policy, std::uint64_t seed = 1);

}  // namespace medchain::protocol
