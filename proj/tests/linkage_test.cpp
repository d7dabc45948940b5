#include <gtest/gtest.h>

#include <bit>
#include <chrono>

#include "medchain/linkage.hpp"

using namespace medchain;
using namespace medchain::protocol;

namespace {

// Exhaustive oracle: enumerate every kept subset of size m out of n, and for each
// increment position pick the record index it most often maps to.
double enumerated_map_accuracy(unsigned n, unsigned m) {
    std::vector<std::vector<unsigned>> hits(m, std::vector<unsigned>(n, 0));
    unsigned subsets = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<unsigned>(std::popcount(mask)) != m) continue;
        ++subsets;
        unsigned i = 0;
        for (unsigned j = 0; j < n; ++j) {
            if (mask & (1u << j)) ++hits[i++][j];
        }
    }
    unsigned best = 0;
    for (const auto& row : hits) best += *std::max_element(row.begin(), row.end());
    return static_cast<double>(best) / (static_cast<double>(subsets) * m);
}

}  // namespace

TEST(Linkage, OracleValuesFrozen) {
    EXPECT_DOUBLE_EQ(enumerated_map_accuracy(10, 9), 65.0 / 90.0);
    EXPECT_DOUBLE_EQ(enumerated_map_accuracy(2, 2), 1.0);
    EXPECT_DOUBLE_EQ(enumerated_map_accuracy(4, 2), 6.0 / 12.0);
}

TEST(Linkage, ProbabilityMatchesEnumeration) {
    for (unsigned n = 1; n <= 8; ++n) {
        for (unsigned m = 1; m <= n; ++m) {
            std::vector<std::vector<unsigned>> hits(m, std::vector<unsigned>(n, 0));
            unsigned subsets = 0;
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                if (static_cast<unsigned>(std::popcount(mask)) != m) continue;
                ++subsets;
                unsigned i = 0;
                for (unsigned j = 0; j < n; ++j) {
                    if (mask & (1u << j)) ++hits[i++][j];
                }
            }
            for (unsigned i = 0; i < m; ++i) {
                double row = 0;
                for (unsigned j = 0; j < n; ++j) {
                    auto expected = static_cast<double>(hits[i][j]) / subsets;
                    EXPECT_NEAR(decoupled_link_probability(i, j, n, m), expected, 1e-12)
                        << n << " " << m << " " << i << " " << j;
                    row += decoupled_link_probability(i, j, n, m);
                }
                EXPECT_NEAR(row, 1.0, 1e-12);
            }
        }
    }
}

TEST(Linkage, StrictPairwiseIsHalf) {
    auto start = std::chrono::steady_clock::now();
    auto acc = linkage_attack_estimate(1000, BatchingPolicy::strict2());
    EXPECT_GE(acc, 0.45);
    EXPECT_LE(acc, 0.55);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(30));
}

TEST(Linkage, NoBatchingIsPerfect) {
    EXPECT_GE(linkage_attack_estimate(200, BatchingPolicy::none()), 0.95);
}

TEST(Linkage, DecoupledMatchesCombinatorics) {
    auto acc = linkage_attack_estimate(150, BatchingPolicy::decoupled(10, 9), 7);
    EXPECT_LT(acc, 1.0);
    EXPECT_NEAR(acc, 65.0 / 90.0, 0.05);
}

TEST(Linkage, Deterministic) {
    EXPECT_EQ(linkage_attack_estimate(100, BatchingPolicy::strict2(), 3),
              linkage_attack_estimate(100, BatchingPolicy::strict2(), 3));
}

TEST(Linkage, RejectsFewTrials) {
    EXPECT_THROW(linkage_attack_estimate(99, BatchingPolicy::strict2()), Error);
}
