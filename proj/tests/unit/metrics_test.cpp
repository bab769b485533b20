// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rigl/metrics/metrics.hpp"
#include "support/oracles.hpp"

namespace rigl::metrics {
namespace {

using S = std::vector<double>;
using L = std::vector<int>;

TEST(Auc, Examples) {
    EXPECT_EQ(auc(S{0.9, 0.2, 0.7}, L{1, 0, 1}), 1.0);
    EXPECT_EQ(auc(S{0.5, 0.5}, L{1, 0}), 0.5);
    EXPECT_EQ(auc(S{0.1, 0.9}, L{1, 0}), 0.0);
}

TEST(Auc, SingleClassIsUndefined) {
    try {
        auc(S{0.1, 0.4}, L{1, 1});
        FAIL();
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("AUC undefined"), std::string::npos);
    }
}

TEST(Auc, MatchesPairCountingExactly) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 500);
    std::uniform_int_distribution<int> coarse(0, 20), bit(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        S s(n);
        L l(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 == 0 ? coarse(rng) / 20.0 : u(rng);  // half the trials are tie-heavy
            l[i] = bit(rng);
        }
        l[0] = 1;
        l[1] = 0;
        EXPECT_EQ(auc(s, l), testing::auc_pairs(s, l)) << trial;
    }
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 3);
    std::bernoulli_distribution b(0.4);
    for (int trial = 0; trial < 100; ++trial) {
        S s(200), t(200);
        L l(200);
        for (std::size_t i = 0; i < 200; ++i) {
            s[i] = std::round(u(rng) * 10) / 10;
            t[i] = std::exp(2.0 * s[i]) + 7.0;
            l[i] = b(rng);
        }
        l[0] = 1;
        l[1] = 0;
        EXPECT_EQ(auc(s, l), auc(t, l));
    }
}

TEST(Auc, RandomScoresGiveOneHalf) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0, 1);
    std::bernoulli_distribution b(0.5);
    S s(10000);
    L l(10000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u(rng);
        l[i] = b(rng);
    }
    EXPECT_NEAR(auc(s, l), 0.5, 0.02);
}

TEST(Acc, Examples) {
    EXPECT_EQ(acc(S{0.9, 0.1}, L{1, 0}), 1.0);
    EXPECT_EQ(acc(S{0.1, 0.9}, L{1, 0}), 0.0);
    EXPECT_DOUBLE_EQ(acc(S{0.6, 0.4, 0.6}, L{1, 0, 0}), 2.0 / 3.0);
    EXPECT_EQ(acc(S{0.5}, L{1}), 1.0);  // threshold is inclusive
}

TEST(Acc, ComplementaryLabelsSumToOne) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        S s(50);
        L l(50), flipped(50);
        for (std::size_t i = 0; i < 50; ++i) {
            do s[i] = u(rng);
            while (s[i] == 0.5);
            l[i] = u(rng) < 0.5;
            flipped[i] = 1 - l[i];
        }
        EXPECT_DOUBLE_EQ(acc(s, l) + acc(s, flipped), 1.0);
    }
}

TEST(RmseMae, Examples) {
    auto e = rmse_mae(S{0.3, 0.7}, S{0.3, 0.7});
    EXPECT_EQ(e.rmse, 0.0);
    EXPECT_EQ(e.mae, 0.0);
    e = rmse_mae(S{0.5}, S{0.0});
    EXPECT_EQ(e.rmse, 0.5);
    EXPECT_EQ(e.mae, 0.5);
    e = rmse_mae(S{0, 1}, S{1, 1});
    EXPECT_NEAR(e.rmse, 0.7071067811865476, 1e-15);
    EXPECT_EQ(e.mae, 0.5);
    EXPECT_THROW(rmse_mae(S{1}, S{1, 2}), std::invalid_argument);
}

TEST(RmseMae, RmseDominatesMae) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 500; ++trial) {
        S p(1 + trial % 40), t(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = u(rng);
            t[i] = u(rng);
        }
        const auto e = rmse_mae(p, t);
        EXPECT_GE(e.rmse + 1e-15, e.mae);
        EXPECT_GE(e.mae, 0.0);
    }
}

TEST(Report, EmptySplitIsAnError) { EXPECT_THROW(report(Predictions{}), std::invalid_argument); }

TEST(Report, RowFollowsColumnOrder) {
    Predictions p{{0.9, 0.2}, {1, 0}, {0.5}, {0.0}};
    EXPECT_EQ(report_row(report(p)), "1,1,0.5,0.5");
}

}  // namespace
}  // namespace rigl::metrics
