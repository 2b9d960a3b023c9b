#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <lossyci/common_info.hpp>
#include <lossyci/shannon.hpp>

#include "oracles.hpp"

using namespace lossyci;

namespace {

const Alphabet bit = Alphabet::indexed(2);

JointDistribution source(std::vector<double> p, std::size_t n1, std::size_t n2) {
    return JointDistribution::validate(std::move(p), {{"X1", Alphabet::indexed(n1)}, {"X2", Alphabet::indexed(n2)}});
}

// Z1 = X1, Z2 = X2.
JointDistribution with_copies(const JointDistribution& src) {
    return attach(attach(src, Channel::copy(src.variable("X1"), "Z1")), Channel::copy(src.variable("X2"), "Z2"));
}

JointDistribution with_maps(const JointDistribution& src, const std::vector<std::size_t>& f1, std::size_t m1,
                            const std::vector<std::size_t>& f2, std::size_t m2) {
    const auto a = attach(src, Channel::deterministic({src.variable("X1")}, {{"Z1", Alphabet::indexed(m1)}}, f1));
    return attach(a, Channel::deterministic({src.variable("X2")}, {{"Z2", Alphabet::indexed(m2)}}, f2));
}

JointDistribution block_diagonal() {
    std::vector<double> p(16, 0.0);
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) p[(2 * b + i) * 4 + 2 * b + j] = 0.125;
    return source(p, 4, 4);
}

}  // namespace

TEST(CommonPart, Examples) {
    const auto bd = gk_common_part(block_diagonal());
    EXPECT_EQ(bd.components, 2u);
    EXPECT_EQ(bd.x1_label, (std::vector<int>{0, 0, 1, 1}));
    const auto ds = gk_common_part(source({0.45, 0.05, 0.05, 0.45}, 2, 2));
    EXPECT_EQ(ds.components, 1u);
    std::vector<double> id(9, 0.0);
    for (int i = 0; i < 3; ++i) id[i * 3 + i] = 1.0 / 3.0;
    EXPECT_EQ(gk_common_part(source(id, 3, 3)).components, 3u);
}

TEST(CommonPart, LabelChannelsAgreeOnSupport) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 50; ++t) {
        const auto j = oracle::random_joint({4, 4}, rng, 0.6, {"X1", "X2"});
        const auto cp = gk_common_part(j);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < 4; ++k) {
                if (j[i * 4 + k] <= 0.0) {
                    EXPECT_EQ(cp.component_of[i * 4 + k], -1);
                    continue;
                }
                EXPECT_EQ(cp.x1_label[i], cp.x2_label[k]);
                EXPECT_EQ(cp.component_of[i * 4 + k], cp.x1_label[i]);
            }
    }
}

TEST(GkLower, Examples) {
    const auto copy = with_copies(source({0.5, 0.0, 0.0, 0.5}, 2, 2));
    EXPECT_NEAR(gk_lower(copy).objective, 1.0, 1e-12);
    const auto full = with_copies(source({0.45, 0.05, 0.05, 0.45}, 2, 2));
    EXPECT_EQ(gk_lower(full).objective, 0.0);
    const auto bd = with_copies(block_diagonal());
    const auto s = gk_lower(bd);
    EXPECT_NEAR(s.objective, 1.0, 1e-12);
    EXPECT_TRUE(s.feasible);
    // Z1 merges the two blocks: the common part is lost.
    const auto merged = with_maps(block_diagonal(), {0, 1, 0, 1}, 2, {0, 1, 2, 3}, 4);
    EXPECT_EQ(gk_lower(merged).objective, 0.0);
}

TEST(GkLower, MonotoneOverNestedEncoders) {
    // Three blocks; each step merges more reconstruction symbols across blocks.
    std::vector<double> p(36, 0.0);
    const std::vector<double> mass{0.2, 0.3, 0.5};
    for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) p[(2 * b + i) * 6 + 2 * b + j] = mass[b] / 4.0;
    const auto src = source(p, 6, 6);
    const std::vector<std::vector<std::size_t>> maps{{0, 1, 2, 3, 4, 5}, {0, 0, 1, 1, 2, 2}, {0, 0, 1, 1, 1, 1}, {0, 0, 0, 0, 0, 0}};
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& f : maps) {
        const auto j = with_maps(src, f, 6, {0, 1, 2, 3, 4, 5}, 6);
        const double k = gk_lower(j).objective;
        EXPECT_LE(k, prev + 1e-12);
        prev = k;
    }
    EXPECT_EQ(prev, 0.0);
}

TEST(GkLower, BelowMiddleTerm) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const auto src = oracle::random_joint({3, 3}, rng, 0.5, {"X1", "X2"});
        const auto j = attach(attach(src, oracle::random_channel({src.variable("X1")}, {{"Z1", bit}}, rng)),
                              oracle::random_channel({src.variable("X2")}, {{"Z2", bit}}, rng));
        const auto s = gk_lower(j);
        if (s.feasible) EXPECT_LE(s.objective, mutual_information(j, "Z1", "Z2") + 1e-6);
    }
}

TEST(GkBruteforce, Examples) {
    EXPECT_NEAR(gk_bruteforce(with_copies(source({0.5, 0.0, 0.0, 0.5}, 2, 2)), 2, 1e-12, 0).best, 1.0, 1e-12);
    EXPECT_NEAR(gk_bruteforce(with_copies(source({0.45, 0.05, 0.05, 0.45}, 2, 2)), 2, 1e-12, 4).best, 0.0, 1e-12);
    const auto merged = with_maps(block_diagonal(), {0, 1, 0, 1}, 2, {0, 1, 2, 3}, 4);
    EXPECT_EQ(gk_bruteforce(merged, 2, 1e-12, 0).best, 0.0);
    EXPECT_THROW(gk_bruteforce(merged, 4, 1e-12, 50, 1e3), ValidationError);
}

TEST(GkBruteforce, LowerBoundNeverLosesToDeterministicMaps) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 30; ++t) {
        const auto src = oracle::random_joint({3, 3}, rng, 0.55, {"X1", "X2"});
        const auto j = with_maps(src, {rng() % 3, rng() % 3, rng() % 3}, 3, {rng() % 3, rng() % 3, rng() % 3}, 3);
        EXPECT_GE(gk_lower(j).objective, gk_bruteforce(j, 3, 1e-12, 0).deterministic - 1e-9);
    }
}

TEST(WynerUpper, Examples) {
    const auto copy = with_copies(source({0.5, 0.0, 0.0, 0.5}, 2, 2));
    WynerOptions two;
    two.u_card = 2;
    EXPECT_NEAR(wyner_upper(copy, two).objective, 1.0, 1e-6);
    WynerOptions one;
    one.u_card = 1;
    const auto indep = with_copies(source({0.06, 0.14, 0.24, 0.56}, 2, 2));
    const auto s = wyner_upper(indep, one);
    EXPECT_TRUE(s.feasible);
    EXPECT_NEAR(s.objective, 0.0, 1e-9);
}

TEST(WynerUpper, DsbsClosedFormAndBruteforce) {
    const auto j = with_copies(source({0.45, 0.05, 0.05, 0.45}, 2, 2));
    WynerOptions two;
    two.u_card = 2;
    const auto s = wyner_upper(j, two);
    EXPECT_TRUE(s.feasible);
    EXPECT_NEAR(s.objective, oracle::dsbs_wyner(0.1), 1e-3);
    const auto b = wyner_bruteforce(j, 2, 100);
    EXPECT_NEAR(s.objective, b.objective, 1e-3);
}

TEST(WynerUpper, AboveMiddleTermForDeterministicEncoders) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 20; ++t) {
        const auto src = oracle::random_joint({3, 3}, rng, 0.3, {"X1", "X2"});
        const auto j = with_maps(src, {rng() % 2, rng() % 2, rng() % 2}, 2, {rng() % 3, rng() % 3, rng() % 3}, 3);
        const auto s = wyner_upper(j);
        ASSERT_TRUE(s.feasible);
        EXPECT_LT(s.residuals.encoder_markov, 1e-9);
        EXPECT_GE(s.objective, mutual_information(j, "Z1", "Z2") - 1e-6);
    }
}

TEST(WynerUpper, DefaultCardinalityAlwaysFeasible) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 20; ++t) {
        const auto src = oracle::random_joint({3, 2}, rng, 0.0, {"X1", "X2"});
        const auto j = attach(src, oracle::random_channel({src.variable("X1"), src.variable("X2")},
                                                          {{"Z1", Alphabet::indexed(3)}, {"Z2", bit}}, rng));
        const auto s = wyner_upper(j);
        EXPECT_EQ(s.u_cardinality, 6u);
        EXPECT_LT(s.marginal_match_residual, 1e-6);
        EXPECT_LT(s.residuals.conditional_independence, 1e-6);
        EXPECT_LT(s.residuals.reconstruction_markov, 1e-9);
    }
}

TEST(WynerUpper, DeterministicForSeed) {
    std::mt19937_64 rng(15);
    const auto src = oracle::random_joint({2, 2}, rng, 0.0, {"X1", "X2"});
    const auto j = with_copies(src);
    WynerOptions o;
    o.u_card = 3;
    o.seed = 42;
    const auto a = wyner_upper(j, o), b = wyner_upper(j, o);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.origin, b.origin);
}

TEST(WynerBruteforce, Examples) {
    const auto constant = attach(attach(source({0.45, 0.05, 0.05, 0.45}, 2, 2),
                                        Channel::deterministic({{"X1", bit}}, {{"Z1", Alphabet::indexed(1)}}, {0, 0})),
                                 Channel::copy({"X2", bit}, "Z2"));
    EXPECT_EQ(wyner_bruteforce(constant, 1, 10).objective, 0.0);
    const auto copy = with_copies(source({0.5, 0.0, 0.0, 0.5}, 2, 2));
    EXPECT_NEAR(wyner_bruteforce(copy, 2, 20).objective, 1.0, 1e-6);
    const std::vector<double> half{0.5, 0.5};
    const auto shared = with_copies(shared_component_source(half, half, half));
    EXPECT_NEAR(wyner_bruteforce(shared, 2, 4).objective, 1.0, 1e-3);
    EXPECT_THROW(wyner_bruteforce(copy, 3, 10), ValidationError);
}
