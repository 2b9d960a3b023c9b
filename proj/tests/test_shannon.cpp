#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <lossyci/shannon.hpp>

#include "oracles.hpp"

using namespace lossyci;

namespace {

const Alphabet bit = Alphabet::indexed(2);

// X, Y uniform independent bits, Z = X xor Y.
JointDistribution xor_triple() {
    std::vector<double> p(8, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) p[(x * 2 + y) * 2 + (x ^ y)] = 0.25;
    return JointDistribution::validate(p, {{"X", bit}, {"Y", bit}, {"Z", bit}});
}

}  // namespace

TEST(Entropy, UniformAndPointMass) {
    EXPECT_NEAR(entropy(JointDistribution::from_pmf("A", {0.25, 0.25, 0.25, 0.25}), "A"), 2.0, 1e-15);
    EXPECT_EQ(entropy(JointDistribution::from_pmf("A", {1.0, 0.0}), "A"), 0.0);
    EXPECT_NEAR(binary_entropy(0.1), oracle::h2(0.1), 1e-15);
    EXPECT_EQ(binary_entropy(0.0), 0.0);
}

TEST(MutualInformation, DsbsClosedForm) {
    const auto j = JointDistribution::validate({0.45, 0.05, 0.05, 0.45}, {{"X1", bit}, {"X2", bit}});
    EXPECT_NEAR(mutual_information(j, "X1", "X2"), 1.0 - oracle::h2(0.1), 1e-12);
    EXPECT_NEAR(conditional_entropy(j, "X1", "X2"), oracle::h2(0.1), 1e-12);
}

TEST(Xor, PairwiseIndependentJointlyDependent) {
    const auto j = xor_triple();
    EXPECT_NEAR(mutual_information(j, "X", "Y"), 0.0, 1e-15);
    EXPECT_NEAR(conditional_mutual_information(j, "X", "Y", "Z"), 1.0, 1e-12);
    EXPECT_NEAR(interaction_information(j, "X", "Y", "Z"), -1.0, 1e-12);
    EXPECT_NEAR(mutual_information(j, {"X", "Y"}, "Z"), 1.0, 1e-12);
}

TEST(Groups, OverlapThrows) {
    const auto j = xor_triple();
    EXPECT_THROW(mutual_information(j, {"X", "Y"}, "Y"), ValidationError);
    EXPECT_THROW(conditional_mutual_information(j, "X", "Y", "X"), ValidationError);
    EXPECT_THROW(entropy(j, VariableGroup(std::vector<std::string>{})), ValidationError);
}

TEST(Markov, ChainHasZeroResidual) {
    std::mt19937_64 rng(4);
    const auto a = oracle::random_joint({3}, rng, 0.0, {"A"});
    const auto ab = attach(a, oracle::random_channel({a.variable("A")}, {{"B", Alphabet::indexed(2)}}, rng));
    const auto abc = attach(ab, oracle::random_channel({ab.variable("B")}, {{"C", Alphabet::indexed(3)}}, rng));
    EXPECT_LT(markov_residual(abc, "A", "B", "C"), 1e-12);
    EXPECT_GT(markov_residual(abc, "A", "C", "B"), 1e-6);
}

// 1000 seeded joints with up to 3 x 3 x 3 cells: chain rule and breakdown identity.
TEST(Identities, RandomJoints) {
    std::mt19937_64 rng(20240601);
    double worst_chain = 0.0, worst_breakdown = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::vector<std::size_t> shape{1 + rng() % 3, 1 + rng() % 3, 1 + rng() % 3};
        const auto j = oracle::random_joint(shape, rng, t % 3 == 0 ? 0.4 : 0.0);
        const double chain = std::abs(mutual_information(j, {"A", "B"}, "C") - mutual_information(j, "A", "C") -
                                      conditional_mutual_information(j, "B", "C", "A"));
        worst_chain = std::max(worst_chain, chain);
        worst_breakdown = std::max(worst_breakdown, interaction_breakdown(j, "A", "B", "C").residual);

        EXPECT_GE(mutual_information(j, "A", "B"), 0.0);
        EXPECT_GE(conditional_mutual_information(j, "A", "B", "C"), 0.0);
        EXPECT_NEAR(interaction_information(j, "A", "B", "C"), interaction_information(j, "C", "A", "B"), 1e-12);
        EXPECT_NEAR(interaction_information(j, "A", "B", "C"),
                    mutual_information(j, "A", "B") - conditional_mutual_information(j, "A", "B", "C"), 1e-12);
        EXPECT_LE(mutual_information(j, "A", "B"), std::min(entropy(j, "A"), entropy(j, "B")) + 1e-12);
    }
    EXPECT_LT(worst_chain, 1e-10);
    EXPECT_LT(worst_breakdown, 1e-10);
}

TEST(Entropy, MatchesDirectComputation) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const auto j = oracle::random_joint({3, 2}, rng, 0.3);
        const std::vector<double> p(j.pmf().begin(), j.pmf().end());
        EXPECT_NEAR(entropy(j, {"A", "B"}), oracle::entropy(p), 1e-12);
    }
}
