#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <lossyci/io.hpp>
#include <lossyci/probability.hpp>
#include <lossyci/shannon.hpp>

#include "oracles.hpp"

using namespace lossyci;

namespace {

const Alphabet bit = Alphabet::indexed(2);

JointDistribution dsbs(double p) {
    return JointDistribution::validate({0.5 * (1 - p), 0.5 * p, 0.5 * p, 0.5 * (1 - p)}, {{"X1", bit}, {"X2", bit}});
}

}  // namespace

TEST(Alphabet, RejectsEmptyAndDuplicates) {
    EXPECT_THROW(Alphabet(std::vector<std::string>{}), ValidationError);
    EXPECT_THROW(Alphabet({"a", "a"}), ValidationError);
}

TEST(Alphabet, ProductLabels) {
    const auto p = Alphabet::product(Alphabet({"a", "b"}), Alphabet({"0", "1", "2"}));
    ASSERT_EQ(p.size(), 6u);
    EXPECT_EQ(p[0], "a|0");
    EXPECT_EQ(p[5], "b|2");
    EXPECT_EQ(p.index_of("b|1"), 4u);
    EXPECT_EQ(label_component("b|1", 0), "b");
    EXPECT_EQ(label_component("b|1", 1), "1");
    EXPECT_THROW(label_component("b", 1), ValidationError);
}

TEST(Validate, AcceptsAndRenormalizes) {
    const auto j = JointDistribution::validate({0.25, 0.25, 0.25, 0.25 + 5e-10}, {{"A", bit}, {"B", bit}});
    double s = 0.0;
    for (double p : j.pmf()) s += p;
    EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Validate, ClampsTinyEntries) {
    const auto j = JointDistribution::validate({0.5, 1e-16, 0.5, 0.0}, {{"A", bit}, {"B", bit}});
    EXPECT_EQ(j[1], 0.0);
}

TEST(Validate, RejectsBadInput) {
    EXPECT_THROW(JointDistribution::validate({0.6, 0.5}, {{"A", bit}}), ValidationError);
    EXPECT_THROW(JointDistribution::validate({1.5, -0.5}, {{"A", bit}}), ValidationError);
    EXPECT_THROW(JointDistribution::validate({NAN, 1.0}, {{"A", bit}}), ValidationError);
    EXPECT_THROW(JointDistribution::validate({1.0}, {{"A", bit}}), ValidationError);
    EXPECT_THROW(JointDistribution::validate({0.25, 0.25, 0.25, 0.25}, {{"A", bit}, {"A", bit}}), ValidationError);
    EXPECT_THROW(JointDistribution::validate({}, {}), ValidationError);
}

TEST(Marginalize, SumsAndReorders) {
    std::mt19937_64 rng(1);
    const auto j = oracle::random_joint({2, 3, 2}, rng);
    const auto m = marginalize(j, {"C", "A"});
    ASSERT_EQ(m.names(), (std::vector<std::string>{"C", "A"}));
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t a = 0; a < 2; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < 3; ++b) s += j[(a * 3 + b) * 2 + c];
            EXPECT_NEAR(m[c * 2 + a], s, 1e-15);
        }
    EXPECT_THROW(marginalize(j, {"A", "A"}), ValidationError);
    EXPECT_THROW(marginalize(j, {"Q"}), ValidationError);
}

TEST(Condition, RowsAreDistributionsAndReassemble) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto j = oracle::random_joint({3, 2, 2}, rng);
        const auto ch = condition(j, {"A"});
        for (std::size_t r = 0; r < ch.rows(); ++r) {
            double s = 0.0;
            for (double p : ch.row(r)) s += p;
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
        const auto back = attach(marginalize(j, {"A"}), ch);
        for (std::size_t i = 0; i < j.size(); ++i) EXPECT_NEAR(back[i], j[i], 1e-15);
    }
}

TEST(Condition, ZeroMassRowsAreUniformAndFlagged) {
    const auto j = JointDistribution::validate({0.5, 0.5, 0.0, 0.0}, {{"A", bit}, {"B", bit}});
    const auto ch = condition(j, {"A"});
    EXPECT_FALSE(ch.zero_mass_rows()[0]);
    EXPECT_TRUE(ch.zero_mass_rows()[1]);
    EXPECT_TRUE(ch.has_zero_mass_rows());
    EXPECT_DOUBLE_EQ(ch.at(1, 0), 0.5);
}

TEST(Attach, ChecksNamesAndAlphabets) {
    const auto j = dsbs(0.1);
    EXPECT_THROW(attach(j, Channel::copy(j.variable("X1"), "X2")), ValidationError);
    EXPECT_THROW(attach(j, Channel::copy({"X1", Alphabet::indexed(3)}, "Z")), ValidationError);
    const auto with_copy = attach(j, Channel::copy(j.variable("X1"), "Z1"));
    EXPECT_NEAR(mutual_information(with_copy, "X1", "Z1"), 1.0, 1e-12);
}

TEST(Channel, ValidatesRows) {
    EXPECT_THROW(Channel::validate({{"A", bit}}, {{"B", bit}}, {0.5, 0.6, 0.5, 0.5}), ValidationError);
    EXPECT_THROW(Channel::validate({{"A", bit}}, {{"B", bit}}, {0.5, 0.5}), ValidationError);
    EXPECT_THROW(Channel::validate({{"A", bit}}, {{"A", bit}}, {1, 0, 0, 1}), ValidationError);
    EXPECT_THROW(Channel::deterministic({{"A", bit}}, {{"B", bit}}, {0, 2}), ValidationError);
    const auto d = Channel::deterministic({{"A", bit}}, {{"B", bit}}, {1, 0});
    EXPECT_EQ(d.at(0, 1), 1.0);
    EXPECT_EQ(d.at(1, 0), 1.0);
}

TEST(SharedComponent, ConditionallyIndependentGivenW) {
    const std::vector<double> w{0.3, 0.7}, a{0.2, 0.5, 0.3}, b{0.6, 0.4};
    const auto src = shared_component_source(w, a, b);
    EXPECT_EQ(src.variable("X1").alphabet.size(), 6u);
    const auto jw = with_shared_component(src, Alphabet::indexed(2));
    EXPECT_LT(conditional_mutual_information(jw, "X1", "X2", "W"), 1e-12);
    EXPECT_NEAR(entropy(jw, "W"), oracle::h2(0.3), 1e-12);
    EXPECT_LT(conditional_entropy(jw, "W", "X2"), 1e-12);
}

TEST(Io, DistributionRoundTrip) {
    std::mt19937_64 rng(3);
    const auto j = oracle::random_joint({2, 3}, rng, 0.0, {"X1", "X2"});
    const auto back = io::distribution_from_json(io::parse(io::to_json(j).dump()));
    ASSERT_EQ(back.names(), j.names());
    for (std::size_t i = 0; i < j.size(); ++i) EXPECT_EQ(back[i], j[i]);
}

TEST(Io, ChannelRoundTripAndAlias) {
    const auto c = Channel::validate({{"A", bit}}, {{"B", bit}}, {0.9, 0.1, 0.2, 0.8});
    const auto back = io::channel_from_json(io::parse(io::to_json(c).dump()));
    EXPECT_EQ(back.at(1, 0), c.at(1, 0));
    auto j = io::to_json(c);
    j["kernel"] = j["pmf"];
    j.erase("pmf");
    EXPECT_EQ(io::channel_from_json(j).at(0, 1), c.at(0, 1));
}

TEST(Io, MalformedInputs) {
    EXPECT_THROW(io::parse("{"), ValidationError);
    EXPECT_THROW(io::distribution_from_json(io::parse(R"({"pmf":[1]})")), ValidationError);
    EXPECT_THROW(io::distribution_from_json(io::parse(R"({"variables":[{"name":"A","alphabet":["0"]}],"pmf":["x"]})")),
                 ValidationError);
    EXPECT_THROW(io::distribution_from_json(
                     io::parse(R"({"variables":[{"name":"A","alphabet":["0","1"]}],"pmf":[0.6,0.5]})")),
                 ValidationError);
    EXPECT_THROW(io::read_file("/nonexistent/file.json"), ValidationError);
}

TEST(Io, DistortionJson) {
    const auto d = io::distortion_from_json(
        io::parse(R"({"source":["0","1"],"reconstruction":["0","1","e"],"costs":[0,null,0.5,null,0,0.5]})"));
    EXPECT_TRUE(std::isinf(d(0, 1)));
    EXPECT_EQ(d(1, 2), 0.5);
    EXPECT_THROW(io::distortion_from_json(io::parse(R"({"source":["0"],"reconstruction":["0"],"costs":[null]})")),
                 ValidationError);
}

TEST(Io, FixedRendering) {
    io::json j = {{"a", 0.5310041}, {"b", 1e-9}, {"c", 3}, {"d", true}};
    EXPECT_EQ(io::dump_fixed(j), R"({"a":0.531004,"b":0.000000,"c":3,"d":true})");
}
