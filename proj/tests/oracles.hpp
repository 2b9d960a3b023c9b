#pragma once

// Independent reference values and seeded generators for the test suites.
// Nothing here calls the solvers under test.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <lossyci/probability.hpp>

namespace oracle {

inline double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// R(D) of a uniform bit under Hamming distortion.
inline double binary_rd(double d) { return d >= 0.5 ? 0.0 : 1.0 - h2(d); }

/// Wyner's common information of DSBS(p): 1 + h(p) - 2 h(a), a = (1 - sqrt(1 - 2p)) / 2.
inline double dsbs_wyner(double p) {
    const double a = 0.5 * (1.0 - std::sqrt(1.0 - 2.0 * p));
    return 1.0 + h2(p) - 2.0 * h2(a);
}

/// Direct entropy of a pmf, written independently of the library.
inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log2(x);
    return h;
}

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::vector<double> random_pmf(std::size_t n, std::mt19937_64& rng, double floor = 0.0) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& x : p) {
        x = -std::log(1.0 - unit(rng)) + floor;
        s += x;
    }
    for (auto& x : p) x /= s;
    return p;
}

/// Random joint with variables A, B, C, ... of the given sizes; `sparsity` is the
/// probability that a cell is zeroed before normalization.
inline lossyci::JointDistribution random_joint(const std::vector<std::size_t>& shape, std::mt19937_64& rng,
                                               double sparsity = 0.0, const std::vector<std::string>& names = {}) {
    lossyci::VariableList vars;
    std::size_t total = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const std::string n = i < names.size() ? names[i] : std::string(1, static_cast<char>('A' + i));
        vars.push_back({n, lossyci::Alphabet::indexed(shape[i])});
        total *= shape[i];
    }
    std::vector<double> p = random_pmf(total, rng);
    double s = 0.0;
    for (auto& x : p) {
        if (unit(rng) < sparsity) x = 0.0;
        s += x;
    }
    if (s == 0.0) {
        p[0] = 1.0;
        s = 1.0;
    }
    for (auto& x : p) x /= s;
    return lossyci::JointDistribution::validate(std::move(p), std::move(vars));
}

/// Random channel with one row pmf per input tuple.
inline lossyci::Channel random_channel(const lossyci::VariableList& in, const lossyci::VariableList& out,
                                       std::mt19937_64& rng) {
    std::size_t rows = 1, cols = 1;
    for (const auto& v : in) rows *= v.alphabet.size();
    for (const auto& v : out) cols *= v.alphabet.size();
    std::vector<double> k;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = random_pmf(cols, rng);
        k.insert(k.end(), row.begin(), row.end());
    }
    return lossyci::Channel::validate(in, out, std::move(k));
}

}  // namespace oracle
