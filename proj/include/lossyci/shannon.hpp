#pragma once

// Shannon functionals in bits over grouped variables of a JointDistribution.

#include <cmath>
#include <initializer_list>
#include <string>
#include <unordered_set>
#include <vector>

#include "probability.hpp"

namespace lossyci {

/// A grouped argument such as (X1, X2) in I(X1,X2; U).
struct VariableGroup {
    std::vector<std::string> names;

    VariableGroup(std::initializer_list<std::string> n) : names(n) {}
    VariableGroup(std::vector<std::string> n) : names(std::move(n)) {}
    VariableGroup(std::string n) : names{std::move(n)} {}
    VariableGroup(const char* n) : names{n} {}
};

namespace detail {

/// Concatenation of groups; throws if any name repeats.
inline std::vector<std::string> disjoint_union(std::initializer_list<const VariableGroup*> groups) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto* g : groups) {
        if (g->names.empty()) throw ValidationError("variable group must be nonempty");
        for (const auto& n : g->names) {
            if (!seen.insert(n).second) throw ValidationError("variable '" + n + "' appears in more than one group");
            out.push_back(n);
        }
    }
    return out;
}

inline double entropy_of(std::span<const double> pmf) {
    double h = 0.0;
    for (double p : pmf)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

inline double clamp_small_negative(double x) { return (x < 0.0 && x >= -1e-12) ? 0.0 : x; }

}  // namespace detail

/// Entropy in bits. 0 log 0 := 0.
inline double entropy(const JointDistribution& joint, const VariableGroup& group) {
    const auto names = detail::disjoint_union({&group});
    return detail::entropy_of(marginalize(joint, names).pmf());
}

/// H(A | B) = H(A,B) - H(B).
inline double conditional_entropy(const JointDistribution& joint, const VariableGroup& a, const VariableGroup& b) {
    const auto ab = detail::disjoint_union({&a, &b});
    return detail::clamp_small_negative(entropy(joint, ab) - entropy(joint, b));
}

inline double mutual_information(const JointDistribution& joint, const VariableGroup& a, const VariableGroup& b) {
    const auto ab = detail::disjoint_union({&a, &b});
    return detail::clamp_small_negative(entropy(joint, a) + entropy(joint, b) - entropy(joint, ab));
}

/// I(A;B|C) = H(A,C) + H(B,C) - H(C) - H(A,B,C).
inline double conditional_mutual_information(const JointDistribution& joint, const VariableGroup& a,
                                             const VariableGroup& b, const VariableGroup& c) {
    const auto abc = detail::disjoint_union({&a, &b, &c});
    const auto ac = detail::disjoint_union({&a, &c});
    const auto bc = detail::disjoint_union({&b, &c});
    return detail::clamp_small_negative(entropy(joint, ac) + entropy(joint, bc) - entropy(joint, c) -
                                        entropy(joint, abc));
}

/// I(A;B;C) = I(A;B) - I(A;B|C). Not clamped; it can be negative.
/// Evaluated through the symmetric entropy expansion.
inline double interaction_information(const JointDistribution& joint, const VariableGroup& a, const VariableGroup& b,
                                      const VariableGroup& c) {
    const auto abc = detail::disjoint_union({&a, &b, &c});
    const auto ab = detail::disjoint_union({&a, &b});
    const auto ac = detail::disjoint_union({&a, &c});
    const auto bc = detail::disjoint_union({&b, &c});
    return entropy(joint, a) + entropy(joint, b) + entropy(joint, c) - entropy(joint, ab) - entropy(joint, ac) -
           entropy(joint, bc) + entropy(joint, abc);
}

struct InteractionBreakdown {
    double lhs;       // I(A;B;C)
    double rhs;       // I(A,B;C) - I(A;C|B) - I(B;C|A)
    double residual;  // |lhs - rhs|
};

inline InteractionBreakdown interaction_breakdown(const JointDistribution& joint, const VariableGroup& a,
                                                  const VariableGroup& b, const VariableGroup& c) {
    const double lhs = interaction_information(joint, a, b, c);
    const VariableGroup ab(detail::disjoint_union({&a, &b}));
    const double rhs = mutual_information(joint, ab, c) - conditional_mutual_information(joint, a, c, b) -
                       conditional_mutual_information(joint, b, c, a);
    return {lhs, rhs, std::abs(lhs - rhs)};
}

/// I(A;C|B). The chain A <-> B <-> C holds at tolerance eps iff this is <= eps.
inline double markov_residual(const JointDistribution& joint, const VariableGroup& a, const VariableGroup& b,
                              const VariableGroup& c) {
    return conditional_mutual_information(joint, a, c, b);
}

/// Binary entropy h(p) in bits.
inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace lossyci
