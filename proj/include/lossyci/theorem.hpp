#pragma once

// Harness for the sandwich bound
//
//     K(X1,X2; D1,D2) <= I(Z1;Z2) <= C(X1,X2; D1,D2)
//
// in certified form: gk_lower under-estimates K and wyner_upper over-estimates
// C, so k_lower <= i_mid <= c_upper must hold whenever every feasibility
// residual is small. Also replays each line of the two proof chains as a
// numerical residual and evaluates the implications behind the equality case.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common_info.hpp"
#include "probability.hpp"
#include "rate_distortion.hpp"
#include "shannon.hpp"

namespace lossyci {

struct ToleranceLadder {
    double construction = 1e-12;  // residuals that vanish by construction
    double identity = 1e-9;       // information identities
    double feasibility = 1e-6;    // Markov and marginal residuals of auxiliaries
    double solver_left = 1e-4;    // |k_lower - i_mid| for the left equality flag
    double solver_right = 1e-3;   // |c_upper - i_mid| for the right equality flag and bound check
};

struct SandwichConfig {
    ToleranceLadder tol;
    BAOptions ba;
    WynerOptions wyner;
    double gk_eps = 1e-12;
};

struct BoundReport {
    double k_lower = 0.0;
    double i_mid = 0.0;
    double c_upper = 0.0;
    double slack_left = 0.0;   // i_mid - k_lower
    double slack_right = 0.0;  // c_upper - i_mid
    double encoder_rate = 0.0;
    std::pair<double, double> targets{0.0, 0.0};
    std::pair<double, double> distortions{0.0, 0.0};
    std::map<std::string, double> residuals;    // feasibility residuals
    std::map<std::string, double> diagnostics;  // reported only, never asserted
    bool equality_left = false;
    bool equality_right = false;
    bool converged = true;
    bool feasible = false;   // every feasibility residual <= tol.feasibility
    bool violation = false;  // feasible, converged, and the certified chain fails
    // i_mid <= c_upper + I(Z1,Z2;U|X1,X2) + I(Z1;Z2|U) holds for every U without
    // any premise; this is its slack.
    double rhs_certificate_slack = 0.0;
    // Both equality flags hold but the common part of (X1, X2) fails the
    // structural conditions; the only-if direction is reported, not asserted.
    bool equality_without_structure = false;
    std::optional<double> shared_entropy;      // H(W) for equality-case reports
    std::optional<bool> equality_certificate;  // (a)-(d) pass and all three values match H(W)

    Channel joint_encoder;   // P(Z1,Z2|X1,X2) used for i_mid and c_upper
    Channel encoder_z1;      // P(Z1|X1) used for k_lower
    Channel encoder_z2;      // P(Z2|X2)
    WynerSolution wyner;
    GKSolution gk;
};

namespace detail {

inline void finish_report(BoundReport& r, const ToleranceLadder& tol) {
    r.slack_left = r.i_mid - r.k_lower;
    r.slack_right = r.c_upper - r.i_mid;
    r.equality_left = std::abs(r.slack_left) <= tol.solver_left;
    r.equality_right = std::abs(r.slack_right) <= tol.solver_right;
    r.feasible = true;
    for (const auto& [name, value] : r.residuals)
        if (value > tol.feasibility) r.feasible = false;
    r.violation = r.converged && r.feasible &&
                  (r.k_lower > r.i_mid + tol.feasibility || r.i_mid > r.c_upper + tol.solver_right);
}

// Residuals for the Wyner and GK auxiliaries. `joint` carries the joint encoder's
// reconstructions; the GK map is also checked against them because the middle
// term is evaluated there.
inline void collect_residuals(BoundReport& r, const JointDistribution& joint) {
    const auto& w = r.wyner.residuals;
    r.residuals["wyner.marginal_match"] = w.marginal_match;
    r.residuals["wyner.z1_u_z2"] = w.conditional_independence;
    r.residuals["wyner.x_z_u"] = w.reconstruction_markov;
    r.residuals["encoder.z_x_u"] = w.encoder_markov;
    const auto& g = r.gk.condition_residuals;
    r.residuals["gk.x2_x1_v"] = g[0];
    r.residuals["gk.x1_x2_v"] = g[1];
    r.residuals["gk.x1_z1_v"] = g[2];
    r.residuals["gk.x2_z2_v"] = g[3];
    const auto with_v = attach(marginalize(joint, {names::x1, names::x2, names::z1, names::z2}), r.gk.v_map_from_x1);
    r.residuals["gk_joint_encoder.x1_z1_v"] = markov_residual(with_v, names::x1, names::z1, names::v);
    r.residuals["gk_joint_encoder.x2_z2_v"] = markov_residual(with_v, names::x2, names::z2, names::v);
    r.rhs_certificate_slack = r.c_upper + w.encoder_markov + w.conditional_independence - r.i_mid;
}

// Z1 <-> W <-> Z2 and (X1,X2) <-> (Z1,Z2) <-> W with W the common part of (X1, X2).
inline std::pair<double, double> common_part_structure(const JointDistribution& joint) {
    const auto base = marginalize(joint, {names::x1, names::x2, names::z1, names::z2});
    const auto cp = gk_common_part(marginalize(base, {names::x1, names::x2}));
    Channel to_w = Channel::validate(cp.label_channel_x1.inputs(), {{names::w, cp.label_channel_x1.outputs()[0].alphabet}},
                                     {cp.label_channel_x1.kernel().begin(), cp.label_channel_x1.kernel().end()});
    const auto jw = attach(base, to_w);
    return {markov_residual(jw, names::z1, names::w, names::z2),
            markov_residual(jw, {names::x1, names::x2}, {names::z1, names::z2}, names::w)};
}

}  // namespace detail

/// Runs the joint and marginal rate-distortion solvers, both common-information
/// bounds, and checks the certified chain k_lower <= i_mid <= c_upper.
inline BoundReport sandwich_check(const JointDistribution& source, const DistortionMeasure& d1,
                                  const DistortionMeasure& d2, double target1, double target2,
                                  const SandwichConfig& cfg = {}) {
    if (source.variables().size() != 2 || source.variables()[0].name != names::x1 ||
        source.variables()[1].name != names::x2)
        throw ValidationError("sandwich_check expects a source over (X1, X2)");
    BoundReport r;
    r.targets = {target1, target2};

    const auto joint_rd = ba_joint(source, d1, d2, target1, target2, cfg.ba);
    r.joint_encoder = joint_rd.encoder;
    r.encoder_rate = joint_rd.rate;
    r.distortions = {joint_rd.distortions[0], joint_rd.distortions[1]};
    r.converged = joint_rd.converged;
    const auto joint = attach(source, joint_rd.encoder);
    r.i_mid = mutual_information(joint, names::z1, names::z2);

    const auto p1 = marginalize(source, {names::x1});
    const auto p2 = marginalize(source, {names::x2});
    const auto e1 = ba_at_distortion(p1, d1, target1, cfg.ba, names::z1);
    const auto e2 = ba_at_distortion(p2, d2, target2, cfg.ba, names::z2);
    r.converged = r.converged && e1.converged && e2.converged;
    r.encoder_z1 = e1.encoder;
    r.encoder_z2 = e2.encoder;
    const auto gk_joint = attach(attach(source, e1.encoder), e2.encoder);
    r.gk = gk_lower(gk_joint, cfg.gk_eps);
    r.k_lower = r.gk.objective;

    r.wyner = wyner_upper(joint, cfg.wyner);
    r.c_upper = r.wyner.objective;

    detail::collect_residuals(r, joint);
    detail::finish_report(r, cfg.tol);
    if (r.equality_left && r.equality_right) {
        const auto [ci, markov] = detail::common_part_structure(joint);
        r.diagnostics["structure.z1_w_z2"] = ci;
        r.diagnostics["structure.x_z_w"] = markov;
        r.equality_without_structure = ci > cfg.tol.feasibility || markov > cfg.tol.feasibility;
    }
    return r;
}

/// Reconstruction channel for one coordinate of a shared-component source
/// (labels "x'|w"). W passes through unchanged; the private symbol is kept with
/// probability 1 - noise and replaced by a uniform one otherwise. With
/// keep_private false the output is W alone.
inline Channel shared_component_channel(const Variable& input, std::size_t private_size, std::size_t w_size,
                                        double noise, const std::string& output, bool keep_private = true) {
    if (private_size * w_size != input.alphabet.size())
        throw ValidationError("input alphabet is not a shared-component product");
    if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("noise must lie in [0, 1]");
    const std::size_t n = input.alphabet.size();
    if (!keep_private) {
        std::vector<std::size_t> t(n);
        for (std::size_t x = 0; x < n; ++x) t[x] = x % w_size;
        return Channel::deterministic({input}, {{output, Alphabet::indexed(w_size)}}, t);
    }
    std::vector<double> k(n * n, 0.0);
    for (std::size_t a = 0; a < private_size; ++a)
        for (std::size_t w = 0; w < w_size; ++w)
            for (std::size_t b = 0; b < private_size; ++b)
                k[(a * w_size + w) * n + b * w_size + w] =
                    (a == b ? 1.0 - noise : 0.0) + noise / static_cast<double>(private_size);
    return Channel::validate({input}, {{output, input.alphabet}}, std::move(k));
}

/// Builds X1 = (X'1, W), X2 = (X'2, W), attaches the reconstruction channels
/// (inputs X1 -> Z1 and X2 -> Z2), and verifies the equality conditions:
///   (a) Z1 <-> W <-> Z2
///   (b) (X1,X2) <-> (Z1,Z2) <-> W
///   (c) I(Z1;W|Z2) = I(Z2;W|Z1) = 0
///   (d) I(X1;X2) - I(X1;X2|W) = H(W)
///   (e) k_lower = i_mid = c_upper = H(W)
/// A failed condition is reported through `equality_certificate`, never thrown.
inline BoundReport equality_case_check(std::span<const double> w, std::span<const double> x1p,
                                       std::span<const double> x2p, const Channel& z1_channel,
                                       const Channel& z2_channel, const SandwichConfig& cfg = {}) {
    const auto source = shared_component_source(w, x1p, x2p);
    const auto joint = attach(attach(source, z1_channel), z2_channel);
    const auto jw = with_shared_component(joint, Alphabet::indexed(w.size()));

    BoundReport r;
    r.joint_encoder = condition(marginalize(joint, {names::x1, names::x2, names::z1, names::z2}), {names::x1, names::x2});
    r.encoder_z1 = z1_channel;
    r.encoder_z2 = z2_channel;
    r.encoder_rate = mutual_information(joint, {names::x1, names::x2}, {names::z1, names::z2});
    const double hw = entropy(jw, names::w);
    r.shared_entropy = hw;

    r.residuals["equality.z1_w_z2"] = markov_residual(jw, names::z1, names::w, names::z2);
    r.residuals["equality.x_z_w"] = markov_residual(jw, {names::x1, names::x2}, {names::z1, names::z2}, names::w);
    r.residuals["equality.z1_w_given_z2"] = conditional_mutual_information(jw, names::z1, names::w, names::z2);
    r.residuals["equality.z2_w_given_z1"] = conditional_mutual_information(jw, names::z2, names::w, names::z1);
    r.residuals["equality.shared_entropy_identity"] =
        std::abs(mutual_information(jw, names::x1, names::x2) -
                 conditional_mutual_information(jw, names::x1, names::x2, names::w) - hw);

    r.i_mid = mutual_information(joint, names::z1, names::z2);
    r.gk = gk_lower(joint, cfg.gk_eps);
    r.k_lower = r.gk.objective;
    r.wyner = wyner_upper(joint, cfg.wyner);
    r.c_upper = r.wyner.objective;

    const bool structure_ok = r.residuals["equality.z1_w_z2"] <= cfg.tol.feasibility &&
                              r.residuals["equality.x_z_w"] <= cfg.tol.feasibility &&
                              r.residuals["equality.z1_w_given_z2"] <= cfg.tol.feasibility &&
                              r.residuals["equality.z2_w_given_z1"] <= cfg.tol.feasibility &&
                              r.residuals["equality.shared_entropy_identity"] <= cfg.tol.identity;

    detail::collect_residuals(r, joint);
    detail::finish_report(r, cfg.tol);
    r.equality_certificate = structure_ok && std::abs(r.k_lower - hw) < cfg.tol.solver_left &&
                             std::abs(r.i_mid - hw) < cfg.tol.feasibility &&
                             std::abs(r.c_upper - hw) < cfg.tol.solver_right;
    return r;
}

// ---------------------------------------------------------------------------
// Proof replay

enum class ProofSide { rhs, lhs };

struct ProofStep {
    std::string label;          // the expression on this line
    double lhs_value = 0.0;     // value of the previous line
    double rhs_value = 0.0;     // value of this line
    double residual = 0.0;      // |lhs - rhs| for equalities, rhs - lhs (slack) for the inequality
    bool inequality = false;    // line reads "<=" rather than "="
    std::string justification;  // identity or Markov condition invoked
    std::optional<double> justification_residual;  // residual of the invoked condition, if any
};

struct ProofTrace {
    ProofSide side = ProofSide::rhs;
    std::vector<ProofStep> steps;

    /// Slack of the single inequality step.
    double inequality_slack() const {
        for (const auto& s : steps)
            if (s.inequality) return s.residual;
        return 0.0;
    }
};

namespace detail {

struct TraceBuilder {
    ProofTrace trace;
    double previous = 0.0;
    std::string previous_label;

    void start(std::string label, double value) {
        previous = value;
        previous_label = std::move(label);
    }
    void equal(std::string label, double value, std::string why, std::optional<double> why_residual = std::nullopt) {
        trace.steps.push_back({std::move(label), previous, value, std::abs(value - previous), false, std::move(why), why_residual});
        previous = value;
    }
    void at_most(std::string label, double value, std::string why, std::optional<double> why_residual = std::nullopt) {
        trace.steps.push_back({std::move(label), previous, value, value - previous, true, std::move(why), why_residual});
        previous = value;
    }
};

}  // namespace detail

/// Replays the proof chains numerically. The RHS chain needs X1, X2, Z1, Z2 and
/// the Wyner auxiliary `aux` (default U); the LHS chain needs the GK auxiliary
/// (default V).
inline ProofTrace proof_trace(const JointDistribution& joint, ProofSide side, std::string aux = "") {
    if (aux.empty()) aux = side == ProofSide::rhs ? names::u : names::v;
    for (const auto* n : {&names::x1, &names::x2, &names::z1, &names::z2})
        if (!joint.has(*n)) throw ValidationError("proof_trace needs variable " + *n);
    if (!joint.has(aux)) throw ValidationError("proof_trace needs the auxiliary variable '" + aux + "'");

    const VariableGroup x{names::x1, names::x2};
    const VariableGroup z{names::z1, names::z2};
    const VariableGroup xz{names::x1, names::x2, names::z1, names::z2};
    const VariableGroup a(aux);
    const auto& j = joint;

    detail::TraceBuilder b;
    b.trace.side = side;
    if (side == ProofSide::rhs) {
        b.start("I(Z1;Z2)", mutual_information(j, names::z1, names::z2));
        const double ii = interaction_information(j, names::z1, names::z2, a);
        const double ci = conditional_mutual_information(j, names::z1, names::z2, a);
        b.equal("I(Z1;Z2;U) + I(Z1;Z2|U)", ii + ci, "interaction information definition");
        b.equal("I(Z1;Z2;U)", ii, "Z1 <-> U <-> Z2", ci);
        const double c1 = conditional_mutual_information(j, names::z1, a, names::z2);
        const double c2 = conditional_mutual_information(j, names::z2, a, names::z1);
        const double zu = mutual_information(j, z, a);
        b.equal("I(Z1,Z2;U) - I(Z1;U|Z2) - I(Z2;U|Z1)", zu - c1 - c2, "interaction information breakdown");
        b.at_most("I(Z1,Z2;U)", zu, "conditional mutual information is nonnegative");
        const double all = mutual_information(j, xz, a);
        const double xzu = conditional_mutual_information(j, x, a, z);
        b.equal("I(X1,X2,Z1,Z2;U) - I(X1,X2;U|Z1,Z2)", all - xzu, "chain rule");
        b.equal("I(X1,X2,Z1,Z2;U)", all, "(X1,X2) <-> (Z1,Z2) <-> U", xzu);
        const double xu = mutual_information(j, x, a);
        const double zux = conditional_mutual_information(j, z, a, x);
        b.equal("I(X1,X2;U) + I(Z1,Z2;U|X1,X2)", xu + zux, "chain rule");
        b.equal("I(X1,X2;U)", xu, "(X1,X2) -> (Z1,Z2)", zux);
    } else {
        b.start("I(X1,X2;V)", mutual_information(j, x, a));
        const double x1v = mutual_information(j, names::x1, a);
        const double x2v_x1 = conditional_mutual_information(j, names::x2, a, names::x1);
        b.equal("I(X1;V) + I(X2;V|X1)", x1v + x2v_x1, "chain rule");
        b.equal("I(X1;V)", x1v, "X2 <-> X1 <-> V", x2v_x1);
        const double ii = interaction_information(j, names::x1, names::x2, a);
        const double x1v_x2 = conditional_mutual_information(j, names::x1, a, names::x2);
        b.equal("I(X1;X2;V) + I(X1;V|X2)", ii + x1v_x2, "interaction information definition");
        b.equal("I(X1;X2;V)", ii, "X1 <-> X2 <-> V", x1v_x2);
        const double base = conditional_mutual_information(j, z, a, x);
        const double ii_ext = interaction_information(j, {names::x1, names::z1}, {names::x2, names::z2}, a);
        b.equal("I(X1,Z1;X2,Z2;V)", ii_ext, "(X1,X2) -> (Z1,Z2), X2 <-> X1 <-> V, X1 <-> X2 <-> V",
                std::max({base, x2v_x1, x1v_x2}));
        const double r3 = conditional_mutual_information(j, names::x1, a, names::z1);
        const double r4 = conditional_mutual_information(j, names::x2, a, names::z2);
        const double ii_z = interaction_information(j, names::z1, names::z2, a);
        b.equal("I(Z1;Z2;V)", ii_z, "X1 <-> Z1 <-> V, X2 <-> Z2 <-> V and the conditions above",
                std::max({base, x2v_x1, x1v_x2, r3, r4}));
        b.at_most("I(Z1;Z2)", mutual_information(j, names::z1, names::z2), "I(Z1;Z2|V) is nonnegative");
    }
    return std::move(b.trace);
}

// ---------------------------------------------------------------------------
// Implications used for the equality case

struct ImplicationResult {
    std::string label;
    std::vector<std::pair<std::string, double>> antecedent_residuals;
    std::string consequent;
    double consequent_residual = 0.0;
    bool vacuous = false;  // some antecedent exceeds tol
    bool holds = true;     // vacuous, or consequent <= 10 * tol
};

/// Evaluates the four implications on a joint over X1, X2, Z1, Z2 and W.
/// "X1 -> W <- X2" (W computable from either source) is measured by H(W|X1) and H(W|X2).
inline std::vector<ImplicationResult> implication_suite(const JointDistribution& joint, double tol) {
    for (const auto* n : {&names::x1, &names::x2, &names::z1, &names::z2, &names::w})
        if (!joint.has(*n)) throw ValidationError("implication_suite needs variable " + *n);
    const auto& j = joint;
    const VariableGroup x{names::x1, names::x2};
    const VariableGroup z{names::z1, names::z2};
    const double z1_w_z2 = markov_residual(j, names::z1, names::w, names::z2);
    const double w_given_x1 = conditional_entropy(j, names::w, names::x1);
    const double w_given_x2 = conditional_entropy(j, names::w, names::x2);
    const double x_z_w = markov_residual(j, x, z, names::w);
    const double z1_x1_z2 = markov_residual(j, names::z1, names::x1, names::z2);
    const double z1_x2_z2 = markov_residual(j, names::z1, names::x2, names::z2);
    const double x1_z1_w = markov_residual(j, names::x1, names::z1, names::w);
    const double x2_z2_w = markov_residual(j, names::x2, names::z2, names::w);

    auto make = [&](std::string label, std::vector<std::pair<std::string, double>> ante, std::string cons, double value) {
        ImplicationResult r{std::move(label), std::move(ante), std::move(cons), value};
        for (const auto& [n, v] : r.antecedent_residuals)
            if (v > tol) r.vacuous = true;
        r.holds = r.vacuous || value <= 10.0 * tol;
        return r;
    };
    const std::pair<std::string, double> a_ci{"Z1 <-> W <-> Z2", z1_w_z2};
    const std::pair<std::string, double> a_w1{"H(W|X1)", w_given_x1};
    const std::pair<std::string, double> a_w2{"H(W|X2)", w_given_x2};
    const std::pair<std::string, double> a_m{"(X1,X2) <-> (Z1,Z2) <-> W", x_z_w};
    return {
        make("[Z1<->W<->Z2] & [X1->W<-X2] => [Z1<->X1<->Z2]", {a_ci, a_w1, a_w2}, "Z1 <-> X1 <-> Z2", z1_x1_z2),
        make("[(X1,X2)<->(Z1,Z2)<->W] & [Z1<->X1<->Z2] => [X1<->Z1<->W]", {a_m, {"Z1 <-> X1 <-> Z2", z1_x1_z2}},
             "X1 <-> Z1 <-> W", x1_z1_w),
        make("[Z1<->W<->Z2] & [X1->W<-X2] => [Z1<->X2<->Z2]", {a_ci, a_w1, a_w2}, "Z1 <-> X2 <-> Z2", z1_x2_z2),
        make("[(X1,X2)<->(Z1,Z2)<->W] & [Z1<->X2<->Z2] => [X2<->Z2<->W]", {a_m, {"Z1 <-> X2 <-> Z2", z1_x2_z2}},
             "X2 <-> Z2 <-> W", x2_z2_w),
    };
}

}  // namespace lossyci
