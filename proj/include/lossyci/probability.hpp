#pragma once

// Finite-alphabet joint distributions with named variables.
//
// A JointDistribution is a dense row-major tensor over an ordered list of
// named variables. A Channel is a conditional pmf from a tuple of input
// variables to a tuple of output variables, stored one row per input tuple.
// Both are immutable after construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace lossyci {

/// Raised for malformed inputs: bad shapes, negative mass, unknown names.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A solver failed to reach its stopping criterion.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace tolerance {
/// Entries below this are treated as exact zeros.
inline constexpr double clamp = 1e-15;
/// Accepted deviation of a raw pmf from unit mass before renormalization.
inline constexpr double mass = 1e-9;
}  // namespace tolerance

/// Separator between the components of a product-alphabet label.
inline constexpr char label_separator = '|';

class Alphabet {
public:
    Alphabet() = default;

    explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
        if (symbols_.empty()) throw ValidationError("alphabet must be nonempty");
        std::unordered_set<std::string> seen;
        for (const auto& s : symbols_) {
            if (!seen.insert(s).second) throw ValidationError("duplicate alphabet symbol '" + s + "'");
        }
    }

    /// Symbols "0", "1", ..., "n-1".
    static Alphabet indexed(std::size_t n) {
        std::vector<std::string> s;
        s.reserve(n);
        for (std::size_t i = 0; i < n; ++i) s.push_back(std::to_string(i));
        return Alphabet(std::move(s));
    }

    /// Product alphabet with labels "a|b" (first factor varies slowest).
    static Alphabet product(const Alphabet& first, const Alphabet& second) {
        std::vector<std::string> s;
        s.reserve(first.size() * second.size());
        for (const auto& a : first.symbols())
            for (const auto& b : second.symbols()) s.push_back(a + label_separator + b);
        return Alphabet(std::move(s));
    }

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    const std::string& operator[](std::size_t i) const { return symbols_.at(i); }

    std::size_t index_of(std::string_view symbol) const {
        auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
        if (it == symbols_.end()) throw ValidationError("unknown symbol '" + std::string(symbol) + "'");
        return static_cast<std::size_t>(it - symbols_.begin());
    }

    friend bool operator==(const Alphabet&, const Alphabet&) = default;

private:
    std::vector<std::string> symbols_;
};

struct Variable {
    std::string name;
    Alphabet alphabet;

    friend bool operator==(const Variable&, const Variable&) = default;
};

using VariableList = std::vector<Variable>;

namespace detail {

inline std::size_t tensor_size(const VariableList& vars) {
    std::size_t n = 1;
    for (const auto& v : vars) n *= v.alphabet.size();
    return n;
}

inline std::vector<std::size_t> strides_of(const VariableList& vars) {
    std::vector<std::size_t> s(vars.size(), 1);
    for (std::size_t k = vars.size(); k-- > 1;) s[k - 1] = s[k] * vars[k].alphabet.size();
    return s;
}

inline void require_unique_names(const VariableList& vars) {
    std::unordered_set<std::string> seen;
    for (const auto& v : vars) {
        if (v.name.empty()) throw ValidationError("variable name must be nonempty");
        if (!seen.insert(v.name).second) throw ValidationError("duplicate variable name '" + v.name + "'");
    }
}

inline std::size_t position_of(const VariableList& vars, std::string_view name) {
    for (std::size_t k = 0; k < vars.size(); ++k)
        if (vars[k].name == name) return k;
    throw ValidationError("unknown variable '" + std::string(name) + "'");
}

// For every flat index of `vars`, the flat index into the sub-tensor spanned by
// the variables at `positions` (in that order).
inline std::vector<std::size_t> projection_map(const VariableList& vars,
                                               const std::vector<std::size_t>& positions) {
    const auto strides = strides_of(vars);
    std::vector<std::size_t> sub_strides(positions.size(), 1);
    for (std::size_t k = positions.size(); k-- > 1;)
        sub_strides[k - 1] = sub_strides[k] * vars[positions[k]].alphabet.size();

    const std::size_t n = tensor_size(vars);
    std::vector<std::size_t> out(n);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t sub = 0;
        for (std::size_t k = 0; k < positions.size(); ++k) {
            const std::size_t p = positions[k];
            const std::size_t digit = (flat / strides[p]) % vars[p].alphabet.size();
            sub += digit * sub_strides[k];
        }
        out[flat] = sub;
    }
    return out;
}

}  // namespace detail

class Channel;

class JointDistribution {
public:
    /// Validates `raw` against the declared variables. Entries below 1e-15 are
    /// clamped to zero and the tensor is renormalized.
    static JointDistribution validate(std::vector<double> raw, VariableList variables) {
        if (variables.empty()) throw ValidationError("distribution needs at least one variable");
        detail::require_unique_names(variables);
        const std::size_t expected = detail::tensor_size(variables);
        if (raw.size() != expected)
            throw ValidationError("pmf has " + std::to_string(raw.size()) + " entries, alphabets require " +
                                  std::to_string(expected));
        double sum = 0.0;
        for (double& p : raw) {
            if (!std::isfinite(p)) throw ValidationError("pmf entry is not finite");
            if (p < 0.0) throw ValidationError("pmf entry is negative");
            if (p < tolerance::clamp) p = 0.0;
            sum += p;
        }
        if (std::abs(sum - 1.0) > tolerance::mass)
            throw ValidationError("pmf sums to " + std::to_string(sum) + ", expected 1");
        for (double& p : raw) p /= sum;
        return JointDistribution(std::move(variables), std::move(raw));
    }

    /// Single-variable distribution from a pmf vector.
    static JointDistribution from_pmf(std::string name, std::vector<double> pmf) {
        const std::size_t n = pmf.size();
        if (n == 0) throw ValidationError("pmf must be nonempty");
        return validate(std::move(pmf), {{std::move(name), Alphabet::indexed(n)}});
    }

    const VariableList& variables() const noexcept { return variables_; }
    std::span<const double> pmf() const noexcept { return pmf_; }
    std::size_t size() const noexcept { return pmf_.size(); }
    double operator[](std::size_t flat) const { return pmf_[flat]; }

    bool has(std::string_view name) const {
        return std::any_of(variables_.begin(), variables_.end(), [&](const Variable& v) { return v.name == name; });
    }
    std::size_t position_of(std::string_view name) const { return detail::position_of(variables_, name); }
    const Variable& variable(std::string_view name) const { return variables_[position_of(name)]; }

    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s;
        for (const auto& v : variables_) s.push_back(v.alphabet.size());
        return s;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> n;
        for (const auto& v : variables_) n.push_back(v.name);
        return n;
    }

private:
    friend JointDistribution marginalize(const JointDistribution&, const std::vector<std::string>&);
    friend JointDistribution attach(const JointDistribution&, const Channel&);

    JointDistribution(VariableList vars, std::vector<double> pmf) : variables_(std::move(vars)), pmf_(std::move(pmf)) {}

    VariableList variables_;
    std::vector<double> pmf_;
};

class Channel {
public:
    Channel() = default;

    /// `kernel` is row-major: one row per input tuple, each a pmf over output tuples.
    /// Rows are validated to 1e-9 and renormalized.
    static Channel validate(VariableList inputs, VariableList outputs, std::vector<double> kernel) {
        if (outputs.empty()) throw ValidationError("channel needs at least one output variable");
        VariableList all = inputs;
        all.insert(all.end(), outputs.begin(), outputs.end());
        detail::require_unique_names(all);
        const std::size_t rows = detail::tensor_size(inputs);
        const std::size_t cols = detail::tensor_size(outputs);
        if (kernel.size() != rows * cols)
            throw ValidationError("channel kernel has " + std::to_string(kernel.size()) + " entries, expected " +
                                  std::to_string(rows * cols));
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                double& k = kernel[r * cols + c];
                if (!std::isfinite(k) || k < 0.0) throw ValidationError("channel entry is negative or not finite");
                if (k < tolerance::clamp) k = 0.0;
                sum += k;
            }
            if (std::abs(sum - 1.0) > tolerance::mass)
                throw ValidationError("channel row " + std::to_string(r) + " sums to " + std::to_string(sum));
            for (std::size_t c = 0; c < cols; ++c) kernel[r * cols + c] /= sum;
        }
        return Channel(std::move(inputs), std::move(outputs), std::move(kernel), std::vector<bool>(rows, false));
    }

    /// Deterministic channel: input tuple r maps to output tuple `targets[r]`.
    static Channel deterministic(VariableList inputs, VariableList outputs, const std::vector<std::size_t>& targets) {
        const std::size_t rows = detail::tensor_size(inputs);
        const std::size_t cols = detail::tensor_size(outputs);
        if (targets.size() != rows) throw ValidationError("deterministic channel needs one target per input tuple");
        std::vector<double> k(rows * cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            if (targets[r] >= cols) throw ValidationError("deterministic channel target out of range");
            k[r * cols + targets[r]] = 1.0;
        }
        return validate(std::move(inputs), std::move(outputs), std::move(k));
    }

    /// Output a copy of the input variable under a new name.
    static Channel copy(const Variable& input, std::string output_name) {
        std::vector<std::size_t> id(input.alphabet.size());
        std::iota(id.begin(), id.end(), std::size_t{0});
        return deterministic({input}, {{std::move(output_name), input.alphabet}}, id);
    }

    const VariableList& inputs() const noexcept { return inputs_; }
    const VariableList& outputs() const noexcept { return outputs_; }
    std::span<const double> kernel() const noexcept { return kernel_; }
    std::size_t rows() const noexcept { return detail::tensor_size(inputs_); }
    std::size_t cols() const noexcept { return detail::tensor_size(outputs_); }
    double at(std::size_t row, std::size_t col) const { return kernel_[row * cols() + col]; }
    std::span<const double> row(std::size_t r) const { return std::span<const double>(kernel_).subspan(r * cols(), cols()); }

    /// Rows whose conditioning event had zero probability (filled uniformly).
    const std::vector<bool>& zero_mass_rows() const noexcept { return zero_rows_; }
    bool has_zero_mass_rows() const {
        return std::any_of(zero_rows_.begin(), zero_rows_.end(), [](bool b) { return b; });
    }

private:
    friend Channel condition(const JointDistribution&, const std::vector<std::string>&);

    Channel(VariableList in, VariableList out, std::vector<double> kernel, std::vector<bool> zero_rows)
        : inputs_(std::move(in)), outputs_(std::move(out)), kernel_(std::move(kernel)), zero_rows_(std::move(zero_rows)) {}

    VariableList inputs_;
    VariableList outputs_;
    std::vector<double> kernel_;
    std::vector<bool> zero_rows_;
};

/// Sums out every variable not in `keep`; the result follows the order of `keep`.
inline JointDistribution marginalize(const JointDistribution& joint, const std::vector<std::string>& keep) {
    if (keep.empty()) throw ValidationError("marginalize needs at least one variable to keep");
    std::vector<std::size_t> positions;
    VariableList kept;
    for (const auto& name : keep) {
        positions.push_back(joint.position_of(name));
        kept.push_back(joint.variables()[positions.back()]);
    }
    detail::require_unique_names(kept);
    const auto map = detail::projection_map(joint.variables(), positions);
    std::vector<double> out(detail::tensor_size(kept), 0.0);
    for (std::size_t flat = 0; flat < joint.size(); ++flat) out[map[flat]] += joint[flat];
    return JointDistribution(std::move(kept), std::move(out));
}

/// P(rest | given). Rows whose conditioning tuple has zero mass are uniform and flagged.
inline Channel condition(const JointDistribution& joint, const std::vector<std::string>& given) {
    if (given.empty() || given.size() >= joint.variables().size())
        throw ValidationError("condition needs a proper nonempty subset of the variables");
    std::vector<std::size_t> in_pos;
    std::vector<bool> is_input(joint.variables().size(), false);
    for (const auto& name : given) {
        const auto p = joint.position_of(name);
        if (is_input[p]) throw ValidationError("duplicate conditioning variable '" + name + "'");
        is_input[p] = true;
        in_pos.push_back(p);
    }
    std::vector<std::size_t> out_pos;
    for (std::size_t k = 0; k < joint.variables().size(); ++k)
        if (!is_input[k]) out_pos.push_back(k);

    VariableList ins, outs;
    for (auto p : in_pos) ins.push_back(joint.variables()[p]);
    for (auto p : out_pos) outs.push_back(joint.variables()[p]);

    const auto row_of = detail::projection_map(joint.variables(), in_pos);
    const auto col_of = detail::projection_map(joint.variables(), out_pos);
    const std::size_t rows = detail::tensor_size(ins);
    const std::size_t cols = detail::tensor_size(outs);
    std::vector<double> k(rows * cols, 0.0);
    for (std::size_t flat = 0; flat < joint.size(); ++flat) k[row_of[flat] * cols + col_of[flat]] += joint[flat];

    std::vector<bool> zero(rows, false);
    for (std::size_t r = 0; r < rows; ++r) {
        double mass = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mass += k[r * cols + c];
        if (mass <= 0.0) {
            zero[r] = true;
            for (std::size_t c = 0; c < cols; ++c) k[r * cols + c] = 1.0 / static_cast<double>(cols);
        } else {
            for (std::size_t c = 0; c < cols; ++c) k[r * cols + c] /= mass;
        }
    }
    return Channel(std::move(ins), std::move(outs), std::move(k), std::move(zero));
}

/// Extends `joint` by the channel's outputs: P(old, new) = P(old) * K(new | inputs).
/// The new variables are appended after the existing ones.
inline JointDistribution attach(const JointDistribution& joint, const Channel& channel) {
    std::vector<std::size_t> in_pos;
    for (const auto& v : channel.inputs()) {
        const auto p = joint.position_of(v.name);
        if (!(joint.variables()[p].alphabet == v.alphabet))
            throw ValidationError("alphabet mismatch for channel input '" + v.name + "'");
        in_pos.push_back(p);
    }
    for (const auto& v : channel.outputs())
        if (joint.has(v.name)) throw ValidationError("channel output '" + v.name + "' collides with an existing variable");

    VariableList vars = joint.variables();
    vars.insert(vars.end(), channel.outputs().begin(), channel.outputs().end());

    const auto row_of = detail::projection_map(joint.variables(), in_pos);
    const std::size_t cols = channel.cols();
    std::vector<double> out(joint.size() * cols);
    for (std::size_t flat = 0; flat < joint.size(); ++flat) {
        const auto r = channel.row(row_of[flat]);
        for (std::size_t c = 0; c < cols; ++c) out[flat * cols + c] = joint[flat] * r[c];
    }
    return JointDistribution(std::move(vars), std::move(out));
}

/// Projects a product label "a|b|..." onto its `part`-th component.
inline std::string label_component(std::string_view label, std::size_t part) {
    std::size_t start = 0;
    for (std::size_t k = 0; k < part; ++k) {
        const auto pos = label.find(label_separator, start);
        if (pos == std::string_view::npos) throw ValidationError("label '" + std::string(label) + "' has too few parts");
        start = pos + 1;
    }
    const auto end = label.find(label_separator, start);
    return std::string(label.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

/// Deterministic channel from a product-alphabet variable onto the alphabet of
/// one of its label components.
inline Channel label_projection(const Variable& input, std::size_t part, Variable output) {
    std::vector<std::size_t> targets;
    for (const auto& s : input.alphabet.symbols()) targets.push_back(output.alphabet.index_of(label_component(s, part)));
    return Channel::deterministic({input}, {std::move(output)}, targets);
}

/// Names used for the two sources and the shared component.
namespace names {
inline const std::string x1 = "X1";
inline const std::string x2 = "X2";
inline const std::string z1 = "Z1";
inline const std::string z2 = "Z2";
inline const std::string u = "U";
inline const std::string v = "V";
inline const std::string w = "W";
}  // namespace names

/// Alphabets used by shared_component_source.
struct SharedComponentAlphabets {
    Alphabet w;
    Alphabet x1_private;
    Alphabet x2_private;
};

inline SharedComponentAlphabets shared_component_alphabets(std::size_t w, std::size_t x1p, std::size_t x2p) {
    return {Alphabet::indexed(w), Alphabet::indexed(x1p), Alphabet::indexed(x2p)};
}

/// X1 = (X'1, W), X2 = (X'2, W) with W, X'1, X'2 independent. The result is a
/// joint over (X1, X2) whose labels are "x'|w"; W is recoverable from either
/// coordinate with label_projection(..., 1, ...).
inline JointDistribution shared_component_source(std::span<const double> w, std::span<const double> x1p,
                                                 std::span<const double> x2p) {
    const auto pw = JointDistribution::from_pmf(names::w, {w.begin(), w.end()});
    const auto p1 = JointDistribution::from_pmf("X1p", {x1p.begin(), x1p.end()});
    const auto p2 = JointDistribution::from_pmf("X2p", {x2p.begin(), x2p.end()});
    const auto a = shared_component_alphabets(w.size(), x1p.size(), x2p.size());
    const Alphabet x1_alpha = Alphabet::product(a.x1_private, a.w);
    const Alphabet x2_alpha = Alphabet::product(a.x2_private, a.w);

    const std::size_t nw = w.size(), n1 = x1p.size(), n2 = x2p.size();
    const std::size_t c1 = n1 * nw, c2 = n2 * nw;
    std::vector<double> pmf(c1 * c2, 0.0);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t k = 0; k < nw; ++k) {
                const std::size_t row = i * nw + k;
                const std::size_t col = j * nw + k;
                pmf[row * c2 + col] = p1[i] * p2[j] * pw[k];
            }
    return JointDistribution::validate(std::move(pmf), {{names::x1, x1_alpha}, {names::x2, x2_alpha}});
}

/// Attaches W as a deterministic function of X1 to a shared-component source.
inline JointDistribution with_shared_component(const JointDistribution& source, const Alphabet& w_alphabet) {
    return attach(source, label_projection(source.variable(names::x1), 1, {names::w, w_alphabet}));
}

}  // namespace lossyci
