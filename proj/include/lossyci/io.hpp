#pragma once

// JSON encoding of distributions and channels.
//
//   {"variables":[{"name":"X1","alphabet":["a","b"]},...],"pmf":[...row-major...]}
//   {"inputs":[...],"outputs":[...],"pmf":[...one row per input tuple...]}
//   {"source":["a",...],"reconstruction":["a",...],"costs":[...row-major, null = forbidden...]}

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "probability.hpp"
#include "rate_distortion.hpp"

namespace lossyci::io {

using json = nlohmann::ordered_json;

inline json variables_to_json(const VariableList& vars) {
    json out = json::array();
    for (const auto& v : vars) out.push_back({{"name", v.name}, {"alphabet", v.alphabet.symbols()}});
    return out;
}

inline VariableList variables_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("variable list must be an array");
    VariableList vars;
    for (const auto& v : j) {
        if (!v.is_object() || !v.contains("name") || !v.contains("alphabet"))
            throw ValidationError("variable entries need 'name' and 'alphabet'");
        if (!v["name"].is_string() || !v["alphabet"].is_array()) throw ValidationError("malformed variable entry");
        std::vector<std::string> symbols;
        for (const auto& s : v["alphabet"]) {
            if (!s.is_string()) throw ValidationError("alphabet symbols must be strings");
            symbols.push_back(s.get<std::string>());
        }
        vars.push_back({v["name"].get<std::string>(), Alphabet(std::move(symbols))});
    }
    return vars;
}

inline std::vector<double> numbers_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string(what) + " must be a flat array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw ValidationError(std::string(what) + " must contain only numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline json to_json(const JointDistribution& d) {
    return {{"variables", variables_to_json(d.variables())}, {"pmf", std::vector<double>(d.pmf().begin(), d.pmf().end())}};
}

inline json to_json(const Channel& c) {
    return {{"inputs", variables_to_json(c.inputs())},
            {"outputs", variables_to_json(c.outputs())},
            {"pmf", std::vector<double>(c.kernel().begin(), c.kernel().end())}};
}

inline JointDistribution distribution_from_json(const json& j) {
    if (!j.is_object() || !j.contains("variables") || !j.contains("pmf"))
        throw ValidationError("distribution JSON needs 'variables' and 'pmf'");
    return JointDistribution::validate(numbers_from_json(j["pmf"], "pmf"), variables_from_json(j["variables"]));
}

inline Channel channel_from_json(const json& j) {
    if (!j.is_object() || !j.contains("inputs") || !j.contains("outputs"))
        throw ValidationError("channel JSON needs 'inputs' and 'outputs'");
    const char* key = j.contains("pmf") ? "pmf" : "kernel";
    if (!j.contains(key)) throw ValidationError("channel JSON needs 'pmf'");
    return Channel::validate(variables_from_json(j["inputs"]), variables_from_json(j["outputs"]),
                             numbers_from_json(j[key], key));
}

inline DistortionMeasure distortion_from_json(const json& j) {
    if (!j.is_object() || !j.contains("source") || !j.contains("reconstruction") || !j.contains("costs"))
        throw ValidationError("distortion JSON needs 'source', 'reconstruction' and 'costs'");
    auto symbols = [](const json& a, const char* what) {
        if (!a.is_array()) throw ValidationError(std::string(what) + " must be an array of symbols");
        std::vector<std::string> out;
        for (const auto& s : a) {
            if (!s.is_string()) throw ValidationError(std::string(what) + " symbols must be strings");
            out.push_back(s.get<std::string>());
        }
        return Alphabet(std::move(out));
    };
    if (!j["costs"].is_array()) throw ValidationError("costs must be an array");
    std::vector<double> costs;
    for (const auto& c : j["costs"]) {
        if (c.is_null()) costs.push_back(std::numeric_limits<double>::infinity());
        else if (c.is_number()) costs.push_back(c.get<double>());
        else throw ValidationError("costs must be numbers or null");
    }
    return {symbols(j["source"], "source"), symbols(j["reconstruction"], "reconstruction"), std::move(costs)};
}

inline json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

inline JointDistribution load_distribution(const std::string& path) { return distribution_from_json(read_file(path)); }
inline Channel load_channel(const std::string& path) { return channel_from_json(read_file(path)); }
inline DistortionMeasure load_distortion(const std::string& path) { return distortion_from_json(read_file(path)); }

/// Fixed-point rendering used for result documents: every floating value is
/// printed with six decimals.
inline void write_fixed(std::ostream& os, const json& j) {
    switch (j.type()) {
        case json::value_t::object: {
            os << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',';
                first = false;
                os << json(it.key()).dump() << ':';
                write_fixed(os, it.value());
            }
            os << '}';
            break;
        }
        case json::value_t::array: {
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ',';
                write_fixed(os, j[i]);
            }
            os << ']';
            break;
        }
        case json::value_t::number_float: {
            const double x = j.get<double>();
            if (!std::isfinite(x)) {
                os << "null";
                break;
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", std::abs(x) < 5e-7 ? 0.0 : x);
            os << buf;
            break;
        }
        default:
            os << j.dump();
    }
}

inline std::string dump_fixed(const json& j) {
    std::ostringstream os;
    write_fixed(os, j);
    return os.str();
}

}  // namespace lossyci::io
