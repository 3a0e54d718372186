#pragma once

// JSON channel description:
//
//   {
//     "name": "bsc-0.1",              optional
//     "description": "...",           optional
//     "X": ["0", "1"],                optional input labels
//     "Y": ["0", "1"],                optional output labels
//     "W": [[0.9, 0.1], [0.1, 0.9]],  row-stochastic, one row per input
//     "A": [[0.6, -0.4]]              optional halfspaces <p, a> >= 0
//   }
//
// Requires nlohmann/json.

#include "capcert/capacity.hpp"
#include "capcert/core.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace capcert {

inline constexpr double kFileRowTolerance = 1e-9;

struct ChannelSpecFile {
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> a;
    std::optional<std::string> name;
    std::optional<std::string> description;

    friend bool operator==(const ChannelSpecFile&, const ChannelSpecFile&) = default;

    /// Channel with rows renormalised to sum to one exactly.
    [[nodiscard]] Channel channel() const {
        const auto nx = static_cast<Eigen::Index>(w.size());
        const auto ny = static_cast<Eigen::Index>(w.front().size());
        Matrix m(nx, ny);
        for (Eigen::Index x = 0; x < nx; ++x) {
            for (Eigen::Index y = 0; y < ny; ++y) m(x, y) = w[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
            m.row(x) /= m.row(x).sum();
        }
        return Channel(std::move(m), input_labels, output_labels);
    }

    [[nodiscard]] bool has_constraints() const { return !a.empty(); }

    [[nodiscard]] ConstraintSet constraints() const {
        std::vector<Vector> vs;
        for (const auto& row : a) vs.emplace_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
        return ConstraintSet(std::move(vs), static_cast<Eigen::Index>(w.size()));
    }
};

namespace detail {

inline std::vector<std::vector<double>> read_matrix(const nlohmann::json& j, const char* key) {
    if (!j.is_array()) throw ParseError(std::string(key) + " must be an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const auto& row = j[r];
        if (!row.is_array()) throw ParseError(std::string(key) + " row " + std::to_string(r) + " is not an array");
        std::vector<double> vals;
        for (const auto& v : row) {
            if (!v.is_number()) throw ParseError(std::string(key) + " row " + std::to_string(r) + " has a non-numeric entry");
            vals.push_back(v.get<double>());
        }
        out.push_back(std::move(vals));
    }
    return out;
}

inline std::vector<std::string> read_labels(const nlohmann::json& j, const char* key) {
    if (!j.is_array()) throw ParseError(std::string(key) + " must be an array of labels");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (v.is_string()) {
            out.push_back(v.get<std::string>());
        } else if (v.is_number_integer()) {
            out.push_back(std::to_string(v.get<long long>()));
        } else {
            throw ParseError(std::string(key) + " labels must be strings or integers");
        }
    }
    return out;
}

}  // namespace detail

inline ChannelSpecFile parse_channel_spec(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("channel file must be a JSON object");
    if (!j.contains("W")) throw ParseError("channel file has no \"W\" matrix");

    ChannelSpecFile spec;
    spec.w = detail::read_matrix(j["W"], "W");
    if (spec.w.empty() || spec.w.front().empty()) throw ParseError("W must have at least one row and one column");
    const std::size_t ny = spec.w.front().size();
    for (std::size_t r = 0; r < spec.w.size(); ++r) {
        const auto& row = spec.w[r];
        if (row.size() != ny) throw ParseError("W row " + std::to_string(r) + " has the wrong length");
        double sum = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] < 0.0) {
                throw ParseError("W row " + std::to_string(r) + " has a negative entry at column " + std::to_string(c));
            }
            sum += row[c];
        }
        if (std::abs(sum - 1.0) > kFileRowTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "W row " << r << " sums to " << sum << ", not 1";
            throw ParseError(msg.str());
        }
    }
    spec.input_labels = j.contains("X") ? detail::read_labels(j["X"], "X") : Channel::default_labels(static_cast<Eigen::Index>(spec.w.size()));
    spec.output_labels = j.contains("Y") ? detail::read_labels(j["Y"], "Y") : Channel::default_labels(static_cast<Eigen::Index>(ny));
    if (spec.input_labels.size() != spec.w.size()) throw ParseError("X has a different length than the number of W rows");
    if (spec.output_labels.size() != ny) throw ParseError("Y has a different length than the W rows");
    if (j.contains("A") && !j["A"].is_null()) {
        spec.a = detail::read_matrix(j["A"], "A");
        for (std::size_t r = 0; r < spec.a.size(); ++r) {
            if (spec.a[r].size() != spec.w.size()) throw ParseError("A row " + std::to_string(r) + " has the wrong length");
        }
    }
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ParseError("name must be a string");
        spec.name = j["name"].get<std::string>();
    }
    if (j.contains("description")) {
        if (!j["description"].is_string()) throw ParseError("description must be a string");
        spec.description = j["description"].get<std::string>();
    }
    return spec;
}

inline ChannelSpecFile load_channel_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_channel_spec(buf.str());
}

inline nlohmann::json to_json(const ChannelSpecFile& spec) {
    nlohmann::json j;
    if (spec.name) j["name"] = *spec.name;
    if (spec.description) j["description"] = *spec.description;
    j["X"] = spec.input_labels;
    j["Y"] = spec.output_labels;
    j["W"] = spec.w;
    if (!spec.a.empty()) j["A"] = spec.a;
    return j;
}

inline std::string serialize_channel_spec(const ChannelSpecFile& spec) { return to_json(spec).dump(2) + "\n"; }

/// File description of an in-memory channel, for writing fixtures.
inline ChannelSpecFile spec_from_channel(const Channel& channel, const std::vector<Vector>& constraints = {}) {
    ChannelSpecFile spec;
    spec.input_labels = channel.input_labels();
    spec.output_labels = channel.output_labels();
    for (Eigen::Index x = 0; x < channel.inputs(); ++x) {
        std::vector<double> row(static_cast<std::size_t>(channel.outputs()));
        for (Eigen::Index y = 0; y < channel.outputs(); ++y) row[static_cast<std::size_t>(y)] = channel(x, y);
        spec.w.push_back(std::move(row));
    }
    for (const Vector& a : constraints) spec.a.emplace_back(a.data(), a.data() + a.size());
    return spec;
}

}  // namespace capcert
