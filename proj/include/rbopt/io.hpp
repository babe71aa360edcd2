// Copyright 2026 The rbopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RBOPT_IO_HPP
#define RBOPT_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rbopt/error.hpp"
#include "rbopt/model.hpp"
#include "rbopt/simulate.hpp"

namespace rbopt {

using Json = nlohmann::ordered_json;

inline constexpr const char* kDesignSchema = "rbopt.design/1";
inline constexpr const char* kResultSchema = "rbopt.result/1";
inline constexpr const char* kDatasetSchema = "rbopt.dataset/1";

/// Parses "basic", "moments" (order 2), "moments:K", "drift" or
/// "general[:n1,n2,...]". A bare "general" gets its lengths later.
inline Model parse_model(const std::string& text, int dim = 2, const std::vector<std::int64_t>& general_lengths = {}) {
    const HilbertDim d(dim);
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (head == "basic" && tail.empty()) return Model::basic(d);
        if (head == "drift" && tail.empty()) return Model::drift(d);
        if (head == "moments") return Model::moments(tail.empty() ? 2 : std::stoi(tail), d);
        if (head == "general") {
            std::vector<std::int64_t> ns = general_lengths;
            if (!tail.empty()) {
                ns.clear();
                std::stringstream ss(tail);
                std::string tok;
                while (std::getline(ss, tok, ',')) ns.push_back(std::stoll(tok));
            }
            if (ns.empty()) throw Error(Errc::InvalidArgument, "general model needs its lengths");
            return Model::general(ns, d);
        }
    } catch (const std::logic_error&) {
        throw Error(Errc::InvalidArgument, "malformed model descriptor '" + text + "'");
    }
    throw Error(Errc::InvalidArgument, "unknown model '" + text + "'");
}

/// Inverse of parse_model, including general lengths.
inline std::string model_descriptor(const Model& model) {
    if (model.kind() != ModelKind::General) return model.describe();
    std::string out = "general:";
    for (std::size_t i = 0; i < model.n_set().size(); ++i) out += (i ? "," : "") + std::to_string(model.n_set()[i]);
    return out;
}

namespace detail {

inline void require_finite(const Json& j, const std::string& where) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) throw Error(Errc::Schema, "non-finite number in " + where);
    if (j.is_array() || j.is_object())
        for (const auto& v : j) require_finite(v, where);
}

inline void check_schema(const Json& j, const char* schema) {
    if (!j.is_object() || !j.contains("schema") || j["schema"] != schema) {
        throw Error(Errc::Schema, std::string("expected schema ") + schema);
    }
}

template <class T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw Error(Errc::Schema, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Schema, std::string("field '") + key + "': " + e.what());
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
    out << text;
    if (!out) throw Error(Errc::InvalidArgument, "write failed for " + path);
}

inline Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Schema, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace detail

struct DesignFile {
    std::string model = "basic";
    int dim = 2;
    Params reference;
    std::string target = "theta1";
    double spam_time_s = 1e-3;
    double step_time_s = 1e-5;
    double total_time_s = 0.0;
    std::int64_t repeats = 1;
    std::int64_t candidates = 0;
    std::vector<std::int64_t> lengths;
    std::vector<std::int64_t> trials;
    std::vector<double> weights_real;
    std::vector<double> coefficients;
    double anticipated_sigma = 0.0;
    std::vector<std::string> warnings;

    ExperimentDesign design() const {
        ExperimentDesign d;
        d.lengths = lengths;
        d.trials = trials;
        d.repeats = repeats;
        d.time.spam_time = spam_time_s;
        d.time.step_time = step_time_s;
        d.validate();
        return d;
    }

    bool operator==(const DesignFile&) const = default;
};

inline Json to_json(const DesignFile& f) {
    Json j;
    j["schema"] = kDesignSchema;
    j["model"] = f.model;
    j["dim"] = f.dim;
    j["reference"] = f.reference;
    j["target"] = f.target;
    j["spam_time_s"] = f.spam_time_s;
    j["step_time_s"] = f.step_time_s;
    j["total_time_s"] = f.total_time_s;
    j["repeats"] = f.repeats;
    j["candidates"] = f.candidates;
    j["lengths"] = f.lengths;
    j["trials"] = f.trials;
    j["weights_real"] = f.weights_real;
    j["coefficients"] = f.coefficients;
    j["anticipated_sigma"] = f.anticipated_sigma;
    j["warnings"] = f.warnings;
    detail::require_finite(j, "design file");
    return j;
}

inline DesignFile design_from_json(const Json& j) {
    detail::check_schema(j, kDesignSchema);
    DesignFile f;
    f.model = detail::field<std::string>(j, "model");
    f.dim = detail::field<int>(j, "dim");
    f.reference = detail::field<Params>(j, "reference");
    f.target = detail::field<std::string>(j, "target");
    f.spam_time_s = detail::field<double>(j, "spam_time_s");
    f.step_time_s = detail::field<double>(j, "step_time_s");
    f.total_time_s = detail::field<double>(j, "total_time_s");
    f.repeats = detail::field<std::int64_t>(j, "repeats");
    f.candidates = detail::field<std::int64_t>(j, "candidates");
    f.lengths = detail::field<std::vector<std::int64_t>>(j, "lengths");
    f.trials = detail::field<std::vector<std::int64_t>>(j, "trials");
    f.weights_real = detail::field<std::vector<double>>(j, "weights_real");
    f.coefficients = detail::field<std::vector<double>>(j, "coefficients");
    f.anticipated_sigma = detail::field<double>(j, "anticipated_sigma");
    f.warnings = detail::field<std::vector<std::string>>(j, "warnings");
    if (f.lengths.size() != f.trials.size()) throw Error(Errc::Schema, "lengths and trials differ in size");
    return f;
}

inline std::string serialize(const DesignFile& f) { return to_json(f).dump(2) + "\n"; }
inline DesignFile parse_design(const std::string& text) { return design_from_json(detail::parse_json(text)); }

/// Dataset CSV: '#'-prefixed header lines, then a column header row.
inline std::string serialize(const Dataset& ds) {
    ds.validate();
    std::ostringstream os;
    os << "# " << kDatasetSchema << "\n";
    os << "# format: " << (ds.per_sequence ? "per-sequence" : "per-length") << "\n";
    os << "# seed: " << ds.seed << "\n";
    os << "# generative: " << ds.generative << "\n";
    if (!ds.per_sequence) {
        os << "n,trials,successes\n";
        for (const auto& r : ds.lengths) os << r.n << "," << r.trials << "," << r.successes << "\n";
    } else {
        os << "n,sequence_id,repeats,successes,s\n";
        for (const auto& r : ds.sequences) {
            os << r.n << "," << r.sequence_id << "," << r.repeats << "," << r.successes << ",";
            if (!std::isnan(r.s)) os << detail::shortest(r.s);
            os << "\n";
        }
    }
    return os.str();
}

inline Dataset parse_dataset(const std::string& text) {
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    bool have_header = false, have_schema = false;
    std::size_t line_no = 0;
    auto bad = [&](const std::string& why) {
        return Error(Errc::Schema, "dataset line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto start = line.find_first_not_of("# ");
            const std::string body = start == std::string::npos ? "" : line.substr(start);
            auto take = [&](const std::string& key) -> std::optional<std::string> {
                if (body.rfind(key, 0) == 0) return body.substr(key.size());
                return std::nullopt;
            };
            if (body == kDatasetSchema) {
                have_schema = true;
            } else if (auto v = take("seed: ")) {
                try {
                    std::size_t pos = 0;
                    ds.seed = std::stoull(*v, &pos);
                    if (pos != v->size() || v->front() == '-') throw std::invalid_argument(*v);
                } catch (const std::logic_error&) {
                    throw bad("malformed seed");
                }
            } else if (auto g = take("generative: ")) {
                ds.generative = *g;
            }
            continue;
        }
        if (!have_header) {
            if (line == "n,trials,successes") ds.per_sequence = false;
            else if (line == "n,sequence_id,repeats,successes,s" || line == "n,sequence_id,repeats,successes") ds.per_sequence = true;
            else throw bad("unrecognized column header '" + line + "'");
            have_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        try {
            std::size_t pos = 0;
            auto integer = [&](const std::string& s) {
                const long long v = std::stoll(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return static_cast<std::int64_t>(v);
            };
            if (!ds.per_sequence) {
                if (cells.size() != 3) throw bad("expected 3 columns");
                ds.lengths.push_back({integer(cells[0]), integer(cells[1]), integer(cells[2])});
            } else {
                if (cells.size() != 4 && cells.size() != 5) throw bad("expected 4 or 5 columns");
                SequenceRecord r{integer(cells[0]), integer(cells[1]), integer(cells[2]), integer(cells[3])};
                if (cells.size() == 5 && !cells[4].empty()) r.s = std::stod(cells[4]);
                ds.sequences.push_back(r);
            }
        } catch (const std::logic_error&) {
            throw bad("malformed number");
        }
    }
    if (!have_schema) throw Error(Errc::Schema, std::string("expected schema ") + kDatasetSchema);
    if (!have_header) throw Error(Errc::Schema, "dataset has no column header");
    try {
        ds.validate();
    } catch (const Error& e) {
        throw Error(Errc::Schema, e.what());
    }
    return ds;
}

struct ParamEstimate {
    std::string name;
    double value = 0.0;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    std::optional<double> z0;
    bool operator==(const ParamEstimate&) const = default;
};

struct Histogram {
    std::string name;
    std::vector<double> edges;
    std::vector<std::int64_t> counts;
    bool operator==(const Histogram&) const = default;
};

struct CurvePoint {
    std::int64_t n = 0;
    double p_hat = 0.0;
    double standard_error = 0.0;
    std::map<std::string, double> fitted;
    bool operator==(const CurvePoint&) const = default;
};

struct ResultFile {
    std::string command;
    std::string model;
    std::optional<double> log_likelihood;
    std::optional<bool> converged;
    std::optional<double> level;
    std::vector<ParamEstimate> params;
    std::vector<Histogram> histograms;
    std::optional<double> elr_observed_ratio;
    std::optional<double> elr_p_value;
    std::vector<CurvePoint> curve;
    /// Free-form named scalars (variance reports, comparisons).
    std::map<std::string, double> values;
    std::vector<std::string> warnings;
    bool operator==(const ResultFile&) const = default;
};

namespace detail {

template <class T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <class T>
std::optional<T> get_optional(const Json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return field<T>(j, key);
}

}  // namespace detail

inline Json to_json(const ResultFile& f) {
    Json j;
    j["schema"] = kResultSchema;
    j["command"] = f.command;
    j["model"] = f.model;
    detail::put_optional(j, "log_likelihood", f.log_likelihood);
    detail::put_optional(j, "converged", f.converged);
    detail::put_optional(j, "level", f.level);
    j["params"] = Json::array();
    for (const auto& p : f.params) {
        Json e;
        e["name"] = p.name;
        e["value"] = p.value;
        detail::put_optional(e, "ci_lo", p.ci_lo);
        detail::put_optional(e, "ci_hi", p.ci_hi);
        detail::put_optional(e, "z0", p.z0);
        j["params"].push_back(e);
    }
    j["histograms"] = Json::array();
    for (const auto& h : f.histograms) j["histograms"].push_back({{"name", h.name}, {"edges", h.edges}, {"counts", h.counts}});
    if (f.elr_observed_ratio || f.elr_p_value) {
        Json e;
        detail::put_optional(e, "observed_ratio", f.elr_observed_ratio);
        detail::put_optional(e, "p_value", f.elr_p_value);
        j["elr"] = e;
    }
    j["curve"] = Json::array();
    for (const auto& c : f.curve) {
        Json e{{"n", c.n}, {"p_hat", c.p_hat}, {"standard_error", c.standard_error}};
        e["fitted"] = Json::object();
        for (const auto& [k, v] : c.fitted) e["fitted"][k] = v;
        j["curve"].push_back(e);
    }
    j["values"] = Json::object();
    for (const auto& [k, v] : f.values) j["values"][k] = v;
    j["warnings"] = f.warnings;
    detail::require_finite(j, "result file");
    return j;
}

inline ResultFile result_from_json(const Json& j) {
    detail::check_schema(j, kResultSchema);
    ResultFile f;
    f.command = detail::field<std::string>(j, "command");
    f.model = detail::field<std::string>(j, "model");
    f.log_likelihood = detail::get_optional<double>(j, "log_likelihood");
    f.converged = detail::get_optional<bool>(j, "converged");
    f.level = detail::get_optional<double>(j, "level");
    for (const auto& e : detail::field<Json>(j, "params")) {
        ParamEstimate p;
        p.name = detail::field<std::string>(e, "name");
        p.value = detail::field<double>(e, "value");
        p.ci_lo = detail::get_optional<double>(e, "ci_lo");
        p.ci_hi = detail::get_optional<double>(e, "ci_hi");
        p.z0 = detail::get_optional<double>(e, "z0");
        f.params.push_back(p);
    }
    for (const auto& e : detail::field<Json>(j, "histograms")) {
        f.histograms.push_back({detail::field<std::string>(e, "name"), detail::field<std::vector<double>>(e, "edges"),
                                detail::field<std::vector<std::int64_t>>(e, "counts")});
    }
    if (j.contains("elr")) {
        f.elr_observed_ratio = detail::get_optional<double>(j["elr"], "observed_ratio");
        f.elr_p_value = detail::get_optional<double>(j["elr"], "p_value");
    }
    for (const auto& e : detail::field<Json>(j, "curve")) {
        CurvePoint c;
        c.n = detail::field<std::int64_t>(e, "n");
        c.p_hat = detail::field<double>(e, "p_hat");
        c.standard_error = detail::field<double>(e, "standard_error");
        c.fitted = detail::field<std::map<std::string, double>>(e, "fitted");
        f.curve.push_back(c);
    }
    f.values = detail::field<std::map<std::string, double>>(j, "values");
    f.warnings = detail::field<std::vector<std::string>>(j, "warnings");
    return f;
}

inline std::string serialize(const ResultFile& f) { return to_json(f).dump(2) + "\n"; }
inline ResultFile parse_result(const std::string& text) { return result_from_json(detail::parse_json(text)); }

/// Equal-width histogram over the sample range.
inline Histogram make_histogram(const std::string& name, const std::vector<double>& values, std::size_t bins = 40) {
    Histogram h;
    h.name = name;
    if (values.empty() || bins == 0) return h;
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (hi <= lo) hi = lo + (lo == 0.0 ? 1e-300 : std::abs(lo) * 1e-12);
    h.counts.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        h.counts[std::min(b, bins - 1)]++;
    }
    return h;
}

}  // namespace rbopt

#endif  // RBOPT_IO_HPP
