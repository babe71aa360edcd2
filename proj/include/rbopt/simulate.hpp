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

#ifndef RBOPT_SIMULATE_HPP
#define RBOPT_SIMULATE_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rbopt/clifford.hpp"
#include "rbopt/design.hpp"
#include "rbopt/error.hpp"
#include "rbopt/model.hpp"
#include "rbopt/parallel.hpp"
#include "rbopt/random.hpp"

namespace rbopt {

namespace detail {

/// Shortest decimal text that parses back to the same double.
inline std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Error applied after every ideal Clifford in a gate-level simulation.
struct Channel {
    enum class Kind { None, Depolarizing, UnitaryX };
    Kind kind = Kind::None;
    /// lambda for Depolarizing, phi for UnitaryX.
    double parameter = 0.0;

    static Channel none() { return {}; }
    static Channel depolarizing(double lambda) { return {Kind::Depolarizing, lambda}; }
    static Channel unitary_x(double phi) { return {Kind::UnitaryX, phi}; }

    void validate() const {
        if (!std::isfinite(parameter)) throw Error(Errc::InvalidArgument, "channel parameter must be finite");
        if (kind == Kind::Depolarizing && (parameter < 0.0 || parameter > 1.0 + 1.0 / 3.0)) {
            throw Error(Errc::InvalidArgument, "depolarizing strength must lie in [0, 4/3]");
        }
        if (kind == Kind::UnitaryX && !(parameter > -std::numbers::pi && parameter <= std::numbers::pi)) {
            throw Error(Errc::InvalidArgument, "unitary angle must lie in (-pi, pi]");
        }
    }

    /// Step error of the twirled channel.
    double step_error() const {
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::Depolarizing: return parameter / 2.0;
            case Kind::UnitaryX: return 2.0 / 3.0 * std::sin(parameter) * std::sin(parameter);
        }
        return 0.0;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::None: os << "none"; break;
            case Kind::Depolarizing: os << "depolarizing:" << detail::shortest(parameter); break;
            case Kind::UnitaryX: os << "unitary:" << detail::shortest(parameter); break;
        }
        return os.str();
    }

    bool operator==(const Channel&) const = default;
};

struct GenerativeModel {
    enum class Kind { FromModel, GaussianStep, GateLevel };
    Kind kind = Kind::FromModel;
    Model model = Model::basic();
    Params params;
    /// GaussianStep and GateLevel: SPAM error.
    double theta0 = 0.0;
    double step_mean = 0.0;
    double step_sd = 0.0;
    Channel channel;

    static GenerativeModel from_model(Model model, Params params) {
        GenerativeModel g;
        g.model = std::move(model);
        g.params = std::move(params);
        validate_params(g.model, g.params);
        return g;
    }
    static GenerativeModel gaussian_step(double theta0, double mean, double sd) {
        if (!(theta0 >= 0.0 && theta0 <= 1.0) || !std::isfinite(mean) || !(sd >= 0.0)) {
            throw Error(Errc::InvalidArgument, "invalid Gaussian step parameters");
        }
        GenerativeModel g;
        g.kind = Kind::GaussianStep;
        g.theta0 = theta0;
        g.step_mean = mean;
        g.step_sd = sd;
        return g;
    }
    static GenerativeModel gate_level(Channel channel, double theta0 = 0.0) {
        channel.validate();
        if (!(theta0 >= 0.0 && theta0 <= 1.0)) throw Error(Errc::InvalidArgument, "SPAM error must lie in [0, 1]");
        GenerativeModel g;
        g.kind = Kind::GateLevel;
        g.channel = channel;
        g.theta0 = theta0;
        return g;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::FromModel:
                os << model.describe();
                for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : ":") << detail::shortest(params[i]);
                break;
            case Kind::GaussianStep: os << "gaussian:" << detail::shortest(theta0) << "," << detail::shortest(step_mean) << "," << detail::shortest(step_sd); break;
            case Kind::GateLevel:
                os << "gate:" << channel.describe();
                if (theta0 != 0.0) os << ",spam=" << detail::shortest(theta0);
                break;
        }
        return os.str();
    }
};

struct LengthRecord {
    std::int64_t n = 0;
    std::int64_t trials = 0;
    std::int64_t successes = 0;
    bool operator==(const LengthRecord&) const = default;
};

struct SequenceRecord {
    std::int64_t n = 0;
    std::int64_t sequence_id = 0;
    std::int64_t repeats = 1;
    std::int64_t successes = 0;
    /// Exact success probability of the sequence; NaN when unknown.
    double s = std::numeric_limits<double>::quiet_NaN();
    bool operator==(const SequenceRecord& o) const {
        return n == o.n && sequence_id == o.sequence_id && repeats == o.repeats && successes == o.successes &&
               (s == o.s || (std::isnan(s) && std::isnan(o.s)));
    }
};

struct Dataset {
    std::vector<LengthRecord> lengths;
    std::vector<SequenceRecord> sequences;
    bool per_sequence = false;
    std::uint64_t seed = 0;
    std::string generative;

    void validate() const {
        for (const auto& r : lengths)
            if (r.n < 0 || r.trials < 0 || r.successes < 0 || r.successes > r.trials) {
                throw Error(Errc::InvalidArgument, "invalid record at length " + std::to_string(r.n));
            }
        for (const auto& r : sequences)
            if (r.n < 0 || r.repeats < 1 || r.successes < 0 || r.successes > r.repeats) {
                throw Error(Errc::InvalidArgument, "invalid sequence record at length " + std::to_string(r.n));
            }
    }

    /// Per-length totals, sorted by length.
    std::vector<LengthRecord> aggregate() const {
        if (!per_sequence) {
            auto out = lengths;
            std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
            return out;
        }
        std::map<std::int64_t, LengthRecord> acc;
        for (const auto& r : sequences) {
            auto& a = acc[r.n];
            a.n = r.n;
            a.trials += r.repeats;
            a.successes += r.successes;
        }
        std::vector<LengthRecord> out;
        for (const auto& [n, r] : acc) out.push_back(r);
        return out;
    }

    bool operator==(const Dataset&) const = default;
};

namespace detail {

template <class Rng>
std::int64_t draw_binomial(Rng& rng, std::int64_t trials, double p) {
    if (trials == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    return std::binomial_distribution<std::int64_t>(trials, p)(rng);
}

/// Success probability of one random sequence of n Cliffords with an error
/// after each, followed by the exact inverse. The qubit state is tracked as its
/// Bloch vector, which is a complete description of a single-qubit density
/// matrix; Clifford actions are exact signed permutations.
inline double gate_sequence_success(std::int64_t n, const Channel& channel, double theta0, StreamRng& rng) {
    const auto& group = CliffordGroup::instance();
    double v[3] = {0.0, 0.0, 1.0 - 2.0 * theta0};
    const double shrink = channel.kind == Channel::Kind::Depolarizing ? 1.0 - channel.parameter : 1.0;
    const double c = channel.kind == Channel::Kind::UnitaryX ? std::cos(2.0 * channel.parameter) : 1.0;
    const double s = channel.kind == Channel::Kind::UnitaryX ? std::sin(2.0 * channel.parameter) : 0.0;
    std::size_t total = group.identity();
    auto apply = [&](std::size_t g) {
        const auto& r = group.rotation(g);
        const double x = r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
        const double y = r[3] * v[0] + r[4] * v[1] + r[5] * v[2];
        const double z = r[6] * v[0] + r[7] * v[1] + r[8] * v[2];
        v[0] = x;
        v[1] = y;
        v[2] = z;
    };
    for (std::int64_t k = 0; k < n; ++k) {
        const auto g = static_cast<std::size_t>(rng.below(CliffordGroup::size()));
        apply(g);
        total = group.compose(g, total);
        switch (channel.kind) {
            case Channel::Kind::None: break;
            case Channel::Kind::Depolarizing:
                v[0] *= shrink;
                v[1] *= shrink;
                v[2] *= shrink;
                break;
            case Channel::Kind::UnitaryX: {
                const double y = c * v[1] - s * v[2];
                const double z = s * v[1] + c * v[2];
                v[1] = y;
                v[2] = z;
                break;
            }
        }
    }
    apply(group.inverse(total));
    return std::clamp(0.5 * (1.0 + v[2]), 0.0, 1.0);
}

inline constexpr std::uint64_t kStreamModel = 1;
inline constexpr std::uint64_t kStreamGaussian = 2;
inline constexpr std::uint64_t kStreamGate = 3;

inline std::uint64_t length_stream(std::uint64_t kind, std::size_t j) { return (kind << 40) + j; }

}  // namespace detail

struct GateLevelOptions {
    /// With one repeat per sequence every trial is an independent Bernoulli
    /// draw with the sequence-averaged probability, which the twirl makes
    /// exactly the basic-model value. Sampling that binomial directly is
    /// distributionally identical and avoids simulating millions of sequences.
    bool marginal_single_repeat = true;
};

/// Per-sequence gate-level data (or per-length data when repeats = 1 and the
/// marginal shortcut is enabled). Single qubit only.
inline Dataset simulate_gate_level(const ExperimentDesign& design, const Channel& channel, std::uint64_t seed,
                                   double theta0 = 0.0, const GateLevelOptions& options = {}) {
    design.validate();
    channel.validate();
    if (!(theta0 >= 0.0 && theta0 <= 1.0)) throw Error(Errc::InvalidArgument, "SPAM error must lie in [0, 1]");
    Dataset ds;
    ds.seed = seed;
    ds.generative = GenerativeModel::gate_level(channel, theta0).describe();
    const std::size_t m = design.lengths.size();
    if (design.repeats == 1 && options.marginal_single_repeat) {
        const Model basic = Model::basic();
        const Params p{theta0, channel.step_error()};
        ds.lengths.resize(m);
        parallel_for(m, [&](std::size_t j) {
            StreamRng rng(seed, detail::length_stream(detail::kStreamGate, j));
            const double prob = success_probability(basic, p, design.lengths[j]);
            ds.lengths[j] = {design.lengths[j], design.trials[j], detail::draw_binomial(rng, design.trials[j], prob)};
        });
        std::sort(ds.lengths.begin(), ds.lengths.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
        return ds;
    }
    ds.per_sequence = true;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return design.lengths[a] < design.lengths[b]; });
    std::vector<std::size_t> offset{0};
    for (auto j : order) offset.push_back(offset.back() + static_cast<std::size_t>(design.trials[j] / design.repeats));
    ds.sequences.resize(offset.back());
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t j = order[r];
        const std::size_t k = offset[r + 1] - offset[r];
        parallel_for(k, [&](std::size_t q) {
            StreamRng rng(seed, detail::length_stream(detail::kStreamGate, j), q);
            const double s = detail::gate_sequence_success(design.lengths[j], channel, theta0, rng);
            auto& rec = ds.sequences[offset[r] + q];
            rec = {design.lengths[j], static_cast<std::int64_t>(q), design.repeats,
                   detail::draw_binomial(rng, design.repeats, s), s};
        });
    }
    return ds;
}

/// Per-length counts from a statistical generative model, or from the
/// gate-level simulator.
inline Dataset simulate_counts(const ExperimentDesign& design, const GenerativeModel& gen, std::uint64_t seed) {
    design.validate();
    if (gen.kind == GenerativeModel::Kind::GateLevel) return simulate_gate_level(design, gen.channel, seed, gen.theta0);
    if (design.repeats != 1) {
        throw Error(Errc::UnsupportedGenerative, "repeated sequences require a gate-level generative model");
    }
    Dataset ds;
    ds.seed = seed;
    ds.generative = gen.describe();
    const std::size_t m = design.lengths.size();
    ds.lengths.resize(m);
    if (gen.kind == GenerativeModel::Kind::FromModel) {
        validate_params(gen.model, gen.params);
        parallel_for(m, [&](std::size_t j) {
            StreamRng rng(seed, detail::length_stream(detail::kStreamModel, j));
            const double p = success_probability(gen.model, gen.params, design.lengths[j]);
            ds.lengths[j] = {design.lengths[j], design.trials[j], detail::draw_binomial(rng, design.trials[j], p)};
        });
    } else {
        const Model basic = Model::basic();
        parallel_for(m, [&](std::size_t j) {
            StreamRng rng(seed, detail::length_stream(detail::kStreamGaussian, j));
            std::normal_distribution<double> normal(gen.step_mean, gen.step_sd);
            std::int64_t c = 0;
            for (std::int64_t t = 0; t < design.trials[j]; ++t) {
                double eps;
                int attempts = 0;
                do {
                    eps = gen.step_sd > 0.0 ? normal(rng) : gen.step_mean;
                    if (++attempts > 1000000) throw Error(Errc::InvalidArgument, "truncated Gaussian has negligible mass in [0, 1]");
                } while (eps < 0.0 || eps > 1.0);
                const Params p{gen.theta0, eps};
                if (rng.uniform() < success_probability(basic, p, design.lengths[j])) ++c;
            }
            ds.lengths[j] = {design.lengths[j], design.trials[j], c};
        });
    }
    std::sort(ds.lengths.begin(), ds.lengths.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
    return ds;
}

}  // namespace rbopt

#endif  // RBOPT_SIMULATE_HPP
