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

#ifndef RBOPT_VARIANCE_HPP
#define RBOPT_VARIANCE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <tuple>
#include <map>
#include <random>
#include <vector>

#include "rbopt/error.hpp"
#include "rbopt/parallel.hpp"
#include "rbopt/random.hpp"
#include "rbopt/simulate.hpp"

namespace rbopt {

struct UnitaryModelVariance {
    double variance = 0.0;
    double lambda = 0.0;
    /// Total width 2 * 1.96 * sqrt(variance) of the normal 95% interval.
    double width95 = 0.0;
};

/// Variance of the pooled success frequency from k sequences of l repeats
/// (M = k l trials) when each sequence ends in a random pure state with
/// probability 1 - lambda and in the ideal state otherwise.
inline UnitaryModelVariance unitary_model_variance(double s_bar, int dim, std::int64_t repeats, std::int64_t trials) {
    if (dim < 2) throw Error(Errc::InvalidArgument, "dimension must be at least 2");
    if (repeats < 1 || trials < 1) throw Error(Errc::InvalidArgument, "repeats and trial count must be positive");
    const double d = dim;
    if (!(s_bar >= 1.0 / d && s_bar <= 1.0)) {
        throw Error(Errc::MixtureUndefined, "mean success probability must lie in [1/D, 1]");
    }
    const double m = static_cast<double>(trials);
    const double l = static_cast<double>(repeats);
    UnitaryModelVariance out;
    out.lambda = (s_bar - 1.0 / d) / (1.0 - 1.0 / d);
    const double second = out.lambda + (1.0 - s_bar) / (1.0 - 1.0 / d) * 2.0 / (d * (d + 1.0));
    out.variance = std::max(0.0, s_bar * (1.0 - s_bar) / m + (l - 1.0) / m * (second - s_bar * s_bar));
    out.width95 = 2.0 * 1.96 * std::sqrt(out.variance);
    return out;
}

struct VarianceReport {
    std::int64_t n = 0;
    std::int64_t sequences = 0;
    std::int64_t repeats = 1;
    /// Pooled success frequency.
    double s_hat = 0.0;
    /// Mean recorded sequence probability (s_hat when none are recorded).
    double s_bar = 0.0;
    double empirical_var = 0.0;
    double predicted_binomial = 0.0;
    double predicted_excess = 0.0;
    /// Unitary mixture model prediction; NaN when s_bar < 1/D.
    double predicted_unitary = 0.0;
};

namespace detail {

struct SequenceGroup {
    std::int64_t n = 0;
    std::int64_t repeats = 0;
    std::vector<double> counts;
    std::vector<double> s;
};

inline std::vector<SequenceGroup> group_sequences(const Dataset& ds) {
    if (!ds.per_sequence) throw Error(Errc::InvalidArgument, "per-sequence records required");
    std::map<std::int64_t, SequenceGroup> groups;
    for (const auto& r : ds.sequences) {
        auto& g = groups[r.n];
        if (g.counts.empty()) {
            g.n = r.n;
            g.repeats = r.repeats;
        } else if (g.repeats != r.repeats) {
            throw Error(Errc::InvalidArgument, "unequal repeat counts at length " + std::to_string(r.n));
        }
        g.counts.push_back(static_cast<double>(r.successes));
        g.s.push_back(r.s);
    }
    std::vector<SequenceGroup> out;
    for (auto& [n, g] : groups) {
        if (g.counts.size() < 2) throw Error(Errc::InsufficientSequences, "fewer than 2 sequences at length " + std::to_string(n));
        out.push_back(std::move(g));
    }
    return out;
}

inline bool all_recorded(const std::vector<double>& s) {
    return std::none_of(s.begin(), s.end(), [](double v) { return std::isnan(v); });
}

inline double mean(const std::vector<double>& v) {
    long double acc = 0.0L;
    for (double x : v) acc += x;
    return static_cast<double>(acc / v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    const double m = mean(v);
    long double acc = 0.0L;
    for (double x : v) acc += (x - m) * (x - m);
    return static_cast<double>(acc / (v.size() - 1));
}

}  // namespace detail

/// Per-length comparison of the sequence-bootstrap variance of the pooled
/// frequency with the binomial term and the excess from repeating sequences.
inline std::vector<VarianceReport> variance_of_mean(const Dataset& ds, int dim = 2, std::size_t bootstrap = 2000,
                                                    std::uint64_t seed = 0) {
    auto groups = detail::group_sequences(ds);
    std::vector<VarianceReport> out;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const std::size_t k = g.counts.size();
        const double l = static_cast<double>(g.repeats);
        const double m = static_cast<double>(k) * l;
        VarianceReport rep;
        rep.n = g.n;
        rep.sequences = static_cast<std::int64_t>(k);
        rep.repeats = g.repeats;
        rep.s_hat = detail::mean(g.counts) / l;
        double second;
        if (detail::all_recorded(g.s)) {
            rep.s_bar = detail::mean(g.s);
            second = 0.0;
            for (double v : g.s) second += v * v;
            second /= static_cast<double>(k);
        } else {
            // Unbiased moment estimate from counts: E[C(C-1)] = l(l-1) E[S^2].
            rep.s_bar = rep.s_hat;
            second = 0.0;
            if (g.repeats > 1) {
                for (double c : g.counts) second += c * (c - 1.0);
                second /= static_cast<double>(k) * l * (l - 1.0);
            }
        }
        rep.predicted_binomial = rep.s_bar * (1.0 - rep.s_bar) / m;
        rep.predicted_excess = g.repeats == 1 ? 0.0 : std::max(0.0, (l - 1.0) / m * (second - rep.s_bar * rep.s_bar));
        try {
            rep.predicted_unitary = unitary_model_variance(rep.s_bar, dim, g.repeats, static_cast<std::int64_t>(m)).variance;
        } catch (const Error&) {
            rep.predicted_unitary = std::numeric_limits<double>::quiet_NaN();
        }
        StreamRng rng(seed, 0x5EED0000ULL + gi);
        std::vector<double> draws(bootstrap);
        for (auto& d : draws) {
            double acc = 0.0;
            for (std::size_t q = 0; q < k; ++q) acc += g.counts[rng.below(k)];
            d = acc / m;
        }
        rep.empirical_var = bootstrap >= 2 ? detail::sample_variance(draws) : 0.0;
        out.push_back(rep);
    }
    return out;
}

struct TotalVarianceCheck {
    std::int64_t n = 0;
    double empirical = 0.0;
    double predicted = 0.0;
    /// Bootstrap standard error of empirical - predicted.
    double standard_error = 0.0;
    double z = 0.0;
};

/// var(C) across sequences against l s(1-s) + l(l-1) var(S) using recorded
/// sequence probabilities. Needs exact s values, so simulation only.
inline std::vector<TotalVarianceCheck> total_variance_check(const Dataset& ds, std::size_t bootstrap = 1000,
                                                            std::uint64_t seed = 0) {
    auto groups = detail::group_sequences(ds);
    std::vector<TotalVarianceCheck> out;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        if (!detail::all_recorded(g.s)) throw Error(Errc::InvalidArgument, "sequence probabilities not recorded");
        const double l = static_cast<double>(g.repeats);
        auto stat = [&](const std::vector<double>& c, const std::vector<double>& s) {
            const double sb = detail::mean(s);
            return std::pair{detail::sample_variance(c), l * sb * (1.0 - sb) + l * (l - 1.0) * detail::sample_variance(s)};
        };
        TotalVarianceCheck chk;
        chk.n = g.n;
        std::tie(chk.empirical, chk.predicted) = stat(g.counts, g.s);
        const std::size_t k = g.counts.size();
        StreamRng rng(seed, 0x70AD0000ULL + gi);
        std::vector<double> diffs(bootstrap), c(k), s(k);
        for (auto& d : diffs) {
            for (std::size_t q = 0; q < k; ++q) {
                const auto pick = rng.below(k);
                c[q] = g.counts[pick];
                s[q] = g.s[pick];
            }
            auto [e, p] = stat(c, s);
            d = e - p;
        }
        chk.standard_error = std::sqrt(detail::sample_variance(diffs));
        chk.z = chk.standard_error > 0.0 ? (chk.empirical - chk.predicted) / chk.standard_error : 0.0;
        out.push_back(chk);
    }
    return out;
}

struct HaarMoment {
    double estimate = 0.0;
    double standard_error = 0.0;
    /// 2 / (D (D + 1)) for the second moment, 1 / D for the first.
    double expected = 0.0;
};

/// Monte Carlo average of |<chi|psi>|^(2 moment) over Haar-random pure states
/// psi, with chi the first basis vector.
inline HaarMoment haar_fidelity_moment(int dim, std::size_t samples, std::uint64_t seed, int moment = 2) {
    if (dim < 2) throw Error(Errc::InvalidArgument, "dimension must be at least 2");
    if (samples < 1000) throw Error(Errc::InvalidArgument, "at least 1000 samples required");
    if (moment != 1 && moment != 2) throw Error(Errc::InvalidArgument, "moment must be 1 or 2");
    constexpr std::size_t kChunk = 1 << 16;
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<double> sum(chunks), sum_sq(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        StreamRng rng(seed, 0x4AA40000ULL, c);
        std::normal_distribution<double> normal;
        const std::size_t end = std::min(samples, (c + 1) * kChunk);
        double acc = 0.0, acc2 = 0.0;
        for (std::size_t i = c * kChunk; i < end; ++i) {
            double norm = 0.0, first = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double re = normal(rng), im = normal(rng);
                const double a = re * re + im * im;
                norm += a;
                if (k == 0) first = a;
            }
            const double f = first / norm;
            const double v = moment == 2 ? f * f : f;
            acc += v;
            acc2 += v * v;
        }
        sum[c] = acc;
        sum_sq[c] = acc2;
    });
    double s = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        s += sum[c];
        s2 += sum_sq[c];
    }
    const double nn = static_cast<double>(samples);
    HaarMoment out;
    out.estimate = s / nn;
    out.standard_error = std::sqrt(std::max(0.0, (s2 / nn - out.estimate * out.estimate) / (nn - 1.0)));
    out.expected = moment == 2 ? 2.0 / (dim * (dim + 1.0)) : 1.0 / dim;
    return out;
}

inline HaarMoment haar_fidelity_second_moment(int dim, std::size_t samples, std::uint64_t seed) {
    return haar_fidelity_moment(dim, samples, seed, 2);
}

}  // namespace rbopt

#endif  // RBOPT_VARIANCE_HPP
