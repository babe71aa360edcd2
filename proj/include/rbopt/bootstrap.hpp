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

#ifndef RBOPT_BOOTSTRAP_HPP
#define RBOPT_BOOTSTRAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rbopt/error.hpp"
#include "rbopt/fit.hpp"
#include "rbopt/parallel.hpp"
#include "rbopt/random.hpp"
#include "rbopt/simulate.hpp"

namespace rbopt {

enum class BootstrapMode { Parametric, Nonparametric };

inline std::string to_string(BootstrapMode m) { return m == BootstrapMode::Parametric ? "parametric" : "nonparametric"; }

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Interval&) const = default;
};

struct BootstrapResult {
    /// Successful refits in replica order.
    std::vector<Params> samples;
    Params point;
    std::vector<Interval> ci;
    std::vector<double> z0;
    BootstrapMode mode = BootstrapMode::Parametric;
    double level = 0.68;
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }
inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

/// Linear-interpolation percentile of sorted data, q in [0, 1].
inline double percentile(const std::vector<double>& sorted, double q) {
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::vector<LengthRecord> parametric_counts(const Model& model, const Params& theta,
                                                   const std::vector<LengthRecord>& records, StreamRng& rng) {
    std::vector<LengthRecord> out = records;
    for (auto& r : out) r.successes = draw_binomial(rng, r.trials, success_probability(model, theta, r.n));
    return out;
}

}  // namespace detail

/// Bias-corrected percentile interval. Ties with the point estimate count
/// half, so a distribution symmetric about the point gives z0 = 0.
inline std::pair<Interval, double> bc_interval(std::vector<double> values, double point, double level) {
    if (values.empty()) throw Error(Errc::InvalidArgument, "no bootstrap values");
    if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "level must lie in (0, 1)");
    std::sort(values.begin(), values.end());
    const double b = static_cast<double>(values.size());
    const auto below = std::lower_bound(values.begin(), values.end(), point) - values.begin();
    const auto not_above = std::upper_bound(values.begin(), values.end(), point) - values.begin();
    double frac = (static_cast<double>(below) + 0.5 * static_cast<double>(not_above - below)) / b;
    frac = std::clamp(frac, 0.5 / b, 1.0 - 0.5 / b);
    const double z0 = detail::normal_quantile(frac);
    const double z = detail::normal_quantile(0.5 + 0.5 * level);
    const Interval ci{detail::percentile(values, detail::normal_cdf(2.0 * z0 - z)),
                      detail::percentile(values, detail::normal_cdf(2.0 * z0 + z))};
    return {ci, z0};
}

struct BootstrapOptions {
    std::size_t replicas = 2000;
    BootstrapMode mode = BootstrapMode::Parametric;
    double level = 0.68;
    std::uint64_t seed = 0;
    /// Allowed fraction of failed refits.
    double max_failure_fraction = 0.01;
    /// Refits start from the point estimate plus this many built-in starts.
    int refit_starts = 1;
};

/// Parametric mode resamples Binomial(w, P_fit(n)) at every length and refits
/// by maximum likelihood. Nonparametric mode (per-sequence data) resamples
/// sequences with replacement, then each sequence's count binomially, and
/// refits by weighted least squares.
inline BootstrapResult bootstrap_ci(const FitResult& fit, const Dataset& ds, const BootstrapOptions& opt = {}) {
    if (opt.replicas < 100) throw Error(Errc::InvalidArgument, "at least 100 bootstrap replicas required");
    if (fit.theta_hat.size() != fit.model.num_params()) throw Error(Errc::InvalidArgument, "fit does not match its model");
    const bool parametric = opt.mode == BootstrapMode::Parametric;
    if (!parametric && !ds.per_sequence) {
        throw Error(Errc::InvalidArgument, "nonparametric bootstrap needs per-sequence records");
    }
    FitOptions fopt;
    fopt.starts = opt.refit_starts;
    fopt.extra_starts = {fit.theta_hat};
    const auto records = ds.aggregate();

    std::map<std::int64_t, std::vector<const SequenceRecord*>> by_length;
    if (!parametric)
        for (const auto& r : ds.sequences) by_length[r.n].push_back(&r);

    std::vector<std::optional<Params>> out(opt.replicas);
    parallel_for(opt.replicas, [&](std::size_t b) {
        StreamRng rng(opt.seed, 0xB0075000ULL, b);
        try {
            FitResult r;
            if (parametric) {
                r = mle_fit(fit.model, detail::parametric_counts(fit.model, fit.theta_hat, records, rng), fopt);
            } else {
                Dataset re;
                re.per_sequence = true;
                for (const auto& [n, seqs] : by_length) {
                    for (std::size_t q = 0; q < seqs.size(); ++q) {
                        const auto* pick = seqs[rng.below(seqs.size())];
                        SequenceRecord rec = *pick;
                        rec.sequence_id = static_cast<std::int64_t>(q);
                        rec.successes = detail::draw_binomial(
                            rng, pick->repeats, static_cast<double>(pick->successes) / static_cast<double>(pick->repeats));
                        re.sequences.push_back(rec);
                    }
                }
                r = wls_fit_repeated(re, fit.model, fopt);
            }
            if (r.converged) out[b] = std::move(r.theta_hat);
        } catch (const Error&) {
        }
    });

    BootstrapResult res;
    res.point = fit.theta_hat;
    res.mode = opt.mode;
    res.level = opt.level;
    for (auto& o : out) {
        if (o) res.samples.push_back(std::move(*o));
        else ++res.failures;
    }
    if (static_cast<double>(res.failures) > opt.max_failure_fraction * static_cast<double>(opt.replicas)) {
        throw Error(Errc::BootstrapUnstable, std::to_string(res.failures) + " of " + std::to_string(opt.replicas) +
                                                 " bootstrap refits failed");
    }
    if (res.failures > 0) res.warnings.push_back(std::to_string(res.failures) + " bootstrap refits failed and were dropped");
    const std::size_t p = res.point.size();
    const auto names = fit.model.param_names();
    for (std::size_t i = 0; i < p; ++i) {
        std::vector<double> v;
        v.reserve(res.samples.size());
        for (const auto& s : res.samples) v.push_back(s[i]);
        auto [ci, z0] = bc_interval(std::move(v), res.point[i], opt.level);
        res.ci.push_back(ci);
        res.z0.push_back(z0);
        if (!(ci.lo <= res.point[i] && res.point[i] <= ci.hi)) {
            res.warnings.push_back("interval for " + names[i] + " excludes the point estimate (boundary or skewed fit)");
        }
    }
    return res;
}

}  // namespace rbopt

#endif  // RBOPT_BOOTSTRAP_HPP
