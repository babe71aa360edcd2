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

#ifndef RBOPT_ELR_HPP
#define RBOPT_ELR_HPP

#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "rbopt/bootstrap.hpp"
#include "rbopt/error.hpp"
#include "rbopt/fit.hpp"
#include "rbopt/parallel.hpp"
#include "rbopt/random.hpp"

namespace rbopt {

/// Structural nesting: basic inside moments and drift, moments of lower
/// order inside higher order, everything inside general.
inline bool is_nested(const Model& inner, const Model& outer) {
    if (inner.dim().value() != outer.dim().value()) return false;
    switch (outer.kind()) {
        case ModelKind::General: return true;
        case ModelKind::Basic: return inner.kind() == ModelKind::Basic;
        case ModelKind::Moments:
            return inner.kind() == ModelKind::Basic || (inner.kind() == ModelKind::Moments && inner.k_max() <= outer.k_max());
        case ModelKind::Drift: return inner.kind() == ModelKind::Basic || inner.kind() == ModelKind::Drift;
    }
    return false;
}

/// Inner parameters expressed in the outer model.
inline Params embed_params(const Model& inner, const Params& theta, const Model& outer) {
    if (!is_nested(inner, outer)) throw Error(Errc::NotNested, inner.describe() + " is not nested in " + outer.describe());
    if (outer.kind() == ModelKind::General) {
        Params out;
        for (auto n : outer.n_set()) out.push_back(success_probability(inner, theta, n));
        return out;
    }
    Params out(outer.num_params(), 0.0);
    std::copy(theta.begin(), theta.end(), out.begin());
    return out;
}

struct ElrResult {
    double observed_ratio = 0.0;
    std::vector<double> bootstrap_ratios;
    double p_value = 1.0;
    FitResult inner_fit;
    FitResult outer_fit;
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

struct ElrOptions {
    std::size_t replicas = 2000;
    std::uint64_t seed = 0;
    double max_failure_fraction = 0.01;
    int refit_starts = 1;
};

/// A general outer model is rebuilt on the dataset's own lengths.
inline ElrResult elr_test(const Model& inner, const Model& outer_in, const std::vector<LengthRecord>& all_records,
                          const ElrOptions& opt = {}) {
    if (!is_nested(inner, outer_in)) {
        throw Error(Errc::NotNested, inner.describe() + " is not nested in " + outer_in.describe());
    }
    if (inner.kind() == ModelKind::General) throw Error(Errc::NotNested, "inner model must be parametric");
    if (opt.replicas < 1) throw Error(Errc::InvalidArgument, "at least one replica required");
    const auto records = detail::usable_records(all_records);
    Model outer = outer_in;
    if (outer.kind() == ModelKind::General) {
        std::vector<std::int64_t> ns;
        for (const auto& r : records) ns.push_back(r.n);
        outer = Model::general(ns, outer_in.dim());
    }
    auto fit_pair = [&](const std::vector<LengthRecord>& rec, const FitOptions& inner_opt, const Params* outer_warm) {
        auto fi = mle_fit(inner, rec, inner_opt);
        FitOptions oo = inner_opt;
        oo.extra_starts.clear();
        if (outer.kind() != ModelKind::General) {
            oo.extra_starts.push_back(embed_params(inner, fi.theta_hat, outer));
            if (outer_warm) oo.extra_starts.push_back(*outer_warm);
        }
        auto fo = mle_fit(outer, rec, oo);
        return std::pair{std::move(fi), std::move(fo)};
    };
    ElrResult res;
    std::tie(res.inner_fit, res.outer_fit) = fit_pair(records, FitOptions{}, nullptr);
    res.observed_ratio = 2.0 * (res.outer_fit.log_likelihood - res.inner_fit.log_likelihood);
    if (res.observed_ratio < -1e-6) res.warnings.push_back("outer fit is worse than inner fit");

    FitOptions warm;
    warm.starts = opt.refit_starts;
    warm.extra_starts = {res.inner_fit.theta_hat};
    std::vector<std::optional<double>> ratios(opt.replicas);
    parallel_for(opt.replicas, [&](std::size_t b) {
        StreamRng rng(opt.seed, 0xE1A00000ULL, b);
        try {
            auto rec = detail::parametric_counts(inner, res.inner_fit.theta_hat, records, rng);
            auto [fi, fo] = fit_pair(rec, warm, &res.outer_fit.theta_hat);
            if (fi.converged && fo.converged) ratios[b] = 2.0 * (fo.log_likelihood - fi.log_likelihood);
        } catch (const Error&) {
        }
    });
    std::size_t at_least = 0;
    for (auto& r : ratios) {
        if (!r) {
            ++res.failures;
            continue;
        }
        res.bootstrap_ratios.push_back(*r);
        if (*r >= res.observed_ratio) ++at_least;
    }
    if (static_cast<double>(res.failures) > opt.max_failure_fraction * static_cast<double>(opt.replicas)) {
        throw Error(Errc::BootstrapUnstable, std::to_string(res.failures) + " of " + std::to_string(opt.replicas) +
                                                 " likelihood-ratio replicas failed");
    }
    if (res.bootstrap_ratios.empty()) throw Error(Errc::BootstrapUnstable, "no likelihood-ratio replica succeeded");
    res.p_value = static_cast<double>(at_least) / static_cast<double>(res.bootstrap_ratios.size());
    return res;
}

inline ElrResult elr_test(const Model& inner, const Model& outer, const Dataset& ds, const ElrOptions& opt = {}) {
    return elr_test(inner, outer, ds.aggregate(), opt);
}

}  // namespace rbopt

#endif  // RBOPT_ELR_HPP
