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

#ifndef RBOPT_DESIGN_HPP
#define RBOPT_DESIGN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rbopt/error.hpp"
#include "rbopt/linalg.hpp"
#include "rbopt/model.hpp"
#include "rbopt/simplex.hpp"

namespace rbopt {

/// Wall-clock cost of one trial: t_n = spam_time + n * step_time unless an
/// explicit per-length time is given.
struct TimeModel {
    double spam_time = 1e-3;
    double step_time = 1e-5;
    std::map<std::int64_t, double> explicit_t;

    double trial_time(std::int64_t n) const {
        if (auto it = explicit_t.find(n); it != explicit_t.end()) return it->second;
        return spam_time + static_cast<double>(n) * step_time;
    }

    void validate() const {
        if (!(spam_time > 0.0) || !(step_time > 0.0)) throw Error(Errc::InvalidArgument, "trial times must be positive");
        for (const auto& [n, t] : explicit_t)
            if (!(t > 0.0)) throw Error(Errc::InvalidArgument, "explicit trial time must be positive");
    }

    bool operator==(const TimeModel&) const = default;
};

/// Sequence lengths with trial counts. `repeats` > 1 means each random
/// sequence is run that many times, so every trial count is a multiple of it.
struct ExperimentDesign {
    std::vector<std::int64_t> lengths;
    std::vector<std::int64_t> trials;
    std::int64_t repeats = 1;
    TimeModel time;

    void validate() const {
        if (lengths.size() != trials.size()) throw Error(Errc::InvalidArgument, "lengths and trials differ in size");
        if (repeats < 1) throw Error(Errc::InvalidArgument, "repeats must be positive");
        std::set<std::int64_t> seen;
        for (std::size_t j = 0; j < lengths.size(); ++j) {
            if (lengths[j] < 0) throw Error(Errc::InvalidArgument, "negative sequence length");
            if (!seen.insert(lengths[j]).second) throw Error(Errc::InvalidArgument, "duplicate sequence length");
            if (trials[j] < 0) throw Error(Errc::InvalidArgument, "negative trial count");
            if (trials[j] % repeats != 0) {
                throw Error(Errc::InvalidArgument, "trial count at length " + std::to_string(lengths[j]) +
                                                       " is not a multiple of the repeat count");
            }
        }
    }

    double total_time() const {
        double t = 0.0;
        for (std::size_t j = 0; j < lengths.size(); ++j) t += static_cast<double>(trials[j]) * time.trial_time(lengths[j]);
        return t;
    }
};

/// First-order expansion of a model around a reference point.
struct LinearizedModel {
    Model model = Model::basic();
    Params reference;
    /// Usable candidate lengths (0 < P(n) < 1 at the reference).
    std::vector<std::int64_t> lengths;
    /// E(n, i) = dP(n)/dtheta_i, one row per usable length.
    DenseMatrix E;
    /// Per-trial binomial variance P(n)(1 - P(n)).
    std::vector<double> u;
    std::vector<double> p0;
    std::vector<std::int64_t> dropped;
    std::vector<std::string> warnings;

    std::size_t num_params() const noexcept { return E.cols(); }

    std::optional<std::size_t> index_of(std::int64_t n) const {
        auto it = std::lower_bound(lengths.begin(), lengths.end(), n);
        if (it == lengths.end() || *it != n) return std::nullopt;
        return static_cast<std::size_t>(it - lengths.begin());
    }
};

inline LinearizedModel linearize(const Model& model, const Params& reference, std::span<const std::int64_t> lengths) {
    validate_params(model, reference);
    if (lengths.empty()) throw Error(Errc::InvalidArgument, "no candidate lengths");
    std::vector<std::int64_t> sorted(lengths.begin(), lengths.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(Errc::InvalidArgument, "candidate lengths must be distinct");
    }
    LinearizedModel lin;
    lin.model = model;
    lin.reference = reference;
    const std::size_t p = model.num_params();
    std::vector<double> rows;
    for (auto n : sorted) {
        detail::check_length(n);
        auto ev = evaluate_unchecked(model, reference, n, true);
        const double prob = detail::clamp_probability(ev.probability, n);
        if (!(prob > 0.0 && prob < 1.0)) {
            lin.dropped.push_back(n);
            continue;
        }
        lin.lengths.push_back(n);
        lin.p0.push_back(prob);
        lin.u.push_back(prob * (1.0 - prob));
        rows.insert(rows.end(), ev.gradient.begin(), ev.gradient.end());
    }
    if (!lin.dropped.empty()) {
        lin.warnings.push_back(std::to_string(lin.dropped.size()) +
                               " candidate length(s) dropped: reference probability is 0 or 1");
    }
    lin.E = DenseMatrix(lin.lengths.size(), p, std::move(rows));
    return lin;
}

struct OptimizedDesign {
    std::size_t target_index = 0;
    std::map<std::int64_t, double> coefficients;
    std::map<std::int64_t, double> weights_real;
    std::map<std::int64_t, std::int64_t> weights_int;
    double v_opt = 0.0;
    double anticipated_sigma = 0.0;
    double total_time = 0.0;
    std::size_t candidates = 0;
    std::vector<std::string> warnings;
};

/// Trial weights minimizing sum C_n^2 u_n / w_n subject to sum w_n t_n = T.
inline std::map<std::int64_t, double> optimal_weights(const std::map<std::int64_t, double>& coefficients,
                                                      const LinearizedModel& lin, const TimeModel& time, double total_time) {
    double f = 0.0;
    for (const auto& [n, c] : coefficients) {
        if (c == 0.0) continue;
        auto idx = lin.index_of(n);
        if (!idx) throw Error(Errc::InvalidArgument, "coefficient at length " + std::to_string(n) + " has no linearization");
        f += std::abs(c) * std::sqrt(lin.u[*idx] * time.trial_time(n));
    }
    if (f == 0.0) throw Error(Errc::ZeroEstimator, "all estimator coefficients are zero");
    std::map<std::int64_t, double> w;
    for (const auto& [n, c] : coefficients) {
        if (c == 0.0) continue;
        const double u = lin.u[*lin.index_of(n)];
        w[n] = std::abs(c) * std::sqrt(u / time.trial_time(n)) * total_time / f;
    }
    return w;
}

struct RoundedTrials {
    std::map<std::int64_t, std::int64_t> counts;
    /// Positive real weights that rounded to zero.
    std::vector<std::int64_t> zeroed;
    std::vector<std::string> warnings;
};

/// Rounds each weight to the nearest multiple of `multiple`.
inline RoundedTrials round_trials(const std::map<std::int64_t, double>& weights, std::int64_t multiple = 1) {
    if (multiple < 1) throw Error(Errc::InvalidArgument, "rounding multiple must be positive");
    RoundedTrials out;
    const double m = static_cast<double>(multiple);
    for (const auto& [n, w] : weights) {
        if (!(w >= 0.0)) throw Error(Errc::InvalidArgument, "negative trial weight");
        const auto k = static_cast<std::int64_t>(std::llround(w / m));
        out.counts[n] = k * multiple;
        if (w > 0.0 && k == 0) {
            out.zeroed.push_back(n);
            out.warnings.push_back("length " + std::to_string(n) + " weight " + std::to_string(w) +
                                   " rounded to zero trials");
        }
    }
    return out;
}

/// Total time of the rounded design minus the real-valued budget.
inline double rounding_time_delta(const RoundedTrials& rounded, const std::map<std::int64_t, double>& weights,
                                  const TimeModel& time) {
    double delta = 0.0;
    for (const auto& [n, w] : weights) {
        auto it = rounded.counts.find(n);
        const double k = it == rounded.counts.end() ? 0.0 : static_cast<double>(it->second);
        delta += (k - w) * time.trial_time(n);
    }
    return delta;
}

/// C-optimal design over the linearization's candidate lengths.
inline OptimizedDesign optimize_design(const LinearizedModel& lin, const TimeModel& time, double total_time,
                                       std::size_t target, std::int64_t round_multiple = 1) {
    time.validate();
    if (!(total_time > 0.0)) throw Error(Errc::InvalidArgument, "total time must be positive");
    const std::size_t p = lin.num_params();
    if (target >= p) throw Error(Errc::InvalidArgument, "target parameter index out of range");
    const std::size_t n = lin.lengths.size();
    if (n == 0) throw Error(Errc::NoUsableLengths, "every candidate length was dropped");
    if (n < p) throw Error(Errc::DesignInfeasible, "fewer usable lengths than parameters");

    // Columns scaled by omega_n = sqrt(u_n t_n) so every cost is 1; rows scaled to unit max.
    std::vector<double> omega(n);
    for (std::size_t k = 0; k < n; ++k) omega[k] = std::sqrt(lin.u[k] * time.trial_time(lin.lengths[k]));
    std::vector<double> row_scale(p, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < p; ++i) row_scale[i] = std::max(row_scale[i], std::abs(lin.E(k, i) / omega[k]));
    if (row_scale[target] == 0.0) throw Error(Errc::DesignInfeasible, "target parameter has zero sensitivity");
    for (auto& s : row_scale) s = s > 0.0 ? 1.0 / s : 1.0;

    LPStandardForm lp;
    lp.c.assign(2 * n, 1.0);
    lp.A = DenseMatrix(p, 2 * n);
    lp.b.assign(p, 0.0);
    lp.b[target] = 1.0;  // the LP is homogeneous in b; rescaled by row_scale[target] below
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < p; ++i) {
            const double v = row_scale[i] * lin.E(k, i) / omega[k];
            lp.A(i, k) = v;
            lp.A(i, n + k) = -v;
        }
    }
    auto sol = simplex_solve(lp);
    if (sol.status != LPStatus::Optimal) throw Error(Errc::DesignInfeasible, "estimator constraints cannot be met");

    OptimizedDesign d;
    d.target_index = target;
    d.total_time = total_time;
    d.candidates = n;
    d.warnings = lin.warnings;
    const double unscale = row_scale[target];
    double f = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = (sol.x[k] - sol.x[n + k]) * unscale;
        if (y == 0.0) continue;
        d.coefficients[lin.lengths[k]] = y / omega[k];
        f += std::abs(y);
    }
    d.v_opt = f * f / total_time;
    d.anticipated_sigma = std::sqrt(d.v_opt);
    d.weights_real = optimal_weights(d.coefficients, lin, time, total_time);
    auto rounded = round_trials(d.weights_real, round_multiple);
    d.weights_int = rounded.counts;
    d.warnings.insert(d.warnings.end(), rounded.warnings.begin(), rounded.warnings.end());
    return d;
}

struct DesignOptions {
    /// Longest candidate length; defaults to ceil(2 / (alpha theta1)).
    std::optional<std::int64_t> n_max;
    std::int64_t n_min = 1;
    std::int64_t round_multiple = 1;
    /// Full integer grid up to this size, log-spaced grid beyond it.
    std::int64_t full_grid_limit = 10000;
    std::size_t log_grid_points = 5000;
    bool refine = true;
    double refine_fraction = 0.02;
};

inline std::int64_t default_n_max(const Model& model, const Params& reference) {
    if (model.kind() == ModelKind::General) return model.n_set().back();
    const double step = reference.at(1);
    if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "default n_max needs a positive reference step error");
    return static_cast<std::int64_t>(std::ceil(2.0 / (model.dim().alpha() * step)));
}

inline std::vector<std::int64_t> candidate_grid(std::int64_t n_min, std::int64_t n_max, const DesignOptions& opt = {}) {
    if (n_min < 0 || n_max < n_min) throw Error(Errc::InvalidArgument, "invalid candidate range");
    std::vector<std::int64_t> grid;
    if (n_max - n_min + 1 <= opt.full_grid_limit) {
        for (std::int64_t n = n_min; n <= n_max; ++n) grid.push_back(n);
        return grid;
    }
    const double lo = std::log(static_cast<double>(std::max<std::int64_t>(n_min, 1)));
    const double hi = std::log(static_cast<double>(n_max));
    const std::size_t points = std::max<std::size_t>(opt.log_grid_points, 2);
    if (n_min == 0) grid.push_back(0);
    for (std::size_t k = 0; k < points; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
        grid.push_back(std::clamp<std::int64_t>(std::llround(std::exp(x)), std::max<std::int64_t>(n_min, 1), n_max));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

/// Builds the candidate grid, optimizes, and (on log grids) re-solves after
/// adding every integer within refine_fraction of each support point.
inline OptimizedDesign optimize_design(const Model& model, const Params& reference, const TimeModel& time,
                                       double total_time, std::size_t target, const DesignOptions& opt = {}) {
    std::vector<std::int64_t> grid;
    std::int64_t n_max = 0;
    if (model.kind() == ModelKind::General) {
        grid = model.n_set();
    } else {
        n_max = opt.n_max.value_or(default_n_max(model, reference));
        grid = candidate_grid(opt.n_min, n_max, opt);
    }
    auto lin = linearize(model, reference, grid);
    auto design = optimize_design(lin, time, total_time, target, opt.round_multiple);
    const bool coarse = model.kind() != ModelKind::General && n_max - opt.n_min + 1 > opt.full_grid_limit;
    if (!coarse || !opt.refine) return design;

    std::set<std::int64_t> refined(grid.begin(), grid.end());
    for (const auto& [n, c] : design.coefficients) {
        const auto lo = std::max<std::int64_t>(opt.n_min, static_cast<std::int64_t>(std::floor(n * (1.0 - opt.refine_fraction))));
        const auto hi = std::min<std::int64_t>(n_max, static_cast<std::int64_t>(std::ceil(n * (1.0 + opt.refine_fraction))));
        for (std::int64_t k = lo; k <= hi; ++k) refined.insert(k);
    }
    std::vector<std::int64_t> grid2(refined.begin(), refined.end());
    auto lin2 = linearize(model, reference, grid2);
    return optimize_design(lin2, time, total_time, target, opt.round_multiple);
}

/// Minimum-variance unbiased linear estimators for every parameter at a fixed
/// design. coefficients(k, i) is the weight of length k's frequency deviation
/// in the estimator of parameter i.
struct LinearEstimator {
    std::vector<std::int64_t> lengths;
    DenseMatrix coefficients;
    /// (E^T Q^-1 E)^-1 with Q = diag(u_n / w_n).
    DenseMatrix covariance;
    /// sum_n M(n, i)^2 Q_nn, computed directly from the coefficients.
    std::vector<double> variances;
};

namespace detail {

inline std::vector<std::size_t> weighted_rows(const LinearizedModel& lin, std::span<const double> weights) {
    if (weights.size() != lin.lengths.size()) throw Error(Errc::InvalidArgument, "one weight per linearized length");
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] < 0.0) throw Error(Errc::InvalidArgument, "negative trial weight");
        if (weights[k] > 0.0) rows.push_back(k);
    }
    return rows;
}

inline std::vector<double> align_weights(const LinearizedModel& lin, const std::map<std::int64_t, double>& weights) {
    std::vector<double> aligned(lin.lengths.size(), 0.0);
    for (const auto& [n, w] : weights) {
        if (w == 0.0) continue;
        auto idx = lin.index_of(n);
        if (!idx) {
            throw Error(Errc::InvalidArgument, "design length " + std::to_string(n) +
                                                   " has no usable linearization (P is 0 or 1, or not a candidate)");
        }
        aligned[*idx] = w;
    }
    return aligned;
}

}  // namespace detail

/// F = sum_n w_n E_n E_n^T / u_n.
inline DenseMatrix fisher_information(const LinearizedModel& lin, std::span<const double> weights) {
    const std::size_t p = lin.num_params();
    DenseMatrix f(p, p);
    for (auto k : detail::weighted_rows(lin, weights)) {
        const double s = weights[k] / lin.u[k];
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) f(i, j) += s * lin.E(k, i) * lin.E(k, j);
    }
    return f;
}

inline DenseMatrix fisher_information(const LinearizedModel& lin, const std::map<std::int64_t, double>& weights) {
    auto aligned = detail::align_weights(lin, weights);
    return fisher_information(lin, std::span<const double>(aligned));
}

inline LinearEstimator optimal_linear_estimator(const LinearizedModel& lin, std::span<const double> weights) {
    auto rows = detail::weighted_rows(lin, weights);
    const std::size_t p = lin.num_params();
    if (rows.size() < p) throw Error(Errc::DesignInfeasible, "fewer weighted lengths than parameters");
    auto f = fisher_information(lin, weights);
    DenseMatrix v;
    try {
        v = invert_scaled_symmetric(f);
    } catch (const Error& e) {
        if (e.code() == Errc::SingularMatrix) throw Error(Errc::DesignInfeasible, "design does not identify all parameters");
        throw;
    }
    LinearEstimator est;
    est.coefficients = DenseMatrix(rows.size(), p);
    est.variances.assign(p, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = rows[r];
        est.lengths.push_back(lin.lengths[k]);
        const double qinv = weights[k] / lin.u[k];
        for (std::size_t i = 0; i < p; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += lin.E(k, j) * v(j, i);
            est.coefficients(r, i) = qinv * acc;
            est.variances[i] += est.coefficients(r, i) * est.coefficients(r, i) / qinv;
        }
    }
    est.covariance = std::move(v);
    return est;
}

inline LinearEstimator optimal_linear_estimator(const LinearizedModel& lin, const std::map<std::int64_t, double>& weights) {
    auto aligned = detail::align_weights(lin, weights);
    return optimal_linear_estimator(lin, std::span<const double>(aligned));
}

inline LinearEstimator optimal_linear_estimator(const ExperimentDesign& design, const LinearizedModel& lin) {
    std::map<std::int64_t, double> w;
    for (std::size_t j = 0; j < design.lengths.size(); ++j) w[design.lengths[j]] = static_cast<double>(design.trials.at(j));
    return optimal_linear_estimator(lin, w);
}

/// Evenly spaced integer lengths over [lo, hi], duplicates removed.
inline std::vector<std::int64_t> uniform_lengths(std::size_t count, double lo, double hi) {
    if (count == 0 || hi < lo) throw Error(Errc::InvalidArgument, "invalid uniform length specification");
    std::vector<std::int64_t> out;
    for (std::size_t j = 0; j < count; ++j) {
        const double x = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
        out.push_back(std::llround(x));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct UniformSpec {
    std::size_t count = 20;
    /// Defaults to [1, 1/theta1].
    std::optional<double> lo;
    std::optional<double> hi;
};

struct DesignComparison {
    double uniform_sigma = 0.0;
    double optimized_sigma = 0.0;
    /// uniform_sigma / optimized_sigma.
    double ratio = 0.0;
    std::vector<std::int64_t> uniform_lengths;
    double uniform_trials_per_length = 0.0;
    OptimizedDesign optimized;
};

/// Equal trials at evenly spaced lengths spending the same total time as the
/// optimized design, compared by anticipated standard deviation of the target.
inline DesignComparison compare_designs(const Model& model, const Params& reference, const TimeModel& time,
                                        double total_time, std::size_t target, const UniformSpec& uniform = {},
                                        const DesignOptions& opt = {}) {
    const double lo = uniform.lo.value_or(1.0);
    const double hi = uniform.hi.value_or(1.0 / reference.at(1));
    DesignComparison cmp;
    cmp.uniform_lengths = uniform_lengths(uniform.count, lo, hi);
    double per_trial = 0.0;
    for (auto n : cmp.uniform_lengths) per_trial += time.trial_time(n);
    cmp.uniform_trials_per_length = total_time / per_trial;
    auto lin = linearize(model, reference, cmp.uniform_lengths);
    std::vector<double> w(lin.lengths.size(), cmp.uniform_trials_per_length);
    auto est = optimal_linear_estimator(lin, std::span<const double>(w));
    cmp.uniform_sigma = std::sqrt(est.covariance(target, target));
    cmp.optimized = optimize_design(model, reference, time, total_time, target, opt);
    cmp.optimized_sigma = cmp.optimized.anticipated_sigma;
    cmp.ratio = cmp.uniform_sigma / cmp.optimized_sigma;
    return cmp;
}

}  // namespace rbopt

#endif  // RBOPT_DESIGN_HPP
