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

#ifndef RBOPT_FIT_HPP
#define RBOPT_FIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rbopt/error.hpp"
#include "rbopt/linalg.hpp"
#include "rbopt/model.hpp"
#include "rbopt/optimize.hpp"
#include "rbopt/simulate.hpp"

namespace rbopt {

namespace detail {

inline double probability_or_nan(const Model& model, std::span<const double> params, std::int64_t n) {
    const double p = evaluate_unchecked(model, params, n, false).probability;
    if (p < -kProbabilityTolerance || p > 1.0 + kProbabilityTolerance || !std::isfinite(p)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::clamp(p, 0.0, 1.0);
}

inline std::vector<LengthRecord> usable_records(const std::vector<LengthRecord>& records) {
    std::vector<LengthRecord> out;
    for (const auto& r : records) {
        if (r.trials < 0 || r.successes < 0 || r.successes > r.trials) {
            throw Error(Errc::InvalidArgument, "invalid record at length " + std::to_string(r.n));
        }
        if (r.trials > 0) out.push_back(r);
    }
    return out;
}

}  // namespace detail

/// Full binomial log-probability of the counts, constants included.
inline double log_likelihood(const Model& model, std::span<const double> params, const std::vector<LengthRecord>& records) {
    validate_params(model, params);
    long double total = 0.0L;
    for (const auto& r : detail::usable_records(records)) {
        if (model.kind() == ModelKind::General) model.general_index(r.n);
        const double p = detail::probability_or_nan(model, params, r.n);
        if (std::isnan(p)) throw Error(Errc::ProbabilityOutOfRange, "P(" + std::to_string(r.n) + ") outside [0, 1]");
        const double w = static_cast<double>(r.trials), c = static_cast<double>(r.successes);
        total += std::lgamma(w + 1.0) - std::lgamma(c + 1.0) - std::lgamma(w - c + 1.0);
        if (c > 0.0) {
            if (p == 0.0) return -std::numeric_limits<double>::infinity();
            total += c * std::log(p);
        }
        if (w - c > 0.0) {
            if (p == 1.0) return -std::numeric_limits<double>::infinity();
            total += (w - c) * std::log1p(-p);
        }
    }
    return static_cast<double>(total);
}

inline double log_likelihood(const Model& model, std::span<const double> params, const Dataset& ds) {
    return log_likelihood(model, params, ds.aggregate());
}

struct FitResult {
    Model model = Model::basic();
    Params theta_hat;
    double log_likelihood = 0.0;
    bool converged = false;
    int n_starts_used = 0;
    /// "closed-form", "mle" or "wls".
    std::string method;
    /// Names of parameters that ended on a bound.
    std::vector<std::string> at_bound;
    std::vector<std::string> warnings;
};

struct FitOptions {
    /// Deterministic starts taken from the built-in list (at most 5).
    int starts = 5;
    /// Additional starts tried before the built-in ones (warm starts).
    std::vector<Params> extra_starts;
    BoxOptions box;
    /// Throw NonConvergence when no start converges.
    bool require_convergence = true;
};

namespace detail {

/// Log-linear seed for (theta0, theta1): regress log(P - 1/D) on n.
inline std::pair<double, double> regression_seed(const std::vector<std::int64_t>& n, const std::vector<double>& p,
                                                 const std::vector<double>& weight, HilbertDim dim) {
    const double a = dim.alpha(), inv = dim.inverse();
    constexpr double kFloor = 1e-6;
    long double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < n.size(); ++j) {
        const double excess = std::max(p[j] - inv, kFloor);
        const double w = weight[j] * excess * excess;
        const double x = static_cast<double>(n[j]), y = std::log(excess);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    double intercept, slope;
    const long double det = sw * sxx - sx * sx;
    if (sw > 0 && det > 1e-12L * sw * sxx) {
        slope = static_cast<double>((sw * sxy - sx * sy) / det);
        intercept = static_cast<double>((sy - slope * sx) / sw);
    } else {
        // One distinct length: assume no SPAM error.
        intercept = -std::log(a);
        const double xbar = sw > 0 ? static_cast<double>(sx / sw) : 1.0;
        slope = xbar > 0 ? (static_cast<double>(sw > 0 ? sy / sw : 0) - intercept) / xbar : 0.0;
    }
    const double cap = 0.9 / a;
    const double theta0 = std::clamp((1.0 - a * std::exp(intercept)) / a, 0.0, cap);
    const double theta1 = std::clamp((1.0 - std::exp(slope)) / a, 1e-9, cap);
    return {theta0, theta1};
}

inline Params embed_leading(const Model& model, double theta0, double theta1) {
    Params p(model.num_params(), 0.0);
    p[0] = theta0;
    p[1] = theta1;
    return p;
}

inline std::vector<Params> builtin_starts(const Model& model, double theta0, double theta1, int count) {
    const double cap = 0.9 / model.dim().alpha();
    const std::pair<double, double> list[] = {{theta0, theta1},
                                              {theta0, std::min(2.0 * theta1, cap)},
                                              {theta0, 0.5 * theta1},
                                              {0.0, theta1},
                                              {std::min(2.0 * theta0 + 0.01, cap), theta1}};
    std::vector<Params> out;
    for (int k = 0; k < std::min(count, 5); ++k) out.push_back(embed_leading(model, list[k].first, list[k].second));
    return out;
}

inline std::vector<std::string> bound_names(const Model& model, const Params& x) {
    auto [lo, hi] = param_bounds(model);
    auto names = model.param_names();
    std::vector<std::string> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] <= lo[i] || x[i] >= hi[i]) out.push_back(names[i]);
    return out;
}

/// Runs the box minimizer from every start and keeps the lowest objective.
inline FitResult multi_start(const Model& model, const BoxProblem& prob, std::vector<Params> starts,
                             const FitOptions& opt, const std::string& method) {
    FitResult best;
    best.model = model;
    best.method = method;
    double best_value = std::numeric_limits<double>::infinity();
    bool have = false;
    std::string diag;
    for (auto& s : starts) {
        ++best.n_starts_used;
        auto r = minimize_box(prob, s, opt.box);
        if (!std::isfinite(r.value)) {
            diag += " [start " + std::to_string(best.n_starts_used) + ": " + r.message + "]";
            continue;
        }
        if (!r.converged) diag += " [start " + std::to_string(best.n_starts_used) + ": " + r.message + "]";
        // Prefer converged solutions; among equals keep the lower objective.
        const bool better = !have || (r.converged && !best.converged) ||
                            (r.converged == best.converged && r.value < best_value);
        if (better) {
            have = true;
            best_value = r.value;
            best.theta_hat = r.x;
            best.converged = r.converged;
        }
    }
    if (!have || (!best.converged && opt.require_convergence)) {
        throw Error(Errc::NonConvergence, "no start converged:" + diag);
    }
    if (!best.converged) best.warnings.push_back("fit did not converge:" + diag);
    best.at_bound = bound_names(model, best.theta_hat);
    return best;
}

}  // namespace detail

/// Maximum-likelihood fit. The General model uses the closed form c/w.
inline FitResult mle_fit(const Model& model, const std::vector<LengthRecord>& all_records, const FitOptions& opt = {}) {
    const auto records = detail::usable_records(all_records);
    if (records.empty()) throw Error(Errc::NoUsableLengths, "dataset has no trials");
    if (model.kind() == ModelKind::General) {
        FitResult res;
        res.model = model;
        res.method = "closed-form";
        res.theta_hat.assign(model.num_params(), std::numeric_limits<double>::quiet_NaN());
        for (const auto& r : records) {
            res.theta_hat[model.general_index(r.n)] = static_cast<double>(r.successes) / static_cast<double>(r.trials);
        }
        for (std::size_t i = 0; i < res.theta_hat.size(); ++i) {
            if (std::isnan(res.theta_hat[i])) {
                throw Error(Errc::NonIdentifiable, "no trials at length " + std::to_string(model.n_set()[i]));
            }
        }
        res.converged = true;
        res.n_starts_used = 1;
        res.log_likelihood = log_likelihood(model, res.theta_hat, records);
        res.at_bound = detail::bound_names(model, res.theta_hat);
        return res;
    }
    if (records.size() < model.num_params()) {
        throw Error(Errc::NonIdentifiable, std::to_string(model.num_params()) + " parameters but only " +
                                               std::to_string(records.size()) + " lengths with trials");
    }
    const std::size_t m = records.size(), p = model.num_params();
    std::vector<double> w(m), phat(m);
    std::vector<std::int64_t> ns(m);
    for (std::size_t j = 0; j < m; ++j) {
        ns[j] = records[j].n;
        w[j] = static_cast<double>(records[j].trials);
        phat[j] = static_cast<double>(records[j].successes) / w[j];
    }
    BoxProblem prob;
    std::tie(prob.lower, prob.upper) = param_bounds(model);
    // Objective relative to the saturated fit: sum of per-length binomial
    // divergences, which keeps full precision near the optimum.
    prob.value = [&](const std::vector<double>& x) {
        long double total = 0.0L;
        for (std::size_t j = 0; j < m; ++j) {
            const double pr = detail::probability_or_nan(model, x, ns[j]);
            if (std::isnan(pr)) return std::numeric_limits<double>::infinity();
            const double c = phat[j] * w[j], f = w[j] - c;
            if (c > 0.0) {
                if (pr == 0.0) return std::numeric_limits<double>::infinity();
                total -= c * std::log1p((pr - phat[j]) / phat[j]);
            }
            if (f > 0.0) {
                if (pr == 1.0) return std::numeric_limits<double>::infinity();
                total -= f * std::log1p((phat[j] - pr) / (1.0 - phat[j]));
            }
        }
        return static_cast<double>(total);
    };
    prob.gradient = [&](const std::vector<double>& x) {
        std::vector<double> g(p, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            auto ev = evaluate_unchecked(model, x, ns[j], true);
            const double pr = std::clamp(ev.probability, 1e-300, 1.0 - 1e-16);
            const double s = -w[j] * (phat[j] - pr) / (pr * (1.0 - pr));
            for (std::size_t i = 0; i < p; ++i) g[i] += s * ev.gradient[i];
        }
        return g;
    };
    prob.curvature = [&](const std::vector<double>& x) {
        DenseMatrix f(p, p);
        for (std::size_t j = 0; j < m; ++j) {
            auto ev = evaluate_unchecked(model, x, ns[j], true);
            const double pr = std::clamp(ev.probability, 1e-12, 1.0 - 1e-12);
            const double s = w[j] / (pr * (1.0 - pr));
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b) f(a, b) += s * ev.gradient[a] * ev.gradient[b];
        }
        return f;
    };
    auto [t0, t1] = detail::regression_seed(ns, phat, w, model.dim());
    auto starts = opt.extra_starts;
    for (auto& s : detail::builtin_starts(model, t0, t1, opt.starts)) starts.push_back(std::move(s));
    auto res = detail::multi_start(model, prob, std::move(starts), opt, "mle");
    res.log_likelihood = log_likelihood(model, res.theta_hat, records);
    return res;
}

inline FitResult mle_fit(const Model& model, const Dataset& ds, const FitOptions& opt = {}) {
    return mle_fit(model, ds.aggregate(), opt);
}

struct WlsPoint {
    std::int64_t n = 0;
    double mean = 0.0;
    double standard_error = 1.0;
};

/// Weighted nonlinear least squares of P(n) against per-length means.
/// log_likelihood reports -chi^2 / 2.
inline FitResult wls_fit(const Model& model, const std::vector<WlsPoint>& points, const FitOptions& opt = {}) {
    if (model.kind() == ModelKind::General) throw Error(Errc::InvalidArgument, "least squares needs a parametric model");
    std::vector<WlsPoint> pts = points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
    const std::size_t m = pts.size(), p = model.num_params();
    for (std::size_t j = 0; j + 1 < m; ++j)
        if (pts[j].n == pts[j + 1].n) throw Error(Errc::InvalidArgument, "duplicate length in least-squares data");
    if (m < p) throw Error(Errc::NonIdentifiable, std::to_string(p) + " parameters but only " + std::to_string(m) + " lengths");
    for (const auto& q : pts)
        if (!(q.standard_error > 0.0) || !std::isfinite(q.mean)) throw Error(Errc::InvalidArgument, "invalid least-squares point");
    BoxProblem prob;
    std::tie(prob.lower, prob.upper) = param_bounds(model);
    prob.value = [&](const std::vector<double>& x) {
        long double total = 0.0L;
        for (const auto& q : pts) {
            const double pr = detail::probability_or_nan(model, x, q.n);
            if (std::isnan(pr)) return std::numeric_limits<double>::infinity();
            const double r = (q.mean - pr) / q.standard_error;
            total += 0.5L * r * r;
        }
        return static_cast<double>(total);
    };
    prob.gradient = [&](const std::vector<double>& x) {
        std::vector<double> g(p, 0.0);
        for (const auto& q : pts) {
            auto ev = evaluate_unchecked(model, x, q.n, true);
            const double s = -(q.mean - ev.probability) / (q.standard_error * q.standard_error);
            for (std::size_t i = 0; i < p; ++i) g[i] += s * ev.gradient[i];
        }
        return g;
    };
    prob.curvature = [&](const std::vector<double>& x) {
        DenseMatrix f(p, p);
        for (const auto& q : pts) {
            auto ev = evaluate_unchecked(model, x, q.n, true);
            const double s = 1.0 / (q.standard_error * q.standard_error);
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b) f(a, b) += s * ev.gradient[a] * ev.gradient[b];
        }
        return f;
    };
    std::vector<std::int64_t> ns(m);
    std::vector<double> means(m), weights(m);
    for (std::size_t j = 0; j < m; ++j) {
        ns[j] = pts[j].n;
        means[j] = pts[j].mean;
        weights[j] = 1.0 / (pts[j].standard_error * pts[j].standard_error);
    }
    auto [t0, t1] = detail::regression_seed(ns, means, weights, model.dim());
    auto starts = opt.extra_starts;
    for (auto& s : detail::builtin_starts(model, t0, t1, opt.starts)) starts.push_back(std::move(s));
    auto res = detail::multi_start(model, prob, std::move(starts), opt, "wls");
    res.log_likelihood = -prob.value(res.theta_hat);
    return res;
}

/// Per-length mean and standard error of sequence success frequencies.
/// A zero standard error is replaced by the smallest positive one observed.
inline std::vector<WlsPoint> repeated_points(const Dataset& ds, std::vector<std::string>* warnings = nullptr) {
    if (!ds.per_sequence) throw Error(Errc::InvalidArgument, "per-sequence records required");
    std::map<std::int64_t, std::vector<double>> freq;
    for (const auto& r : ds.sequences) freq[r.n].push_back(static_cast<double>(r.successes) / static_cast<double>(r.repeats));
    std::vector<WlsPoint> pts;
    double min_positive = std::numeric_limits<double>::infinity();
    for (const auto& [n, f] : freq) {
        if (f.size() < 2) throw Error(Errc::InsufficientSequences, "fewer than 2 sequences at length " + std::to_string(n));
        long double mean = 0.0L;
        for (double v : f) mean += v;
        mean /= f.size();
        long double ss = 0.0L;
        for (double v : f) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(static_cast<double>(ss / (f.size() - 1)) / static_cast<double>(f.size()));
        pts.push_back({n, static_cast<double>(mean), se});
        if (se > 0.0) min_positive = std::min(min_positive, se);
    }
    for (auto& q : pts) {
        if (q.standard_error > 0.0) continue;
        const bool none = !std::isfinite(min_positive);
        q.standard_error = none ? 1.0 : min_positive;
        if (warnings) {
            warnings->push_back("length " + std::to_string(q.n) + " has zero standard error; using " +
                                (none ? std::string("unit weight") : std::to_string(min_positive)));
        }
    }
    return pts;
}

inline FitResult wls_fit_repeated(const Dataset& ds, const Model& model = Model::basic(), const FitOptions& opt = {}) {
    std::vector<std::string> warnings;
    auto pts = repeated_points(ds, &warnings);
    auto res = wls_fit(model, pts, opt);
    res.warnings.insert(res.warnings.end(), warnings.begin(), warnings.end());
    return res;
}

}  // namespace rbopt

#endif  // RBOPT_FIT_HPP
