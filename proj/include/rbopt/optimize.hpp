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

#ifndef RBOPT_OPTIMIZE_HPP
#define RBOPT_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rbopt/error.hpp"
#include "rbopt/linalg.hpp"

namespace rbopt {

/// Smooth objective on a box. The curvature callback returns a positive semidefinite
/// approximation of the Hessian (Fisher information or Gauss-Newton matrix).
struct BoxProblem {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    std::function<DenseMatrix(const std::vector<double>&)> curvature;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct BoxOptions {
    int max_iterations = 200;
    /// Stop when the predicted decrease g^T M^-1 g falls below this.
    double tolerance = 1e-9;
    /// Switch to a finite-difference Newton step once the decrement is this small.
    double newton_threshold = 1e-2;
};

struct BoxResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    double decrement = std::numeric_limits<double>::infinity();
    std::string message;
};

namespace detail {

inline std::vector<double> project(std::vector<double> x, const BoxProblem& p) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], p.lower[i], p.upper[i]);
    return x;
}

// Solves (M + ridge*diag) d = -g on the free set; returns false if singular.
inline bool free_step(const DenseMatrix& m, const std::vector<double>& g, const std::vector<std::size_t>& free,
                      double ridge, std::vector<double>& d) {
    const std::size_t k = free.size();
    DenseMatrix a(k, k);
    std::vector<double> rhs(k);
    for (std::size_t r = 0; r < k; ++r) {
        rhs[r] = -g[free[r]];
        for (std::size_t c = 0; c < k; ++c) a(r, c) = m(free[r], free[c]);
        a(r, r) = a(r, r) > 0.0 ? a(r, r) * (1.0 + ridge) : std::max(ridge, 1e-300);
    }
    std::vector<double> s(k);
    for (std::size_t r = 0; r < k; ++r) s[r] = 1.0 / std::sqrt(a(r, r));
    for (std::size_t r = 0; r < k; ++r) {
        rhs[r] *= s[r];
        for (std::size_t c = 0; c < k; ++c) a(r, c) *= s[r] * s[c];
    }
    try {
        auto y = solve_linear_system(a, rhs);
        d.assign(g.size(), 0.0);
        for (std::size_t r = 0; r < k; ++r) d[free[r]] = y[r] * s[r];
    } catch (const Error&) {
        return false;
    }
    for (double v : d)
        if (!std::isfinite(v)) return false;
    return true;
}

// Central differences of the analytic gradient, one-sided at the box edge.
inline DenseMatrix fd_hessian(const BoxProblem& p, const std::vector<double>& x, const DenseMatrix& m,
                              const std::vector<double>& g) {
    const std::size_t n = x.size();
    DenseMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h_i = m(i, i) > 0.0 ? 1e-4 / std::sqrt(m(i, i)) : 1e-6 * std::max(1.0, std::abs(x[i]));
        auto xp = x, xm = x;
        xp[i] = std::min(x[i] + h_i, p.upper[i]);
        xm[i] = std::max(x[i] - h_i, p.lower[i]);
        const bool up = xp[i] > x[i], down = xm[i] < x[i];
        std::vector<double> gp = up ? p.gradient(xp) : g, gm = down ? p.gradient(xm) : g;
        const double span = (up ? xp[i] : x[i]) - (down ? xm[i] : x[i]);
        for (std::size_t j = 0; j < n; ++j) h(j, i) = span > 0.0 ? (gp[j] - gm[j]) / span : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) h(i, j) = h(j, i) = 0.5 * (h(i, j) + h(j, i));
    return h;
}

}  // namespace detail

/// Projected Newton-type minimization with an active set. Variables sitting
/// at a bound whose gradient pushes outward are frozen; the rest take a
/// scoring step (or a Newton step close to the optimum) with backtracking.
inline BoxResult minimize_box(const BoxProblem& p, std::vector<double> x, const BoxOptions& opt = {}) {
    const std::size_t n = x.size();
    if (p.lower.size() != n || p.upper.size() != n) throw Error(Errc::InvalidArgument, "bounds do not match start");
    BoxResult res;
    x = detail::project(std::move(x), p);
    double f = p.value(x);
    if (!std::isfinite(f)) {
        res.message = "objective not finite at start";
        res.x = x;
        return res;
    }
    double last_decrement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;
        const auto g = p.gradient(x);
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i) {
            const bool at_lo = x[i] <= p.lower[i] && g[i] > 0.0;
            const bool at_hi = x[i] >= p.upper[i] && g[i] < 0.0;
            if (!at_lo && !at_hi) free.push_back(i);
        }
        if (free.empty()) {
            res.converged = true;
            last_decrement = 0.0;
            break;
        }
        const DenseMatrix fisher = p.curvature(x);
        bool accepted = false;
        double decrement = 0.0;
        // Attempts: Newton (near the optimum), scoring, then scoring with growing ridge.
        std::vector<std::pair<bool, double>> attempts;
        if (last_decrement < opt.newton_threshold) attempts.push_back({true, 0.0});
        attempts.push_back({false, 0.0});
        for (double r : {1e-6, 1e-3, 1e-1, 1e1, 1e3}) attempts.push_back({false, r});
        for (const auto& [newton, ridge] : attempts) {
            const DenseMatrix m = newton ? detail::fd_hessian(p, x, fisher, g) : fisher;
            std::vector<double> d;
            if (!detail::free_step(m, g, free, ridge, d)) continue;
            double gd = 0.0;
            for (std::size_t i = 0; i < n; ++i) gd += g[i] * d[i];
            if (!(gd < 0.0)) continue;
            decrement = -gd;
            if (decrement <= opt.tolerance) {
                res.converged = true;
                accepted = true;
                break;
            }
            double t = 1.0;
            for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
                std::vector<double> trial(n);
                for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * d[i];
                trial = detail::project(std::move(trial), p);
                double pred = 0.0;
                for (std::size_t i = 0; i < n; ++i) pred += g[i] * (trial[i] - x[i]);
                const double ft = p.value(trial);
                if (std::isfinite(ft) && ft <= f + 1e-4 * pred) {
                    accepted = trial != x || ft < f;
                    if (accepted) {
                        x = std::move(trial);
                        f = ft;
                    }
                    break;
                }
            }
            if (accepted) break;
        }
        last_decrement = decrement;
        if (res.converged) break;
        if (!accepted) {
            // No descent possible: at the floating-point floor of the objective.
            res.converged = decrement <= 1e3 * opt.tolerance;
            res.message = res.converged ? "" : "line search failed";
            break;
        }
    }
    if (!res.converged && res.message.empty()) res.message = "iteration limit";
    res.x = std::move(x);
    res.value = f;
    res.decrement = last_decrement;
    return res;
}

}  // namespace rbopt

#endif  // RBOPT_OPTIMIZE_HPP
