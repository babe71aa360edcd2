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

#ifndef RBOPT_MODEL_HPP
#define RBOPT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbopt/error.hpp"

namespace rbopt {

using Params = std::vector<double>;

/// Dimension D of the benchmarked Hilbert space and the derived depolarizing
/// scale alpha = D / (D - 1).
class HilbertDim {
   public:
    explicit HilbertDim(int d = 2) : d_(d) {
        if (d < 2) throw Error(Errc::InvalidArgument, "Hilbert dimension must be >= 2");
    }

    int value() const noexcept { return d_; }
    double alpha() const noexcept { return static_cast<double>(d_) / static_cast<double>(d_ - 1); }
    double inverse() const noexcept { return 1.0 / static_cast<double>(d_); }

    bool operator==(const HilbertDim&) const = default;

   private:
    int d_;
};

enum class ModelKind { Basic, Moments, Drift, General };

/// Statistical law of the success probability P(n).
///
/// Parameter layouts:
///   Basic   (theta0, theta1)
///   Moments (theta0, theta1, theta2, ..., theta_kmax), mean-shifted moments
///   Drift   (theta0, A, B, C), per-step error A + B k + C k^2
///   General (P(n) for n in n_set)
class Model {
   public:
    static Model basic(HilbertDim dim = HilbertDim{}) { return Model(ModelKind::Basic, dim); }

    static Model moments(int k_max, HilbertDim dim = HilbertDim{}) {
        if (k_max < 2) throw Error(Errc::InvalidArgument, "moments model requires k_max >= 2");
        Model m(ModelKind::Moments, dim);
        m.k_max_ = k_max;
        return m;
    }

    static Model drift(HilbertDim dim = HilbertDim{}) { return Model(ModelKind::Drift, dim); }

    static Model general(std::vector<std::int64_t> n_set, HilbertDim dim = HilbertDim{}) {
        if (n_set.empty()) throw Error(Errc::InvalidArgument, "general model needs a nonempty length set");
        for (std::size_t i = 0; i < n_set.size(); ++i) {
            if (n_set[i] < 0) throw Error(Errc::InvalidArgument, "sequence lengths must be nonnegative");
            if (i > 0 && n_set[i] <= n_set[i - 1]) {
                throw Error(Errc::InvalidArgument, "general model lengths must be strictly increasing");
            }
        }
        Model m(ModelKind::General, dim);
        m.n_set_ = std::move(n_set);
        return m;
    }

    ModelKind kind() const noexcept { return kind_; }
    HilbertDim dim() const noexcept { return dim_; }
    int k_max() const noexcept { return k_max_; }
    const std::vector<std::int64_t>& n_set() const noexcept { return n_set_; }

    std::size_t num_params() const noexcept {
        switch (kind_) {
            case ModelKind::Basic: return 2;
            case ModelKind::Moments: return static_cast<std::size_t>(k_max_) + 1;
            case ModelKind::Drift: return 4;
            case ModelKind::General: return n_set_.size();
        }
        return 0;
    }

    std::vector<std::string> param_names() const {
        std::vector<std::string> names;
        switch (kind_) {
            case ModelKind::Basic:
            case ModelKind::Moments:
                for (std::size_t i = 0; i < num_params(); ++i) names.push_back("theta" + std::to_string(i));
                break;
            case ModelKind::Drift: names = {"theta0", "A", "B", "C"}; break;
            case ModelKind::General:
                for (auto n : n_set_) names.push_back("p" + std::to_string(n));
                break;
        }
        return names;
    }

    /// Short descriptor used in files: "basic", "moments:3", "drift", "general".
    std::string describe() const {
        switch (kind_) {
            case ModelKind::Basic: return "basic";
            case ModelKind::Moments: return "moments:" + std::to_string(k_max_);
            case ModelKind::Drift: return "drift";
            case ModelKind::General: return "general";
        }
        return "unknown";
    }

    /// Index of length n in a General model's n_set.
    std::size_t general_index(std::int64_t n) const {
        auto it = std::lower_bound(n_set_.begin(), n_set_.end(), n);
        if (it == n_set_.end() || *it != n) {
            throw Error(Errc::LengthNotInModel, "length " + std::to_string(n) + " is not in the general model's set");
        }
        return static_cast<std::size_t>(it - n_set_.begin());
    }

    bool operator==(const Model&) const = default;

   private:
    Model(ModelKind kind, HilbertDim dim) : kind_(kind), dim_(dim) {}

    ModelKind kind_;
    HilbertDim dim_;
    int k_max_ = 0;
    std::vector<std::int64_t> n_set_;
};

/// Probabilities within this distance outside [0, 1] are clamped; anything
/// further out is an error.
inline constexpr double kProbabilityTolerance = 1e-12;

namespace detail {

/// base^n by repeated squaring on the real base.
inline double ipow(double base, std::int64_t n) {
    double result = 1.0;
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

/// Binomial coefficient as a double; exact for the small k used here.
inline double binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (std::int64_t j = 0; j < k; ++j) {
        c *= static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    return c;
}

}  // namespace detail

struct ParamCheck {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const noexcept { return errors.empty(); }
};

/// Box bounds used by the fitters. Unbounded directions are +-infinity.
inline std::pair<std::vector<double>, std::vector<double>> param_bounds(const Model& model) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lo(model.num_params(), 0.0);
    std::vector<double> hi(model.num_params(), 1.0);
    if (model.kind() == ModelKind::Moments) {
        for (std::size_t i = 2; i < lo.size(); ++i) {
            lo[i] = -inf;
            hi[i] = inf;
        }
    } else if (model.kind() == ModelKind::Drift) {
        lo[2] = lo[3] = -inf;
        hi[2] = hi[3] = inf;
    }
    return {lo, hi};
}

inline ParamCheck check_params(const Model& model, std::span<const double> params) {
    ParamCheck check;
    if (params.size() != model.num_params()) {
        check.errors.push_back("expected " + std::to_string(model.num_params()) + " parameters, got " +
                               std::to_string(params.size()));
        return check;
    }
    auto names = model.param_names();
    auto [lo, hi] = param_bounds(model);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(params[i])) {
            check.errors.push_back(names[i] + " is not finite");
        } else if (params[i] < lo[i] || params[i] > hi[i]) {
            check.errors.push_back(names[i] + " outside [" + std::to_string(lo[i]) + ", " + std::to_string(hi[i]) + "]");
        }
    }
    if (model.kind() == ModelKind::Moments && params[2] < 0.0) {
        check.warnings.push_back("non-probabilistic second moment (theta2 < 0)");
    }
    return check;
}

inline void validate_params(const Model& model, std::span<const double> params) {
    auto check = check_params(model, params);
    if (!check.ok()) throw Error(Errc::InvalidParams, check.errors.front());
}

struct Evaluation {
    double probability = 0.0;
    std::vector<double> gradient;
};

/// P(n) and its gradient without domain validation or clamping. Used by the
/// fitters, which probe parameters that may leave the model's domain.
inline Evaluation evaluate_unchecked(const Model& model, std::span<const double> params, std::int64_t n,
                                     bool with_gradient = true) {
    const double alpha = model.dim().alpha();
    const double inv_d = model.dim().inverse();
    Evaluation ev;
    if (with_gradient) ev.gradient.assign(model.num_params(), 0.0);

    switch (model.kind()) {
        case ModelKind::Basic:
        case ModelKind::Moments: {
            const double amp = (1.0 - alpha * params[0]) / alpha;
            const double q = 1.0 - alpha * params[1];
            double sum = detail::ipow(q, n);
            double d_sum_d1 = n >= 1 ? -alpha * static_cast<double>(n) * detail::ipow(q, n - 1) : 0.0;
            if (model.kind() == ModelKind::Moments) {
                const std::int64_t top = std::min<std::int64_t>(n, model.k_max());
                for (std::int64_t k = 2; k <= top; ++k) {
                    const double coef = detail::binomial(n, k) * detail::ipow(-alpha, k);
                    const double qk = detail::ipow(q, n - k);
                    sum += coef * qk * params[static_cast<std::size_t>(k)];
                    if (with_gradient) {
                        if (n > k) {
                            d_sum_d1 += coef * params[static_cast<std::size_t>(k)] * (-alpha) *
                                        static_cast<double>(n - k) * detail::ipow(q, n - k - 1);
                        }
                        ev.gradient[static_cast<std::size_t>(k)] = amp * coef * qk;
                    }
                }
            }
            ev.probability = inv_d + amp * sum;
            if (with_gradient) {
                ev.gradient[0] = -sum;
                ev.gradient[1] = amp * d_sum_d1;
            }
            break;
        }
        case ModelKind::Drift: {
            const double amp = (1.0 - alpha * params[0]) / alpha;
            const double a = params[1], b = params[2], c = params[3];
            double prod = 1.0;
            double prod_nonzero = 1.0;
            std::int64_t zeros = 0;
            std::int64_t zero_at = 0;
            double sum_a = 0.0, sum_b = 0.0, sum_c = 0.0;
            for (std::int64_t k = 1; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double f = 1.0 - alpha * (a + b * kk + c * kk * kk);
                prod *= f;
                if (!with_gradient) continue;
                if (f == 0.0) {
                    ++zeros;
                    zero_at = k;
                } else {
                    prod_nonzero *= f;
                    sum_a += 1.0 / f;
                    sum_b += kk / f;
                    sum_c += kk * kk / f;
                }
            }
            ev.probability = inv_d + amp * prod;
            if (with_gradient) {
                ev.gradient[0] = -prod;
                if (zeros == 0) {
                    ev.gradient[1] = -amp * alpha * prod * sum_a;
                    ev.gradient[2] = -amp * alpha * prod * sum_b;
                    ev.gradient[3] = -amp * alpha * prod * sum_c;
                } else if (zeros == 1) {
                    const double kk = static_cast<double>(zero_at);
                    ev.gradient[1] = -amp * alpha * prod_nonzero;
                    ev.gradient[2] = -amp * alpha * prod_nonzero * kk;
                    ev.gradient[3] = -amp * alpha * prod_nonzero * kk * kk;
                }
            }
            break;
        }
        case ModelKind::General: {
            const std::size_t idx = model.general_index(n);
            ev.probability = params[idx];
            if (with_gradient) ev.gradient[idx] = 1.0;
            break;
        }
    }
    return ev;
}

namespace detail {

inline double clamp_probability(double p, std::int64_t n) {
    if (!(p >= -kProbabilityTolerance && p <= 1.0 + kProbabilityTolerance)) {
        throw Error(Errc::ProbabilityOutOfRange,
                    "P(" + std::to_string(n) + ") = " + std::to_string(p) + " is outside [0, 1]");
    }
    return std::clamp(p, 0.0, 1.0);
}

inline void check_length(std::int64_t n) {
    if (n < 0) throw Error(Errc::InvalidArgument, "sequence length must be nonnegative");
}

}  // namespace detail

inline double success_probability(const Model& model, std::span<const double> params, std::int64_t n) {
    validate_params(model, params);
    detail::check_length(n);
    return detail::clamp_probability(evaluate_unchecked(model, params, n, false).probability, n);
}

/// Analytic dP(n)/dtheta_i.
inline std::vector<double> gradient(const Model& model, std::span<const double> params, std::int64_t n) {
    validate_params(model, params);
    detail::check_length(n);
    return evaluate_unchecked(model, params, n, true).gradient;
}

/// True when some per-step drift error exceeds 1/alpha, i.e. a factor in the
/// drift product is negative. The probability is still returned in that case.
inline bool drift_unphysical(const Model& model, std::span<const double> params, std::int64_t n) {
    if (model.kind() != ModelKind::Drift) return false;
    const double alpha = model.dim().alpha();
    for (std::int64_t k = 1; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        if (1.0 - alpha * (params[1] + params[2] * kk + params[3] * kk * kk) < 0.0) return true;
    }
    return false;
}

/// Fidelity of a chain of depolarizing channels with errors eps_i.
inline double compose_depolarizing(std::span<const double> errors, HilbertDim dim) {
    const double alpha = dim.alpha();
    double prod = 1.0;
    for (double eps : errors) {
        if (!(eps >= 0.0 && eps <= 1.0)) throw Error(Errc::InvalidArgument, "depolarizing error outside [0, 1]");
        prod *= 1.0 - alpha * eps;
    }
    return dim.inverse() + prod / alpha;
}

/// Raw moments E[eps^k] of the step-error distribution from its mean and
/// central moments. `central[0]` is the mean, `central[k-1]` the k-th central
/// moment for k >= 2. Output has the same layout with raw moments.
inline std::vector<double> central_to_raw_moments(std::span<const double> central) {
    const std::size_t n = central.size();
    std::vector<double> raw(n, 0.0);
    if (n == 0) return raw;
    const double mean = central[0];
    for (std::size_t k = 1; k <= n; ++k) {
        // E[eps^k] = sum_j C(k, j) mean^(k-j) E[(eps - mean)^j]
        double acc = detail::ipow(mean, static_cast<std::int64_t>(k));
        for (std::size_t j = 2; j <= k; ++j) {
            acc += detail::binomial(static_cast<std::int64_t>(k), static_cast<std::int64_t>(j)) *
                   detail::ipow(mean, static_cast<std::int64_t>(k - j)) * central[j - 1];
        }
        raw[k - 1] = acc;
    }
    return raw;
}

inline std::vector<double> raw_to_central_moments(std::span<const double> raw) {
    const std::size_t n = raw.size();
    std::vector<double> central(n, 0.0);
    if (n == 0) return central;
    const double mean = raw[0];
    central[0] = mean;
    for (std::size_t k = 2; k <= n; ++k) {
        // E[(eps - mean)^k] = sum_j C(k, j) (-mean)^(k-j) E[eps^j], E[eps^0] = 1
        double acc = detail::ipow(-mean, static_cast<std::int64_t>(k));
        for (std::size_t j = 1; j <= k; ++j) {
            acc += detail::binomial(static_cast<std::int64_t>(k), static_cast<std::int64_t>(j)) *
                   detail::ipow(-mean, static_cast<std::int64_t>(k - j)) * raw[j - 1];
        }
        central[k - 1] = acc;
    }
    return central;
}

struct MomentInversion {
    double theta0 = 0.0;
    /// Unshifted moments theta~_1..theta~_N.
    std::vector<double> raw_moments;
    /// Moments-model parameters (theta0, theta1, theta2, ..., thetaN).
    Params params;
};

/// Moments-model parameters reproducing arbitrary P(0), ..., P(N).
inline MomentInversion moments_from_general(std::span<const double> p, HilbertDim dim) {
    if (p.empty()) throw Error(Errc::InvalidArgument, "need at least P(0)");
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidArgument, "probabilities must lie in [0, 1]");
    }
    const double alpha = dim.alpha();
    const double amp = p[0] - dim.inverse();
    if (std::abs(amp) <= 1e-12) {
        throw Error(Errc::CompletelyDepolarized, "P(0) equals 1/D; moment parameters are irrelevant");
    }
    MomentInversion out;
    out.theta0 = (1.0 - alpha * amp) / alpha;
    const std::size_t big_n = p.size() - 1;
    out.raw_moments.assign(big_n, 0.0);
    // (P(n) - P(0)) / amp = sum_{k=1..n} C(n,k) (-alpha)^k raw_k, lower triangular in (n, k).
    for (std::size_t n = 1; n <= big_n; ++n) {
        const auto nn = static_cast<std::int64_t>(n);
        double rhs = (p[n] - p[0]) / amp;
        for (std::size_t k = 1; k < n; ++k) {
            const auto kk = static_cast<std::int64_t>(k);
            rhs -= detail::binomial(nn, kk) * detail::ipow(-alpha, kk) * out.raw_moments[k - 1];
        }
        out.raw_moments[n - 1] = rhs / detail::ipow(-alpha, nn);
    }
    auto central = raw_to_central_moments(out.raw_moments);
    out.params.push_back(out.theta0);
    out.params.insert(out.params.end(), central.begin(), central.end());
    return out;
}

}  // namespace rbopt

#endif  // RBOPT_MODEL_HPP
