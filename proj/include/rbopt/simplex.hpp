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

#ifndef RBOPT_SIMPLEX_HPP
#define RBOPT_SIMPLEX_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "rbopt/error.hpp"
#include "rbopt/linalg.hpp"

namespace rbopt {

/// minimize c.x subject to A x = b, x >= 0.
struct LPStandardForm {
    std::vector<double> c;
    DenseMatrix A;
    std::vector<double> b;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPSolution {
    LPStatus status = LPStatus::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    /// Basic column per constraint row. Indices >= A.cols() denote artificial
    /// columns left basic on redundant rows.
    std::vector<std::size_t> basis;
    /// Simplex multipliers y with y.b equal to the optimal objective.
    std::vector<double> duals;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-12;
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-9;
    std::size_t max_iterations = 1'000'000;
    std::size_t refactor_interval = 50;
};

namespace detail {

/// Two-phase revised simplex with an explicit basis inverse. Dantzig pricing
/// switches to Bland's rule after 2 (m + n) iterations of a phase.
class RevisedSimplex {
   public:
    RevisedSimplex(const LPStandardForm& lp, const SimplexOptions& opt)
        : opt_(opt), m_(lp.A.rows()), n_(lp.A.cols()), a_(lp.A), b_(lp.b), sign_(lp.A.rows(), 1.0) {
        if (lp.c.size() != n_ || lp.b.size() != m_) throw Error(Errc::InvalidArgument, "LP shape mismatch");
        if (!lp.A.all_finite()) throw Error(Errc::InvalidArgument, "LP matrix has non-finite entries");
        for (double v : lp.b)
            if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "LP rhs has non-finite entries");
        for (double v : lp.c)
            if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "LP objective has non-finite entries");
        cost_ = lp.c;
        for (std::size_t i = 0; i < m_; ++i) {
            if (b_[i] < 0.0) {
                sign_[i] = -1.0;
                b_[i] = -b_[i];
                for (std::size_t j = 0; j < n_; ++j) a_(i, j) = -a_(i, j);
            }
        }
        col_major_.resize(n_ * m_);
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t i = 0; i < m_; ++i) col_major_[j * m_ + i] = a_(i, j);
    }

    LPSolution solve() {
        LPSolution sol;
        basis_.resize(m_);
        in_basis_.assign(n_ + m_, false);
        for (std::size_t i = 0; i < m_; ++i) {
            basis_[i] = n_ + i;
            in_basis_[n_ + i] = true;
        }
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        xb_ = b_;

        std::vector<double> phase1(n_ + m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = 1.0;
        run_phase(phase1, /*allow_artificial=*/true);

        double infeasibility = 0.0;
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] >= n_) infeasibility += xb_[r];
        if (infeasibility > opt_.feasibility_tolerance * (1.0 + max_abs(b_))) {
            sol.status = LPStatus::Infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        drive_out_artificials();

        std::vector<double> phase2(n_ + m_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) phase2[j] = cost_[j];
        const bool bounded = run_phase(phase2, /*allow_artificial=*/false);
        sol.iterations = iterations_;
        if (!bounded) {
            sol.status = LPStatus::Unbounded;
            return sol;
        }

        refactor();
        sol.status = LPStatus::Optimal;
        sol.x.assign(n_, 0.0);
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] < n_) sol.x[basis_[r]] = std::max(0.0, xb_[r]);
        long double obj = 0.0L;
        for (std::size_t j = 0; j < n_; ++j) obj += static_cast<long double>(cost_[j]) * sol.x[j];
        sol.objective_value = static_cast<double>(obj);
        sol.basis = basis_;
        auto y = multipliers(phase2);
        sol.duals.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = y[i] * sign_[i];
        return sol;
    }

   private:
    double column_entry(std::size_t j, std::size_t i) const {
        if (j < n_) return col_major_[j * m_ + i];
        return (j - n_ == i) ? 1.0 : 0.0;
    }

    /// B^-1 A_j.
    std::vector<double> ftran(std::size_t j) const {
        std::vector<double> out(m_, 0.0);
        if (j >= n_) {
            const std::size_t c = j - n_;
            for (std::size_t r = 0; r < m_; ++r) out[r] = binv_[r * m_ + c];
            return out;
        }
        const double* col = &col_major_[j * m_];
        for (std::size_t r = 0; r < m_; ++r) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m_; ++i) acc += binv_[r * m_ + i] * col[i];
            out[r] = acc;
        }
        return out;
    }

    std::vector<double> multipliers(const std::vector<double>& costs) const {
        std::vector<double> y(m_, 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            const double cb = costs[basis_[k]];
            if (cb == 0.0) continue;
            for (std::size_t i = 0; i < m_; ++i) y[i] += cb * binv_[k * m_ + i];
        }
        return y;
    }

    double reduced_cost(std::size_t j, const std::vector<double>& costs, const std::vector<double>& y) const {
        double d = costs[j];
        if (j >= n_) return d - y[j - n_];
        const double* col = &col_major_[j * m_];
        for (std::size_t i = 0; i < m_; ++i) d -= y[i] * col[i];
        return d;
    }

    void pivot(std::size_t r, std::size_t j, const std::vector<double>& a) {
        const double theta = std::max(0.0, xb_[r]) / a[r];
        const double inv = 1.0 / a[r];
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || a[i] == 0.0) continue;
            xb_[i] -= a[i] * theta;
            const double f = a[i] * inv;
            for (std::size_t c = 0; c < m_; ++c) binv_[i * m_ + c] -= f * binv_[r * m_ + c];
        }
        xb_[r] = theta;
        for (std::size_t c = 0; c < m_; ++c) binv_[r * m_ + c] *= inv;
        in_basis_[basis_[r]] = false;
        basis_[r] = j;
        in_basis_[j] = true;
        ++iterations_;
        if (++since_refactor_ >= opt_.refactor_interval) refactor();
    }

    void refactor() {
        since_refactor_ = 0;
        if (m_ == 0) return;
        DenseMatrix basis_matrix(m_, m_);
        for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t i = 0; i < m_; ++i) basis_matrix(i, k) = column_entry(basis_[k], i);
        LuDecomposition lu(basis_matrix);
        std::vector<long double> e(m_, 0.0L);
        for (std::size_t c = 0; c < m_; ++c) {
            std::fill(e.begin(), e.end(), 0.0L);
            e[c] = 1.0L;
            auto col = lu.solve_extended(e);
            for (std::size_t r = 0; r < m_; ++r) binv_[r * m_ + c] = static_cast<double>(col[r]);
        }
        std::vector<long double> rhs(b_.begin(), b_.end());
        auto x = lu.solve_extended(rhs);
        for (std::size_t r = 0; r < m_; ++r) xb_[r] = static_cast<double>(x[r]);
    }

    /// Returns false when the phase objective is unbounded below.
    bool run_phase(const std::vector<double>& costs, bool allow_artificial) {
        std::size_t phase_iterations = 0;
        const std::size_t bland_after = 2 * (m_ + n_);
        const std::size_t limit = allow_artificial ? n_ + m_ : n_;
        while (true) {
            if (iterations_ >= opt_.max_iterations) {
                throw Error(Errc::IterationLimit, "simplex exceeded " + std::to_string(opt_.max_iterations) + " iterations");
            }
            const bool bland = phase_iterations >= bland_after;
            auto y = multipliers(costs);
            std::optional<std::size_t> entering;
            double best = -opt_.optimality_tolerance;
            for (std::size_t j = 0; j < limit; ++j) {
                if (in_basis_[j]) continue;
                const double d = reduced_cost(j, costs, y);
                if (d < best) {
                    entering = j;
                    if (bland) break;
                    best = d;
                }
            }
            if (!entering) return true;

            auto a = ftran(*entering);
            std::optional<std::size_t> leave;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                if (a[r] <= opt_.pivot_tolerance) continue;
                const double ratio = std::max(0.0, xb_[r]) / a[r];
                if (!leave || ratio < best_ratio - 1e-12 * (1.0 + best_ratio)) {
                    leave = r;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio)) {
                    const bool take = bland ? basis_[r] < basis_[*leave] : a[r] > a[*leave];
                    if (take) {
                        leave = r;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (!leave) return false;
            pivot(*leave, *entering, a);
            ++phase_iterations;
        }
    }

    void drive_out_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < n_) continue;
            std::optional<std::size_t> pick;
            double best = 1e-9;
            for (std::size_t j = 0; j < n_; ++j) {
                if (in_basis_[j]) continue;
                double v = 0.0;
                for (std::size_t i = 0; i < m_; ++i) v += binv_[r * m_ + i] * col_major_[j * m_ + i];
                if (std::abs(v) > best) {
                    best = std::abs(v);
                    pick = j;
                }
            }
            if (!pick) continue;  // redundant row; the artificial stays basic at zero
            auto a = ftran(*pick);
            // Degenerate pivot: the artificial sits at (numerically) zero.
            xb_[r] = 0.0;
            const double inv = 1.0 / a[r];
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == r || a[i] == 0.0) continue;
                const double f = a[i] * inv;
                for (std::size_t c = 0; c < m_; ++c) binv_[i * m_ + c] -= f * binv_[r * m_ + c];
            }
            for (std::size_t c = 0; c < m_; ++c) binv_[r * m_ + c] *= inv;
            in_basis_[basis_[r]] = false;
            basis_[r] = *pick;
            in_basis_[*pick] = true;
            ++iterations_;
        }
        refactor();
    }

    SimplexOptions opt_;
    std::size_t m_, n_;
    DenseMatrix a_;
    std::vector<double> b_;
    std::vector<double> sign_;
    std::vector<double> cost_;
    std::vector<double> col_major_;
    std::vector<std::size_t> basis_;
    std::vector<bool> in_basis_;
    std::vector<double> binv_;
    std::vector<double> xb_;
    std::size_t iterations_ = 0;
    std::size_t since_refactor_ = 0;
};

}  // namespace detail

inline LPSolution simplex_solve(const LPStandardForm& lp, const SimplexOptions& options = {}) {
    if (lp.A.rows() > lp.A.cols()) throw Error(Errc::InvalidArgument, "LP needs m <= n");
    detail::RevisedSimplex solver(lp, options);
    return solver.solve();
}

}  // namespace rbopt

#endif  // RBOPT_SIMPLEX_HPP
