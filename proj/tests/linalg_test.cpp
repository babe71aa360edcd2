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

#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "rbopt/linalg.hpp"
#include "rbopt/simplex.hpp"

using namespace rbopt;

namespace {

LPStandardForm make_lp(std::vector<double> c, std::size_t m, std::vector<double> a, std::vector<double> b) {
    const std::size_t n = c.size();
    return {std::move(c), DenseMatrix(m, n, std::move(a)), std::move(b)};
}

}  // namespace

TEST(solve_linear_system, small_cases) {
    auto x = solve_linear_system(DenseMatrix::identity(3), std::vector<double>{1, 2, 3});
    EXPECT_EQ(x, (std::vector<double>{1, 2, 3}));
    x = solve_linear_system(DenseMatrix(2, 2, {2, 0, 0, 4}), std::vector<double>{2, 8});
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
    try {
        solve_linear_system(DenseMatrix(2, 2, {1, 1, 1, 1}), std::vector<double>{1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SingularMatrix);
    }
}

TEST(solve_linear_system, residual_on_random_systems) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + trial % 8;
        DenseMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = normal(rng) + (i == j ? 3.0 : 0.0);
        std::vector<double> b(n);
        for (auto& v : b) v = normal(rng);
        auto x = solve_linear_system(a, b);
        auto r = a * std::span<const double>(x);
        for (std::size_t i = 0; i < n; ++i) ASSERT_LE(std::abs(r[i] - b[i]), 1e-10 * (1 + max_abs(b)));
    }
}

TEST(invert_small, examples) {
    EXPECT_EQ(invert_small(DenseMatrix::identity(2)), DenseMatrix::identity(2));
    auto inv = invert_small(DenseMatrix(2, 2, {4, 0, 0, 2}));
    EXPECT_EQ(inv, DenseMatrix(2, 2, {0.25, 0, 0, 0.5}));
    EXPECT_THROW(invert_small(DenseMatrix(2, 2, {1, 2, 2, 4})), Error);
    EXPECT_THROW(invert_small(DenseMatrix::identity(65)), Error);
}

TEST(invert_small, product_is_identity) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 10;
        DenseMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = normal(rng) + (i == j ? 4.0 : 0.0);
        auto prod = a * invert_small(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ASSERT_NEAR(prod(i, j), i == j ? 1.0 : 0.0, 1e-8);
    }
}

TEST(simplex, textbook_examples) {
    auto s = simplex_solve(make_lp({1, 1}, 1, {1, 1}, {1}));
    ASSERT_EQ(s.status, LPStatus::Optimal);
    EXPECT_NEAR(s.objective_value, 1.0, 1e-12);

    s = simplex_solve(make_lp({2, 1}, 1, {1, 1}, {1}));
    ASSERT_EQ(s.status, LPStatus::Optimal);
    EXPECT_NEAR(s.x[0], 0.0, 1e-12);
    EXPECT_NEAR(s.x[1], 1.0, 1e-12);
    EXPECT_NEAR(s.objective_value, 1.0, 1e-12);

    s = simplex_solve(make_lp({-1}, 1, {0}, {0}));
    EXPECT_EQ(s.status, LPStatus::Unbounded);
}

TEST(simplex, infeasible) {
    // x1 + x2 = -1 with x >= 0.
    auto s = simplex_solve(make_lp({1, 1}, 1, {1, 1}, {-1}));
    EXPECT_EQ(s.status, LPStatus::Infeasible);
    // x1 = 1 and x1 = 2.
    s = simplex_solve(make_lp({1, 0}, 2, {1, 0, 1, 0}, {1, 2}));
    EXPECT_EQ(s.status, LPStatus::Infeasible);
}

TEST(simplex, redundant_rows) {
    auto s = simplex_solve(make_lp({1, 2, 3}, 2, {1, 1, 1, 2, 2, 2}, {1, 2}));
    ASSERT_EQ(s.status, LPStatus::Optimal);
    EXPECT_NEAR(s.objective_value, 1.0, 1e-12);
}

TEST(simplex, matches_vertex_enumeration) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 6;
        const std::size_t n = m + 1 + static_cast<std::size_t>(rng() % (m <= 3 ? 37 - m : 14 - m));
        auto lp = oracle::random_lp(rng, m, n);
        auto s = simplex_solve(lp);
        auto best = oracle::vertex_enumeration(lp);
        ASSERT_TRUE(best.has_value());
        ASSERT_EQ(s.status, LPStatus::Optimal) << "trial " << trial;
        EXPECT_NEAR(s.objective_value, *best, 1e-7 * (1 + std::abs(*best))) << "trial " << trial;
        // Feasibility, nonnegativity, and strong duality.
        auto ax = lp.A * std::span<const double>(s.x);
        double dual = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            EXPECT_NEAR(ax[r], lp.b[r], 1e-8 * (1 + std::abs(lp.b[r])));
            dual += s.duals[r] * lp.b[r];
        }
        for (double v : s.x) EXPECT_GE(v, -1e-10);
        EXPECT_NEAR(dual, s.objective_value, 1e-7 * (1 + std::abs(dual)));
        // Reduced costs are nonnegative at the optimum.
        for (std::size_t c = 0; c < n; ++c) {
            double rc = lp.c[c];
            for (std::size_t r = 0; r < m; ++r) rc -= s.duals[r] * lp.A(r, c);
            EXPECT_GE(rc, -1e-9);
        }
    }
}

TEST(simplex, degenerate_problem_terminates) {
    // Klee-Minty style cube in standard form with slacks; Bland fallback ends cycling.
    const std::size_t d = 6;
    LPStandardForm lp;
    lp.A = DenseMatrix(d, 2 * d);
    lp.b.assign(d, 0.0);
    lp.c.assign(2 * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) lp.A(i, j) = std::pow(2.0, static_cast<double>(i - j + 1));
        lp.A(i, i) = 1.0;
        lp.A(i, d + i) = 1.0;
        lp.b[i] = std::pow(5.0, static_cast<double>(i + 1));
        lp.c[i] = -std::pow(2.0, static_cast<double>(d - i - 1));
    }
    auto s = simplex_solve(lp);
    ASSERT_EQ(s.status, LPStatus::Optimal);
    EXPECT_NEAR(s.objective_value, -std::pow(5.0, static_cast<double>(d)), 1e-6);
}
