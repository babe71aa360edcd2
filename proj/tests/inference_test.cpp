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
#include "rbopt/bootstrap.hpp"
#include "rbopt/design.hpp"
#include "rbopt/elr.hpp"
#include "rbopt/fit.hpp"
#include "rbopt/optimize.hpp"
#include "rbopt/simulate.hpp"

using namespace rbopt;

namespace {

std::vector<LengthRecord> noiseless(const Model& model, const Params& theta, const std::vector<std::int64_t>& ns, double w) {
    std::vector<LengthRecord> out;
    for (auto n : ns) {
        const double p = success_probability(model, theta, n);
        out.push_back({n, static_cast<std::int64_t>(w), static_cast<std::int64_t>(std::llround(w * p))});
    }
    return out;
}

ExperimentDesign uniform_design(std::vector<std::int64_t> ns, std::int64_t trials) {
    ExperimentDesign d;
    d.lengths = std::move(ns);
    d.trials.assign(d.lengths.size(), trials);
    return d;
}

}  // namespace

TEST(log_likelihood, examples) {
    const std::vector<LengthRecord> one{{1, 1, 1}};
    EXPECT_NEAR(log_likelihood(Model::general({1}), Params{0.5}, one), std::log(0.5), 1e-15);
    const std::vector<LengthRecord> four{{1, 4, 3}};
    EXPECT_NEAR(log_likelihood(Model::basic(), Params{0, 0.25}, four), std::log(0.421875), 1e-14);
    const std::vector<LengthRecord> a{{1, 10, 7}}, b{{5, 20, 11}}, ab{{1, 10, 7}, {5, 20, 11}};
    const Params t{0.02, 0.05};
    EXPECT_NEAR(log_likelihood(Model::basic(), t, ab),
                log_likelihood(Model::basic(), t, a) + log_likelihood(Model::basic(), t, b), 1e-12);
}

TEST(log_likelihood, boundaries) {
    const std::vector<LengthRecord> all{{3, 5, 5}}, some{{3, 5, 4}}, none{{3, 5, 0}};
    EXPECT_EQ(log_likelihood(Model::basic(), Params{0, 0}, all), 0.0);
    EXPECT_EQ(log_likelihood(Model::basic(), Params{0, 0}, some), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(log_likelihood(Model::general({3}), Params{0.0}, none), 0.0);
    EXPECT_EQ(log_likelihood(Model::general({3}), Params{0.0}, some), -std::numeric_limits<double>::infinity());
    try {
        log_likelihood(Model::general({1}), Params{0.5}, all);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::LengthNotInModel);
    }
}

TEST(minimize_box, quadratic_with_active_bound) {
    // (x - 2)^2 + (y + 1)^2 on [0, 1]^2 has its minimum at (1, 0).
    BoxProblem p;
    p.value = [](const std::vector<double>& x) { return (x[0] - 2) * (x[0] - 2) + (x[1] + 1) * (x[1] + 1); };
    p.gradient = [](const std::vector<double>& x) { return std::vector<double>{2 * (x[0] - 2), 2 * (x[1] + 1)}; };
    p.curvature = [](const std::vector<double>&) { return DenseMatrix(2, 2, {2, 0, 0, 2}); };
    p.lower = {0, 0};
    p.upper = {1, 1};
    auto r = minimize_box(p, {0.5, 0.5});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-12);
    EXPECT_NEAR(r.x[1], 0.0, 1e-12);
}

TEST(minimize_box, interior_nonquadratic) {
    BoxProblem p;
    p.value = [](const std::vector<double>& x) { return std::cosh(x[0] - 0.3) + std::exp(x[1]) - 2 * x[1]; };
    p.gradient = [](const std::vector<double>& x) { return std::vector<double>{std::sinh(x[0] - 0.3), std::exp(x[1]) - 2}; };
    p.curvature = [](const std::vector<double>&) { return DenseMatrix::identity(2); };
    p.lower = {-5, -5};
    p.upper = {5, 5};
    auto r = minimize_box(p, {4, -4});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 0.3, 1e-6);
    EXPECT_NEAR(r.x[1], std::log(2.0), 1e-6);
}

TEST(mle_fit, general_closed_form) {
    const std::vector<LengthRecord> rec{{1, 10, 9}, {4, 7, 3}, {9, 3, 0}};
    auto f = mle_fit(Model::general({1, 4, 9}), rec);
    EXPECT_EQ(f.theta_hat, (Params{0.9, 3.0 / 7.0, 0.0}));
    EXPECT_TRUE(f.converged);
    try {
        mle_fit(Model::general({1, 2, 4, 9}), rec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonIdentifiable);
    }
}

TEST(mle_fit, recovers_noiseless_parameters) {
    const Params truth{0.03, 2e-5};
    auto rec = noiseless(Model::basic(), truth, {1, 100, 1000, 5000, 20000, 50000}, 1e8);
    auto f = mle_fit(Model::basic(), rec);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.theta_hat[0], truth[0], 1e-3 * truth[0]);
    EXPECT_NEAR(f.theta_hat[1], truth[1], 1e-3 * truth[1]);
    EXPECT_GE(f.log_likelihood, log_likelihood(Model::basic(), truth, rec));
}

TEST(mle_fit, perfect_data_sits_on_the_boundary) {
    const std::vector<LengthRecord> rec{{1, 100, 100}, {50, 100, 100}, {500, 100, 100}};
    for (const auto& model : {Model::basic(), Model::moments(2)}) {
        auto f = mle_fit(model, rec);
        EXPECT_NEAR(f.theta_hat[0], 0.0, 1e-12);
        EXPECT_NEAR(f.theta_hat[1], 0.0, 1e-12);
        EXPECT_FALSE(f.at_bound.empty());
    }
}

TEST(mle_fit, too_few_lengths) {
    const std::vector<LengthRecord> rec{{10, 100, 90}};
    try {
        mle_fit(Model::basic(), rec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonIdentifiable);
    }
}

TEST(mle_fit, nesting_chain) {
    std::mt19937_64 rng(12);
    const std::vector<std::int64_t> ns{1, 20, 80, 200, 500, 1000};
    for (int rep = 0; rep < 30; ++rep) {
        GenerativeModel gen = rep % 2 ? GenerativeModel::gaussian_step(0.02, 3e-4, 2e-4)
                                      : GenerativeModel::from_model(Model::basic(), {0.02, 3e-4});
        auto ds = simulate_counts(uniform_design(ns, 2000), gen, static_cast<std::uint64_t>(rep));
        const double lb = mle_fit(Model::basic(), ds).log_likelihood;
        const double lm2 = mle_fit(Model::moments(2), ds).log_likelihood;
        const double lm3 = mle_fit(Model::moments(3), ds).log_likelihood;
        const double lg = mle_fit(Model::general(ns), ds).log_likelihood;
        EXPECT_GE(lm2, lb - 1e-6);
        EXPECT_GE(lm3, lm2 - 1e-6);
        EXPECT_GE(lg, lm3 - 1e-6);
        const double ld = mle_fit(Model::drift(), ds).log_likelihood;
        EXPECT_GE(ld, lb - 1e-6);
        EXPECT_GE(lg, ld - 1e-6);
    }
}

TEST(mle_fit, spread_matches_anticipated_sigma) {
    const Params truth{0.02, 5e-4};
    const TimeModel time{1e-3, 1e-5, {}};
    auto opt = optimize_design(Model::basic(), truth, time, 2e4, 1);
    ExperimentDesign d;
    for (const auto& [n, w] : opt.weights_int) {
        d.lengths.push_back(n);
        d.trials.push_back(w);
    }
    std::int64_t total = 0;
    for (auto w : d.trials) total += w;
    ASSERT_GE(total, 1000000);
    auto lin = linearize(Model::basic(), truth, d.lengths);
    const double sigma = std::sqrt(optimal_linear_estimator(d, lin).covariance(1, 1));
    EXPECT_NEAR(sigma / opt.anticipated_sigma, 1.0, 0.01);

    const int reps = 200;
    int inside = 0;
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto ds = simulate_counts(d, GenerativeModel::from_model(Model::basic(), truth), 1000 + static_cast<std::uint64_t>(r));
        const double t1 = mle_fit(Model::basic(), ds).theta_hat[1];
        if (std::abs(t1 - truth[1]) <= 4 * sigma) ++inside;
        s += t1;
        s2 += t1 * t1;
    }
    EXPECT_GE(inside, 190);
    const double sd = std::sqrt((s2 - s * s / reps) / (reps - 1));
    EXPECT_NEAR(sd / sigma, 1.0, 0.15);
}

TEST(wls_fit, exact_recovery) {
    const Params truth{0.03, 2e-4};
    std::vector<WlsPoint> pts;
    for (std::int64_t n : {1, 50, 300, 1000, 3000})
        pts.push_back({n, success_probability(Model::basic(), truth, n), 0.01 + 1e-5 * static_cast<double>(n)});
    auto f = wls_fit(Model::basic(), pts);
    EXPECT_NEAR(f.theta_hat[0], truth[0], 1e-8);
    EXPECT_NEAR(f.theta_hat[1], truth[1], 1e-8);
    EXPECT_NEAR(f.log_likelihood, 0.0, 1e-12);
}

TEST(wls_fit, single_length_is_not_identifiable) {
    try {
        wls_fit(Model::basic(), {{10, 0.9, 0.01}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonIdentifiable);
    }
}

TEST(wls_fit, common_scaling_is_invariant) {
    std::vector<WlsPoint> pts{{1, 0.97, 0.01}, {100, 0.9, 0.01}, {400, 0.8, 0.01}, {1000, 0.62, 0.01}};
    auto a = wls_fit(Model::basic(), pts);
    for (auto& q : pts) q.standard_error = 0.37;
    auto b = wls_fit(Model::basic(), pts);
    // Convergence is judged by an absolute decrement, so agreement is to optimizer precision.
    EXPECT_NEAR(a.theta_hat[0], b.theta_hat[0], 1e-6 * a.theta_hat[0]);
    EXPECT_NEAR(a.theta_hat[1], b.theta_hat[1], 1e-6 * a.theta_hat[1]);
}

TEST(wls_fit_repeated, zero_spread_uses_smallest_error) {
    Dataset ds;
    ds.per_sequence = true;
    const std::vector<std::int64_t> c1{10, 10, 10}, c2{9, 7, 8}, c3{5, 7, 4};
    std::int64_t id = 0;
    for (auto c : c1) ds.sequences.push_back({1, id++, 10, c});
    for (auto c : c2) ds.sequences.push_back({100, id++, 10, c});
    for (auto c : c3) ds.sequences.push_back({400, id++, 10, c});
    std::vector<std::string> warnings;
    auto pts = repeated_points(ds, &warnings);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[0].standard_error, pts[1].standard_error);
    EXPECT_EQ(warnings.size(), 1u);
    auto f = wls_fit_repeated(ds);
    EXPECT_FALSE(f.warnings.empty());
}

TEST(bc_interval, symmetric_distribution_has_no_bias_correction) {
    std::vector<double> v;
    for (int k = -500; k <= 500; ++k) v.push_back(static_cast<double>(k));
    auto [ci, z0] = bc_interval(v, 0.0, 0.68);
    EXPECT_NEAR(z0, 0.0, 1e-15);
    EXPECT_NEAR(ci.lo, -ci.hi, 1e-9);
    // Plain percentile interval at 16% and 84%.
    EXPECT_NEAR(ci.lo, -500 + 1000 * 0.5 * std::erfc(0.99445788 / std::sqrt(2.0)), 1.0);
}

TEST(bc_interval, shifted_distribution) {
    std::vector<double> v;
    for (int k = 0; k < 1000; ++k) v.push_back(static_cast<double>(k));
    auto [ci, z0] = bc_interval(v, 250.0, 0.68);
    EXPECT_LT(z0, 0.0);
    EXPECT_LE(ci.lo, 250.0);
    EXPECT_LT(ci.hi, 500.0);
}

TEST(bootstrap_ci, deterministic_and_bracketing) {
    const Params truth{0.02, 3e-4};
    auto ds = simulate_counts(uniform_design({1, 100, 500, 1500, 3000}, 5000),
                              GenerativeModel::from_model(Model::basic(), truth), 3);
    auto f = mle_fit(Model::basic(), ds);
    BootstrapOptions opt;
    opt.replicas = 300;
    opt.seed = 77;
    auto a = bootstrap_ci(f, ds, opt);
    auto b = bootstrap_ci(f, ds, opt);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.ci[1].lo, b.ci[1].lo);
    EXPECT_EQ(a.samples.size() + a.failures, 300u);
    EXPECT_LE(a.ci[1].lo, f.theta_hat[1]);
    EXPECT_GE(a.ci[1].hi, f.theta_hat[1]);
    opt.replicas = 50;
    EXPECT_THROW(bootstrap_ci(f, ds, opt), Error);
    opt.replicas = 300;
    opt.mode = BootstrapMode::Nonparametric;
    EXPECT_THROW(bootstrap_ci(f, ds, opt), Error);
}

TEST(bootstrap_ci, nonparametric_repeated) {
    ExperimentDesign d = uniform_design({1, 200, 800, 2000}, 200);
    d.repeats = 10;
    auto ds = simulate_counts(d, GenerativeModel::gate_level(Channel::unitary_x(0.02), 0.01), 5);
    auto f = wls_fit_repeated(ds);
    BootstrapOptions opt;
    opt.replicas = 200;
    opt.mode = BootstrapMode::Nonparametric;
    auto r = bootstrap_ci(f, ds, opt);
    EXPECT_EQ(r.ci.size(), 2u);
    EXPECT_LT(r.ci[1].lo, r.ci[1].hi);
}

TEST(elr_test, nesting_rules) {
    EXPECT_TRUE(is_nested(Model::basic(), Model::moments(2)));
    EXPECT_TRUE(is_nested(Model::moments(2), Model::moments(3)));
    EXPECT_TRUE(is_nested(Model::moments(3), Model::general({1, 2})));
    EXPECT_TRUE(is_nested(Model::basic(), Model::drift()));
    EXPECT_FALSE(is_nested(Model::moments(3), Model::moments(2)));
    EXPECT_FALSE(is_nested(Model::moments(2), Model::basic()));
    EXPECT_FALSE(is_nested(Model::basic(), Model::basic(HilbertDim(4))));
    const std::vector<LengthRecord> rec{{1, 100, 99}, {10, 100, 95}, {50, 100, 80}};
    try {
        elr_test(Model::moments(2), Model::basic(), rec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotNested);
    }
    auto e = embed_params(Model::basic(), Params{0.01, 0.02}, Model::general({0, 1}));
    EXPECT_NEAR(e[0], 0.99, 1e-15);
    EXPECT_NEAR(e[1], success_probability(Model::basic(), Params{0.01, 0.02}, 1), 1e-15);
}

TEST(elr_test, deterministic_and_consistent) {
    auto ds = simulate_counts(uniform_design({1, 100, 400, 1000, 2500, 5000}, 3000),
                              GenerativeModel::gaussian_step(0.02, 2e-4, 1.5e-4), 4);
    ElrOptions opt;
    opt.replicas = 100;
    opt.seed = 3;
    auto a = elr_test(Model::basic(), Model::moments(2), ds, opt);
    auto b = elr_test(Model::basic(), Model::moments(2), ds, opt);
    EXPECT_EQ(a.bootstrap_ratios, b.bootstrap_ratios);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_GE(a.observed_ratio, -1e-6);
    EXPECT_GE(a.p_value, 0.0);
    EXPECT_LE(a.p_value, 1.0);
    for (double r : a.bootstrap_ratios) EXPECT_GE(r, -1e-6);
    // A general outer model is rebuilt on the dataset's lengths.
    auto g = elr_test(Model::basic(), Model::general({1}), ds, opt);
    EXPECT_EQ(g.outer_fit.model.n_set().size(), 6u);
    EXPECT_GE(g.observed_ratio, a.observed_ratio - 1e-6);
}
