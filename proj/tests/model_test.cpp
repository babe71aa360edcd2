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
#include "rbopt/model.hpp"

using namespace rbopt;

namespace {

// Brute-force average of the basic model over a discrete step-error distribution.
double mixture_average(const std::vector<double>& eps, const std::vector<double>& mass, double theta0, std::int64_t n,
                       HilbertDim dim) {
    double acc = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) acc += mass[j] * success_probability(Model::basic(dim), Params{theta0, eps[j]}, n);
    return acc;
}

std::vector<double> central_moments(const std::vector<double>& eps, const std::vector<double>& mass, int k_max) {
    double mean = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) mean += mass[j] * eps[j];
    std::vector<double> out{mean};
    for (int k = 2; k <= k_max; ++k) {
        double m = 0.0;
        for (std::size_t j = 0; j < eps.size(); ++j) m += mass[j] * std::pow(eps[j] - mean, k);
        out.push_back(m);
    }
    return out;
}

Params random_interior(const Model& model, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 0.2);
    std::uniform_real_distribution<double> s(-1.0, 1.0);
    Params p(model.num_params());
    switch (model.kind()) {
        case ModelKind::General:
            for (auto& v : p) v = 0.2 + 0.6 * std::abs(s(rng));
            break;
        case ModelKind::Drift:
            p = {u(rng), u(rng) * 0.1, 1e-3 * s(rng), 1e-5 * s(rng)};
            break;
        default:
            p[0] = u(rng);
            p[1] = u(rng) * 0.2;
            for (std::size_t k = 2; k < p.size(); ++k) p[k] = std::pow(0.02, static_cast<double>(k)) * s(rng);
    }
    return p;
}

}  // namespace

TEST(hilbert_dim, alpha) {
    EXPECT_EQ(HilbertDim(2).alpha(), 2.0);
    EXPECT_EQ(HilbertDim(4).alpha(), 4.0 / 3.0);
    EXPECT_THROW(HilbertDim(1), Error);
}

TEST(model, constructors_validate) {
    EXPECT_THROW(Model::moments(1), Error);
    EXPECT_THROW(Model::general({}), Error);
    EXPECT_THROW(Model::general({2, 1}), Error);
    EXPECT_EQ(Model::moments(3).num_params(), 4u);
    EXPECT_EQ(Model::drift().param_names(), (std::vector<std::string>{"theta0", "A", "B", "C"}));
    try {
        Model::general({1, 2}).general_index(3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::LengthNotInModel);
    }
}

TEST(success_probability, examples) {
    const Model basic = Model::basic();
    EXPECT_DOUBLE_EQ(success_probability(basic, Params{0, 0}, 10), 1.0);
    EXPECT_DOUBLE_EQ(success_probability(basic, Params{0.03, 2e-5}, 0), 0.97);
    EXPECT_DOUBLE_EQ(success_probability(basic, Params{0, 0.5}, 5), 0.5);
    EXPECT_NEAR(success_probability(Model::moments(2), Params{0, 0.1, 0.0025}, 2), 0.825, 1e-15);
}

TEST(success_probability, rejects_invalid) {
    EXPECT_THROW(success_probability(Model::basic(), Params{-0.1, 0}, 1), Error);
    EXPECT_THROW(success_probability(Model::basic(), Params{0, 0}, -1), Error);
    EXPECT_THROW(success_probability(Model::basic(), Params{0, 0, 0}, 1), Error);
    // A large second moment drives P below zero.
    try {
        success_probability(Model::moments(2), Params{0, 0.1, -0.5}, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ProbabilityOutOfRange);
    }
}

TEST(success_probability, moments_reduce_to_basic) {
    const Params b{0.02, 3e-4};
    for (std::int64_t n = 0; n <= 10000; n += 37) {
        EXPECT_NEAR(success_probability(Model::moments(3), Params{0.02, 3e-4, 0, 0}, n),
                    success_probability(Model::basic(), b, n), 1e-14);
        EXPECT_NEAR(success_probability(Model::drift(), Params{0.02, 3e-4, 0, 0}, n),
                    success_probability(Model::basic(), b, n), 1e-14);
    }
}

TEST(success_probability, moments_match_mixture_average) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t points = 2 + trial % 2;
        std::vector<double> eps(points), mass(points);
        double total = 0.0;
        for (std::size_t j = 0; j < points; ++j) {
            eps[j] = u(rng);
            mass[j] = 0.1 + u(rng);
            total += mass[j];
        }
        for (auto& m : mass) m /= total;
        for (int dim : {2, 3}) {
            const int k_max = 3;
            auto cm = central_moments(eps, mass, k_max);
            Params p{0.05};
            p.insert(p.end(), cm.begin(), cm.end());
            for (std::int64_t n = 0; n <= k_max; ++n) {
                EXPECT_NEAR(success_probability(Model::moments(k_max, HilbertDim(dim)), p, n),
                            mixture_average(eps, mass, 0.05, n, HilbertDim(dim)), 1e-13);
            }
        }
    }
}

TEST(gradient, examples) {
    auto g = gradient(Model::basic(), Params{0, 0}, 3);
    EXPECT_DOUBLE_EQ(g[0], -1.0);
    EXPECT_DOUBLE_EQ(g[1], -3.0);
    g = gradient(Model::general({1, 2}), Params{0.3, 0.7}, 2);
    EXPECT_EQ(g, (std::vector<double>{0, 1}));
    g = gradient(Model::moments(2), Params{0, 0.1, 0}, 2);
    EXPECT_NEAR(g[2], 2.0, 1e-15);
}

TEST(gradient, matches_finite_differences) {
    std::mt19937_64 rng(17);
    const std::vector<Model> models{Model::basic(), Model::moments(2), Model::moments(4), Model::drift(),
                                    Model::general({1, 5, 9}), Model::basic(HilbertDim(4))};
    for (const auto& model : models) {
        for (int trial = 0; trial < 100; ++trial) {
            const Params p = random_interior(model, rng);
            const std::int64_t n = model.kind() == ModelKind::General ? 5 : 1 + static_cast<std::int64_t>(rng() % 40);
            const auto g = gradient(model, p, n);
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double h = 1e-6 * std::max(std::abs(p[i]), 1e-3);
                Params up = p, dn = p;
                up[i] += h;
                dn[i] -= h;
                const double fd = (evaluate_unchecked(model, up, n, false).probability -
                                   evaluate_unchecked(model, dn, n, false).probability) /
                                  (2 * h);
                EXPECT_NEAR(g[i], fd, 1e-5 * std::max(std::abs(fd), 1e-6)) << model.describe() << " param " << i;
            }
        }
    }
}

TEST(gradient, drift_with_zero_factor) {
    // A + B = 1/alpha makes the first factor vanish; the derivative keeps the other factors.
    const Params p{0.0, 0.49, 0.01, 0.0};
    const double prod_rest = (1 - 2 * (0.49 + 0.02)) * (1 - 2 * (0.49 + 0.03));
    auto g = gradient(Model::drift(), p, 3);
    // dP/dA = (1/alpha)(1 - alpha theta0) * (-alpha) * prod_rest.
    EXPECT_NEAR(g[1], -prod_rest, 1e-15);
    EXPECT_TRUE(drift_unphysical(Model::drift(), Params{0, 0.6, 0, 0}, 2));
    EXPECT_FALSE(drift_unphysical(Model::drift(), Params{0, 0.1, 0, 0}, 2));
}

TEST(check_params, warns_on_negative_second_moment) {
    auto c = check_params(Model::moments(2), Params{0, 0.1, -1e-4});
    EXPECT_TRUE(c.errors.empty());
    EXPECT_FALSE(c.warnings.empty());
    EXPECT_FALSE(check_params(Model::general({1}), Params{1.5}).errors.empty());
}

TEST(compose_depolarizing, examples) {
    EXPECT_EQ(compose_depolarizing(std::vector<double>{0.0}, HilbertDim(2)), 1.0);
    EXPECT_DOUBLE_EQ(compose_depolarizing(std::vector<double>{0.25, 0.25}, HilbertDim(2)), 0.625);
    EXPECT_EQ(compose_depolarizing(std::vector<double>{}, HilbertDim(4)), 1.0);
    EXPECT_DOUBLE_EQ(compose_depolarizing(std::vector<double>{0.1}, HilbertDim(3)), 0.9);
    EXPECT_THROW(compose_depolarizing(std::vector<double>{1.5}, HilbertDim(2)), Error);
}

TEST(moments_from_general, basic_has_point_distribution) {
    std::vector<double> p;
    for (int n = 0; n <= 3; ++n) p.push_back(success_probability(Model::basic(), Params{0.01, 0.1}, n));
    auto inv = moments_from_general(p, HilbertDim(2));
    EXPECT_NEAR(inv.theta0, 0.01, 1e-12);
    EXPECT_NEAR(inv.params[1], 0.1, 1e-12);
    EXPECT_NEAR(inv.params[2], 0.0, 1e-10);
    EXPECT_NEAR(inv.params[3], 0.0, 1e-10);
}

TEST(moments_from_general, drift_gives_negative_second_moment) {
    const double b = 1e-4, theta1 = 0.01;
    std::vector<double> p;
    for (int n = 0; n <= 2; ++n) p.push_back(success_probability(Model::drift(), Params{0, theta1 - b, b, 0}, n));
    auto inv = moments_from_general(p, HilbertDim(2));
    const double expect = -b * (1 - 2 * theta1) / 2;
    EXPECT_LT(inv.params[2], 0.0);
    EXPECT_NEAR(inv.params[2], expect, 1e-6 * std::abs(expect));
}

TEST(moments_from_general, round_trip) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.55, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(5);
        for (auto& v : p) v = u(rng);
        auto inv = moments_from_general(p, HilbertDim(2));
        const Model m = Model::moments(4);
        for (int n = 0; n <= 4; ++n) EXPECT_NEAR(evaluate_unchecked(m, inv.params, n, false).probability, p[n], 1e-10);
    }
}

TEST(moments_from_general, completely_depolarized) {
    try {
        moments_from_general(std::vector<double>{0.5, 0.5}, HilbertDim(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::CompletelyDepolarized);
    }
}

TEST(moment_conversion, round_trip) {
    const std::vector<double> central{0.1, 0.0025, -1e-5, 3e-7};
    auto raw = central_to_raw_moments(central);
    EXPECT_NEAR(raw[1], 0.0125, 1e-15);
    auto back = raw_to_central_moments(raw);
    for (std::size_t k = 0; k < central.size(); ++k) EXPECT_NEAR(back[k], central[k], 1e-15);
}
