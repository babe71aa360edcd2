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
#include "rbopt/io.hpp"

using namespace rbopt;

namespace {

class Gen {
   public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double real() {
        std::uniform_real_distribution<double> mant(-1.0, 1.0);
        std::uniform_int_distribution<int> expo(-300, 300);
        switch (rng_() % 4) {
            case 0: return mant(rng_);
            case 1: return std::ldexp(mant(rng_), expo(rng_) / 4);
            case 2: return std::ldexp(mant(rng_), expo(rng_));
            default: return static_cast<double>(static_cast<std::int64_t>(rng_() % 2001) - 1000);
        }
    }
    std::int64_t integer(std::int64_t hi) { return static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi + 1)); }
    std::size_t count(std::size_t hi) { return static_cast<std::size_t>(rng_() % (hi + 1)); }
    bool coin() { return rng_() % 2 == 0; }

    std::string text(bool json_safe) {
        static const std::string plain = "abcxyzABC0123456789:,.=-_";
        static const std::string extra = "\"\\/{}[] \t\xc3\xa9";
        const std::string alphabet = json_safe ? plain + extra : plain;
        std::string s;
        const std::size_t len = count(12);
        for (std::size_t k = 0; k < len; ++k) s += alphabet[rng_() % alphabet.size()];
        // Keep multi-byte sequences intact.
        if (json_safe) {
            std::string fixed;
            for (char c : s) {
                if (c == '\xc3') fixed += "\xc3\xa9";
                else if (c != '\xa9') fixed += c;
            }
            return fixed;
        }
        return s;
    }

    template <class F>
    auto list(std::size_t hi, F f) {
        std::vector<decltype(f())> out(count(hi));
        for (auto& v : out) v = f();
        return out;
    }

    std::optional<double> maybe() { return coin() ? std::optional<double>(real()) : std::nullopt; }

   private:
    std::mt19937_64 rng_;
};

DesignFile random_design(Gen& g) {
    DesignFile f;
    f.model = g.text(true);
    f.dim = 2 + static_cast<int>(g.integer(6));
    f.reference = g.list(5, [&] { return g.real(); });
    f.target = g.text(true);
    f.spam_time_s = g.real();
    f.step_time_s = g.real();
    f.total_time_s = g.real();
    f.repeats = 1 + g.integer(100);
    f.candidates = g.integer(1000000);
    const std::size_t m = g.count(20);
    for (std::size_t j = 0; j < m; ++j) {
        f.lengths.push_back(g.integer(10000000));
        f.trials.push_back(g.integer(1000000000));
    }
    f.weights_real = g.list(20, [&] { return g.real(); });
    f.coefficients = g.list(20, [&] { return g.real(); });
    f.anticipated_sigma = g.real();
    f.warnings = g.list(3, [&] { return g.text(true); });
    return f;
}

Dataset random_dataset(Gen& g) {
    Dataset ds;
    ds.per_sequence = g.coin();
    ds.seed = static_cast<std::uint64_t>(g.integer(1000000)) * 1000003ULL + (g.coin() ? 0xFFFFFFFF00000000ULL : 0);
    ds.generative = g.text(false);
    const std::size_t m = g.count(30);
    for (std::size_t j = 0; j < m; ++j) {
        if (ds.per_sequence) {
            SequenceRecord r;
            r.n = g.integer(100000);
            r.sequence_id = g.integer(1000);
            r.repeats = 1 + g.integer(200);
            r.successes = g.integer(r.repeats);
            if (g.coin()) r.s = std::abs(g.real());
            ds.sequences.push_back(r);
        } else {
            LengthRecord r;
            r.n = g.integer(10000000);
            r.trials = g.integer(2000000000);
            r.successes = g.integer(r.trials);
            ds.lengths.push_back(r);
        }
    }
    return ds;
}

ResultFile random_result(Gen& g) {
    ResultFile f;
    f.command = g.text(true);
    f.model = g.text(true);
    f.log_likelihood = g.maybe();
    if (g.coin()) f.converged = g.coin();
    f.level = g.maybe();
    f.params = g.list(5, [&] { return ParamEstimate{g.text(true), g.real(), g.maybe(), g.maybe(), g.maybe()}; });
    f.histograms = g.list(3, [&] {
        return Histogram{g.text(true), g.list(8, [&] { return g.real(); }), g.list(8, [&] { return g.integer(100000); })};
    });
    f.elr_observed_ratio = g.maybe();
    f.elr_p_value = g.maybe();
    f.curve = g.list(10, [&] {
        CurvePoint c;
        c.n = g.integer(100000);
        c.p_hat = g.real();
        c.standard_error = g.real();
        for (std::size_t k = g.count(3); k > 0; --k) c.fitted[g.text(true)] = g.real();
        return c;
    });
    for (std::size_t k = g.count(5); k > 0; --k) f.values[g.text(true)] = g.real();
    f.warnings = g.list(3, [&] { return g.text(true); });
    return f;
}

template <class F>
Errc code_of(F f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::InvalidArgument;
}

}  // namespace

TEST(design_file, round_trip) {
    Gen g(1);
    for (int k = 0; k < 1000; ++k) {
        const auto f = random_design(g);
        const auto text = serialize(f);
        EXPECT_EQ(parse_design(text), f) << text;
        EXPECT_EQ(serialize(parse_design(text)), text);
    }
}

TEST(dataset_file, round_trip) {
    Gen g(2);
    for (int k = 0; k < 1000; ++k) {
        const auto ds = random_dataset(g);
        const auto text = serialize(ds);
        EXPECT_EQ(parse_dataset(text), ds) << text;
        EXPECT_EQ(serialize(parse_dataset(text)), text);
    }
}

TEST(result_file, round_trip) {
    Gen g(3);
    for (int k = 0; k < 1000; ++k) {
        const auto f = random_result(g);
        const auto text = serialize(f);
        EXPECT_EQ(parse_result(text), f) << text;
        EXPECT_EQ(serialize(parse_result(text)), text);
    }
}

TEST(design_file, schema_errors) {
    DesignFile f;
    f.reference = {0.01, 1e-4};
    auto text = serialize(f);
    EXPECT_EQ(code_of([&] { parse_design("{"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_design("[]"); }), Errc::Schema);
    auto j = nlohmann::ordered_json::parse(text);
    j["schema"] = "rbopt.design/2";
    EXPECT_EQ(code_of([&] { parse_design(j.dump()); }), Errc::Schema);
    j = nlohmann::ordered_json::parse(text);
    j.erase("trials");
    EXPECT_EQ(code_of([&] { parse_design(j.dump()); }), Errc::Schema);
    j = nlohmann::ordered_json::parse(text);
    j["dim"] = "two";
    EXPECT_EQ(code_of([&] { parse_design(j.dump()); }), Errc::Schema);
    j = nlohmann::ordered_json::parse(text);
    j["lengths"] = {1, 2};
    EXPECT_EQ(code_of([&] { parse_design(j.dump()); }), Errc::Schema);
    f.anticipated_sigma = std::numeric_limits<double>::infinity();
    EXPECT_EQ(code_of([&] { serialize(f); }), Errc::Schema);
}

TEST(result_file, rejects_non_finite) {
    ResultFile f;
    f.values["x"] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(code_of([&] { serialize(f); }), Errc::Schema);
}

TEST(dataset_file, schema_errors) {
    const std::string head = "# rbopt.dataset/1\n# format: per-length\n# seed: 1\n# generative: x\n";
    EXPECT_NO_THROW(parse_dataset(head + "n,trials,successes\n5,10,3\n"));
    EXPECT_EQ(code_of([&] { parse_dataset("n,trials,successes\n5,10,3\n"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset(head); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset(head + "n,k\n"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset(head + "n,trials,successes\n5,10,11\n"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset(head + "n,trials,successes\n5,10\n"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset(head + "n,trials,successes\n5,1x,1\n"); }), Errc::Schema);
    EXPECT_EQ(code_of([&] { parse_dataset("# rbopt.dataset/1\n# seed: -3\nn,trials,successes\n"); }), Errc::Schema);
    // Per-sequence files may omit the probability column.
    auto ds = parse_dataset("# rbopt.dataset/1\n#\nn,sequence_id,repeats,successes\n3,0,4,2\n");
    ASSERT_TRUE(ds.per_sequence);
    EXPECT_TRUE(std::isnan(ds.sequences[0].s));
}

TEST(parse_model, descriptors) {
    for (const std::string s : {"basic", "moments:2", "moments:4", "drift", "general:1,5,20"})
        EXPECT_EQ(model_descriptor(parse_model(s)), s);
    EXPECT_EQ(parse_model("moments").k_max(), 2);
    EXPECT_EQ(parse_model("general", 2, {3, 4}).n_set(), (std::vector<std::int64_t>{3, 4}));
    EXPECT_EQ(parse_model("basic", 4).dim().value(), 4);
    EXPECT_THROW(parse_model("general"), Error);
    EXPECT_THROW(parse_model("moments:x"), Error);
    EXPECT_THROW(parse_model("basic:1"), Error);
    EXPECT_THROW(parse_model("quadratic"), Error);
}

TEST(make_histogram, counts_everything) {
    std::vector<double> v{0.0, 0.1, 0.5, 0.99, 1.0};
    auto h = make_histogram("x", v, 4);
    EXPECT_EQ(h.edges.size(), 5u);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, 5);
    EXPECT_EQ(h.counts[3], 2);
    auto flat = make_histogram("y", {2.0, 2.0}, 3);
    EXPECT_EQ(flat.counts[0], 2);
}
