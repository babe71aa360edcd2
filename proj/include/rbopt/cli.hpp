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

#ifndef RBOPT_CLI_HPP
#define RBOPT_CLI_HPP

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rbopt/bootstrap.hpp"
#include "rbopt/design.hpp"
#include "rbopt/elr.hpp"
#include "rbopt/fit.hpp"
#include "rbopt/io.hpp"
#include "rbopt/simulate.hpp"
#include "rbopt/variance.hpp"

namespace rbopt {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Bad flag values discovered after CLI11 parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

inline double number(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::logic_error&) {
    }
    throw UsageError("not a number: '" + s + "'");
}

inline std::vector<double> numbers(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split(s, ',')) out.push_back(number(tok));
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

inline Model model_arg(const std::string& text, int dim, const std::vector<std::int64_t>& lengths = {}) {
    try {
        return parse_model(text, dim, lengths);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

inline std::size_t target_index(const Model& model, const std::string& target) {
    const auto names = model.param_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == target) return i;
    throw UsageError("unknown target parameter '" + target + "' for model " + model.describe());
}

/// "basic:t0,t1", "moments:t0,t1,t2[,...]", "drift:t0,A,B,C",
/// "gaussian[:t0,mean,sd]", "gate:none|depolarizing:L|unitary:PHI[,spam=T0]".
inline GenerativeModel generative_arg(const std::string& text, int dim) {
    const auto parts = split(text, ':');
    const std::string head = parts.empty() ? "" : parts[0];
    const HilbertDim d(dim);
    try {
        if (head == "basic" || head == "moments" || head == "drift") {
            if (parts.size() != 2) throw UsageError("expected " + head + ":<params>");
            auto p = numbers(parts[1]);
            Model m = head == "basic"   ? Model::basic(d)
                      : head == "drift" ? Model::drift(d)
                                        : Model::moments(static_cast<int>(p.size()) - 1, d);
            if (p.size() != m.num_params()) throw UsageError("wrong parameter count for " + head);
            return GenerativeModel::from_model(m, p);
        }
        if (head == "gaussian") {
            if (parts.size() == 1) return GenerativeModel::gaussian_step(3e-2, 1e-4, 2.5e-5);
            auto p = numbers(parts.at(1));
            if (p.size() != 3) throw UsageError("expected gaussian:<theta0>,<mean>,<sd>");
            return GenerativeModel::gaussian_step(p[0], p[1], p[2]);
        }
        if (head == "gate") {
            if (dim != 2) throw UsageError("gate-level simulation is single-qubit only");
            if (parts.size() < 2) throw UsageError("expected gate:<channel>");
            std::string last = parts.back();
            double spam = 0.0;
            auto comma = last.find(",spam=");
            std::vector<std::string> p = parts;
            if (comma != std::string::npos) {
                spam = number(last.substr(comma + 6));
                p.back() = last.substr(0, comma);
            }
            if (p[1] == "none" && p.size() == 2) return GenerativeModel::gate_level(Channel::none(), spam);
            if (p.size() != 3) throw UsageError("expected gate:<channel>:<parameter>");
            const double v = number(p[2]);
            if (p[1] == "depolarizing") return GenerativeModel::gate_level(Channel::depolarizing(v), spam);
            if (p[1] == "unitary") return GenerativeModel::gate_level(Channel::unitary_x(v), spam);
            throw UsageError("unknown channel '" + p[1] + "'");
        }
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    throw UsageError("unknown generative model '" + text + "'");
}

inline void emit(const std::string& text, const std::string& out, std::ostream& os) {
    if (out.empty() || out == "-") os << text;
    else detail::write_text(out, text);
}

inline std::vector<ParamEstimate> estimates(const FitResult& fit) {
    std::vector<ParamEstimate> out;
    const auto names = fit.model.param_names();
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], fit.theta_hat[i], {}, {}, {}});
    return out;
}

/// Observed frequencies with binomial standard errors and the fitted curve.
inline std::vector<CurvePoint> decay_curve(const Dataset& ds, const std::vector<const FitResult*>& fits) {
    std::vector<CurvePoint> out;
    std::map<std::int64_t, double> seq_se;
    if (ds.per_sequence) {
        try {
            for (const auto& q : repeated_points(ds)) seq_se[q.n] = q.standard_error;
        } catch (const Error&) {
        }
    }
    for (const auto& r : ds.aggregate()) {
        if (r.trials == 0) continue;
        CurvePoint c;
        c.n = r.n;
        c.p_hat = static_cast<double>(r.successes) / static_cast<double>(r.trials);
        c.standard_error = seq_se.count(r.n) ? seq_se[r.n] : std::sqrt(c.p_hat * (1.0 - c.p_hat) / static_cast<double>(r.trials));
        for (const auto* f : fits) {
            if (f->model.kind() == ModelKind::General) {
                c.fitted[f->model.describe()] = f->theta_hat[f->model.general_index(r.n)];
            } else {
                c.fitted[f->model.describe()] = success_probability(f->model, f->theta_hat, r.n);
            }
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<std::int64_t> dataset_lengths(const Dataset& ds) {
    std::vector<std::int64_t> ns;
    for (const auto& r : ds.aggregate())
        if (r.trials > 0) ns.push_back(r.n);
    return ns;
}

inline Dataset load_dataset(const std::string& path) { return parse_dataset(detail::read_text(path)); }

}  // namespace cli

/// Entry point shared by the rbopt executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"rbopt: optimal design and analysis of fully randomized benchmarking experiments"};
    app.require_subcommand(1);
    int dim = 2;
    std::string out_path;

    // design
    auto* design = app.add_subcommand("design", "optimize sequence lengths and trial counts");
    std::string model_s = "basic", reference_s, target_s = "theta1";
    double total_time = 0.0, spam_time = 1e-3, step_time = 1e-5;
    std::optional<std::int64_t> n_max;
    std::int64_t round_multiple = 1, repeats = 1;
    std::size_t uniform_count = 0;
    std::optional<double> uniform_lo, uniform_hi;
    auto add_design_flags = [&](CLI::App* sc) {
        sc->add_option("--model", model_s, "basic | moments[:K] | drift | general:n1,n2,...");
        sc->add_option("--reference", reference_s, "comma-separated reference parameters")->required();
        sc->add_option("--target", target_s, "parameter whose variance is minimized");
        sc->add_option("--total-time", total_time, "total time budget in seconds")->required();
        sc->add_option("--spam-time", spam_time, "per-trial fixed time in seconds");
        sc->add_option("--step-time", step_time, "per-step time in seconds");
        sc->add_option("--n-max", n_max, "longest candidate sequence length");
        sc->add_option("--dim", dim, "Hilbert space dimension");
        sc->add_option("--out", out_path, "output file (default standard output)");
    };
    add_design_flags(design);
    design->add_option("--round-multiple", round_multiple, "round trial counts to this multiple");
    design->add_option("--repeats", repeats, "runs per random sequence");
    design->add_option("--uniform", uniform_count, "emit an evenly spaced equal-trial design with this many lengths");
    design->add_option("--uniform-min", uniform_lo, "shortest uniform length (default 1)");
    design->add_option("--uniform-max", uniform_hi, "longest uniform length (default 1/theta1)");

    // compare
    auto* compare = app.add_subcommand("compare", "anticipated sigma of a uniform design over the optimized one");
    add_design_flags(compare);
    std::size_t compare_count = 20;
    compare->add_option("--uniform-count", compare_count, "number of evenly spaced lengths");
    compare->add_option("--uniform-min", uniform_lo, "shortest uniform length (default 1)");
    compare->add_option("--uniform-max", uniform_hi, "longest uniform length (default 1/theta1)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "simulate benchmarking data for a design");
    std::string design_path, generative_s;
    std::uint64_t seed = 0;
    std::optional<std::int64_t> sim_repeats;
    simulate->add_option("--design", design_path, "design file")->required();
    simulate->add_option("--generative", generative_s, "generative model")->required();
    simulate->add_option("--seed", seed, "master seed");
    simulate->add_option("--repeats", sim_repeats, "runs per random sequence (trial counts rounded to a multiple)");
    simulate->add_option("--out", out_path, "output file (default standard output)");

    // fit, bootstrap, elr, variance
    std::string data_path, method = "mle", mode_s = "parametric", inner_s = "basic", outer_s = "general";
    std::size_t replicas = 2000, bins = 40;
    double level = 0.68;
    auto* fit = app.add_subcommand("fit", "fit a model to a dataset");
    auto* boot = app.add_subcommand("bootstrap", "bias-corrected bootstrap confidence intervals");
    auto* elr = app.add_subcommand("elr", "empirical likelihood-ratio test of nested models");
    auto* var = app.add_subcommand("variance", "variance of the mean success frequency");
    for (auto* sc : {fit, boot}) {
        sc->add_option("--data", data_path, "dataset file")->required();
        sc->add_option("--model", model_s, "model to fit");
        sc->add_option("--method", method, "mle | wls (wls needs per-sequence data)");
        sc->add_option("--dim", dim, "Hilbert space dimension");
        sc->add_option("--out", out_path, "output file (default standard output)");
    }
    boot->add_option("--b", replicas, "bootstrap replicas");
    boot->add_option("--seed", seed, "master seed");
    boot->add_option("--level", level, "confidence level");
    boot->add_option("--mode", mode_s, "parametric | nonparametric");
    boot->add_option("--bins", bins, "histogram bins");
    elr->add_option("--data", data_path, "dataset file")->required();
    elr->add_option("--inner", inner_s, "inner model");
    elr->add_option("--outer", outer_s, "outer model");
    elr->add_option("--b", replicas, "bootstrap replicas");
    elr->add_option("--seed", seed, "master seed");
    elr->add_option("--dim", dim, "Hilbert space dimension");
    elr->add_option("--out", out_path, "output file (default standard output)");
    std::optional<double> s_bar;
    std::optional<std::int64_t> var_repeats, var_trials;
    var->add_option("--data", data_path, "per-sequence dataset file");
    var->add_option("--s-bar", s_bar, "mean success probability (closed form without data)");
    var->add_option("--repeats", var_repeats, "runs per sequence (closed form)");
    var->add_option("--trials", var_trials, "total trials M (closed form)");
    var->add_option("--b", replicas, "bootstrap replicas");
    var->add_option("--seed", seed, "master seed");
    var->add_option("--dim", dim, "Hilbert space dimension");
    var->add_option("--out", out_path, "output file (default standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*design || *compare) {
            const Model model = cli::model_arg(model_s, dim);
            const Params reference = cli::numbers(reference_s);
            if (reference.size() != model.num_params()) throw UsageError("reference has the wrong number of parameters");
            try {
                validate_params(model, reference);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            const std::size_t target = cli::target_index(model, target_s);
            TimeModel time{spam_time, step_time, {}};
            try {
                time.validate();
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (!(total_time > 0.0)) throw UsageError("--total-time must be positive");
            if (round_multiple < 1 || repeats < 1) throw UsageError("--round-multiple and --repeats must be positive");
            DesignOptions opt;
            opt.n_max = n_max;
            opt.round_multiple = std::lcm(round_multiple, repeats);

            if (*compare) {
                UniformSpec spec{compare_count, uniform_lo, uniform_hi};
                auto cmp = compare_designs(model, reference, time, total_time, target, spec, opt);
                ResultFile rf;
                rf.command = "compare";
                rf.model = model_descriptor(model);
                rf.values = {{"uniform_sigma", cmp.uniform_sigma},
                             {"optimized_sigma", cmp.optimized_sigma},
                             {"ratio", cmp.ratio},
                             {"uniform_trials_per_length", cmp.uniform_trials_per_length}};
                rf.warnings = cmp.optimized.warnings;
                cli::emit(serialize(rf), out_path, out);
                if (!out_path.empty()) out << "ratio " << cmp.ratio << "\n";
                return kExitOk;
            }

            DesignFile df;
            df.model = model_descriptor(model);
            df.dim = dim;
            df.reference = reference;
            df.target = target_s;
            df.spam_time_s = spam_time;
            df.step_time_s = step_time;
            df.total_time_s = total_time;
            df.repeats = repeats;
            if (uniform_count > 0) {
                auto ns = uniform_lengths(uniform_count, uniform_lo.value_or(1.0), uniform_hi.value_or(1.0 / reference.at(1)));
                double per = 0.0;
                for (auto n : ns) per += time.trial_time(n);
                const auto k = static_cast<std::int64_t>(std::floor(total_time / per / static_cast<double>(opt.round_multiple)));
                if (k < 1) throw Error(Errc::DesignInfeasible, "time budget too small for one trial block per length");
                auto lin = linearize(model, reference, ns);
                std::vector<double> w(lin.lengths.size(), static_cast<double>(k * opt.round_multiple));
                auto est = optimal_linear_estimator(lin, std::span<const double>(w));
                df.candidates = static_cast<std::int64_t>(ns.size());
                df.lengths = ns;
                df.trials.assign(ns.size(), k * opt.round_multiple);
                df.weights_real.assign(ns.size(), total_time / per);
                df.anticipated_sigma = std::sqrt(est.covariance(target, target));
            } else {
                auto d = optimize_design(model, reference, time, total_time, target, opt);
                df.candidates = static_cast<std::int64_t>(d.candidates);
                for (const auto& [n, w] : d.weights_real) {
                    df.lengths.push_back(n);
                    df.trials.push_back(d.weights_int.at(n));
                    df.weights_real.push_back(w);
                    df.coefficients.push_back(d.coefficients.at(n));
                }
                df.anticipated_sigma = d.anticipated_sigma;
                df.warnings = d.warnings;
            }
            cli::emit(serialize(df), out_path, out);
            if (!out_path.empty()) out << "anticipated sigma(" << target_s << ") " << df.anticipated_sigma << "\n";
            return kExitOk;
        }

        if (*simulate) {
            DesignFile df = parse_design(detail::read_text(design_path));
            const GenerativeModel gen = cli::generative_arg(generative_s, df.dim);
            ExperimentDesign d = df.design();
            if (sim_repeats) {
                if (*sim_repeats < 1) throw UsageError("--repeats must be positive");
                if (*sim_repeats > 1 && gen.kind != GenerativeModel::Kind::GateLevel) {
                    throw Error(Errc::UnsupportedGenerative, "repeated sequences require a gate-level generative model");
                }
                d.repeats = *sim_repeats;
                for (auto& w : d.trials) w = std::max<std::int64_t>(1, std::llround(static_cast<double>(w) / d.repeats)) * d.repeats;
            }
            auto ds = simulate_counts(d, gen, seed);
            cli::emit(serialize(ds), out_path, out);
            return kExitOk;
        }

        if (*fit || *boot) {
            const Dataset ds = cli::load_dataset(data_path);
            const Model model = cli::model_arg(model_s, dim, cli::dataset_lengths(ds));
            if (method != "mle" && method != "wls") throw UsageError("--method must be mle or wls");
            FitResult f = method == "wls" ? wls_fit_repeated(ds, model) : mle_fit(model, ds);
            ResultFile rf;
            rf.command = *fit ? "fit" : "bootstrap";
            rf.model = model_descriptor(model);
            rf.log_likelihood = f.log_likelihood;
            rf.converged = f.converged;
            rf.params = cli::estimates(f);
            rf.curve = cli::decay_curve(ds, {&f});
            rf.warnings = f.warnings;
            if (*boot) {
                BootstrapOptions bo;
                bo.replicas = replicas;
                bo.seed = seed;
                bo.level = level;
                if (mode_s == "parametric") bo.mode = BootstrapMode::Parametric;
                else if (mode_s == "nonparametric") bo.mode = BootstrapMode::Nonparametric;
                else throw UsageError("--mode must be parametric or nonparametric");
                if (bo.mode == BootstrapMode::Nonparametric && method != "wls") {
                    throw UsageError("nonparametric bootstrap refits by least squares; pass --method wls");
                }
                auto br = bootstrap_ci(f, ds, bo);
                rf.level = level;
                for (std::size_t i = 0; i < rf.params.size(); ++i) {
                    rf.params[i].ci_lo = br.ci[i].lo;
                    rf.params[i].ci_hi = br.ci[i].hi;
                    rf.params[i].z0 = br.z0[i];
                    std::vector<double> v;
                    for (const auto& s : br.samples) v.push_back(s[i]);
                    rf.histograms.push_back(make_histogram(rf.params[i].name, v, bins));
                }
                rf.warnings.insert(rf.warnings.end(), br.warnings.begin(), br.warnings.end());
            }
            cli::emit(serialize(rf), out_path, out);
            if (!out_path.empty()) {
                for (const auto& p : rf.params) {
                    out << p.name << " " << p.value;
                    if (p.ci_lo) out << " [" << *p.ci_lo << ", " << *p.ci_hi << "]";
                    out << "\n";
                }
            }
            return kExitOk;
        }

        if (*elr) {
            const Dataset ds = cli::load_dataset(data_path);
            const auto ns = cli::dataset_lengths(ds);
            const Model inner = cli::model_arg(inner_s, dim, ns), outer = cli::model_arg(outer_s, dim, ns);
            ElrOptions eo;
            eo.replicas = replicas;
            eo.seed = seed;
            auto r = elr_test(inner, outer, ds, eo);
            ResultFile rf;
            rf.command = "elr";
            rf.model = model_descriptor(inner) + " in " + model_descriptor(r.outer_fit.model);
            rf.params = cli::estimates(r.inner_fit);
            rf.log_likelihood = r.inner_fit.log_likelihood;
            rf.elr_observed_ratio = r.observed_ratio;
            rf.elr_p_value = r.p_value;
            rf.values = {{"outer_log_likelihood", r.outer_fit.log_likelihood}};
            rf.histograms.push_back(make_histogram("ratio", r.bootstrap_ratios, bins));
            rf.curve = cli::decay_curve(ds, {&r.inner_fit, &r.outer_fit});
            rf.warnings = r.warnings;
            cli::emit(serialize(rf), out_path, out);
            if (!out_path.empty()) out << "observed ratio " << r.observed_ratio << " p-value " << r.p_value << "\n";
            return kExitOk;
        }

        if (*var) {
            ResultFile rf;
            rf.command = "variance";
            rf.model = "unitary-mixture";
            if (!data_path.empty()) {
                const Dataset ds = cli::load_dataset(data_path);
                for (const auto& rep : variance_of_mean(ds, dim, replicas, seed)) {
                    const std::string k = "n" + std::to_string(rep.n) + ".";
                    rf.values[k + "s_hat"] = rep.s_hat;
                    rf.values[k + "s_bar"] = rep.s_bar;
                    rf.values[k + "empirical_var"] = rep.empirical_var;
                    rf.values[k + "predicted_binomial"] = rep.predicted_binomial;
                    rf.values[k + "predicted_excess"] = rep.predicted_excess;
                    if (std::isfinite(rep.predicted_unitary)) rf.values[k + "predicted_unitary"] = rep.predicted_unitary;
                }
            } else {
                if (!s_bar || !var_repeats || !var_trials) throw UsageError("pass --data, or --s-bar with --repeats and --trials");
                auto u = unitary_model_variance(*s_bar, dim, *var_repeats, *var_trials);
                rf.values = {{"variance", u.variance}, {"lambda", u.lambda}, {"width95", u.width95}};
            }
            cli::emit(serialize(rf), out_path, out);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rbopt

#endif  // RBOPT_CLI_HPP
