#pragma once

// The proxytd command line. run_cli is kept separate from main so tests can
// drive it with captured streams.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxytd/proxytd.hpp"

namespace proxytd::cli {

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

struct usage_error : error {
    using error::error;
};

namespace detail {

inline std::pair<double, double> parse_clip(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw usage_error("--clip expects lo,hi");
    auto bound = [&](std::string s) {
        s = proxytd::detail::trim(s);
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw usage_error("bad --clip bound '" + s + "'");
            return v;
        } catch (const std::logic_error&) {
            throw usage_error("bad --clip bound '" + s + "'");
        }
    };
    const double lo = bound(text.substr(0, comma)), hi = bound(text.substr(comma + 1));
    if (!(lo <= hi)) throw usage_error("--clip needs lo <= hi");
    return {lo, hi};
}

inline std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

struct GenerateArgs {
    std::string model;
    int k = 2;
    std::optional<std::size_t> m, c;
    std::size_t n = 0;
    std::string proto;
    std::optional<std::string> clip;
    std::optional<Seed> seed;
    std::string truth = "standard";
    std::string out;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (!a.seed) throw usage_error("generate needs --seed");
    NoiseModelSpec spec;
    spec.kind = parse_noise_kind(a.model);
    const bool ranking = spec.domain() == Domain::ranking;
    if (ranking && a.m) throw usage_error("ranking models take --c, not --m");
    if (!ranking && a.c) throw usage_error("--c only applies to ranking models");
    if (ranking ? !a.c : !a.m) throw usage_error(ranking ? "ranking models need --c" : "this model needs --m");
    spec.width = ranking ? *a.c : *a.m;
    spec.k = a.k;
    if (spec.kind != NoiseKind::ier && a.k != 2) throw usage_error("--k only applies to the ier model");
    spec.proto = parse_proto(a.proto);
    if (a.clip) {
        std::tie(spec.proto.lo, spec.proto.hi) = detail::parse_clip(*a.clip);
    } else if (spec.kind == NoiseKind::ier || spec.kind == NoiseKind::icn) {
        spec.proto.lo = std::max(spec.proto.lo, 0.0);
        spec.proto.hi = std::min(spec.proto.hi, 1.0);
    } else if (spec.kind == NoiseKind::mallows) {
        spec.proto.lo = std::max(spec.proto.lo, 0.05);
        spec.proto.hi = std::min(spec.proto.hi, 3.0);
    }
    if (a.truth == "standard") spec.truth = TruthPolicy::standard;
    else if (a.truth == "random") spec.truth = TruthPolicy::random;
    else throw usage_error("--truth must be standard or random");
    if (a.n < 2) throw usage_error("--n must be at least 2");

    const Instance inst = generate_instance(spec, a.n, *a.seed);
    save_instance(inst, a.out,
                  {{"generator", to_json(spec).dump()}, {"n", std::to_string(a.n)}, {"seed", std::to_string(*a.seed)}});
    double mean_fault = 0.0;
    for (double f : *inst.faults) mean_fault += f;
    mean_fault /= static_cast<double>(inst.workers());
    out << "wrote " << a.out << ": " << to_string(inst.domain()) << " instance, n=" << inst.workers()
        << (ranking ? " c=" : " m=") << inst.width() << ", mean sampled fault " << detail::fmt(mean_fault) << "\n";
    return ok;
}

struct EstimateArgs {
    std::string instance;
    std::string estimator;
    std::string u = "0";
    int iterations = 8;
    std::optional<std::string> rule;
    std::optional<Seed> seed;
    double eps = kDefaultClampEps;
    std::string out;
};

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    const Estimator est = parse_estimator(a.estimator);
    const UParam up = parse_u(a.u);
    const Instance inst = load_instance(a.instance);
    const Rule rule = a.rule ? parse_rule(*a.rule) : default_rule(inst.domain());
    if (!rule_fits(rule, inst.domain()))
        throw config_error("rule '" + to_string(rule) + "' does not fit the " + to_string(inst.domain()) + " domain");
    const double u = up.resolve(inst.workers());
    const bool stochastic = est == Estimator::d_efl || est == Estimator::id_td || (est == Estimator::p_efl && u != 0.0);
    if (stochastic && !a.seed) throw usage_error("estimator '" + a.estimator + "' needs --seed");
    const Seed seed = a.seed.value_or(0);

    FaultEstimate f;
    switch (est) {
        case Estimator::d_efl: f = d_efl(inst, rule, seed); break;
        case Estimator::p_efl: f = p_efl(inst, u, rule, seed); break;
        case Estimator::ip_efl:
            if (inst.domain() == Domain::continuous) throw config_error("ip-efl needs a categorical or ranking instance");
            f = ip_efl(inst, a.iterations, a.eps);
            break;
        case Estimator::id_td: {
            MethodSpec spec{Method::id_td, up, a.iterations, rule, seed, a.eps};
            if (!method_fits(spec.method, inst.domain()))
                throw config_error("id-td needs a categorical or ranking instance");
            f = *run_method(inst, spec).faults;
            break;
        }
        case Estimator::oracle:
            if (!inst.faults) throw oracle_unavailable_error("instance carries no true faults");
            f = FaultEstimate{*inst.faults, Estimator::oracle, std::nullopt, std::nullopt, std::nullopt, 0};
            break;
    }

    std::optional<std::vector<double>> empirical;
    if (inst.has_truth()) empirical = empirical_faults(inst);
    auto file = detail::open_out(a.out);
    using proxytd::detail::format_double;
    file << "# proxytd-faults v1\n# estimator=" << to_string(est) << "\n# u=" << up.text() << "\n# T=" << a.iterations
         << "\n# rule=" << to_string(rule) << "\n";
    if (a.seed) file << "# seed=" << *a.seed << "\n";
    if (f.mu_hat) file << "# mu_hat=" << format_double(*f.mu_hat) << "\n";
    file << "worker_id,f_hat" << (empirical ? ",empirical_fault" : "") << "\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        file << i << "," << format_double(f.values[i]);
        if (empirical) file << "," << format_double((*empirical)[i]);
        file << "\n";
    }
    if (!file) throw io_error("failed writing '" + a.out + "'");
    out << "wrote " << a.out << ": " << to_string(est) << " estimates for " << f.size() << " workers";
    if (f.mu_hat) out << ", mu_hat " << detail::fmt(*f.mu_hat);
    out << "\n";
    return ok;
}

struct AggregateArgs {
    std::string instance;
    std::string method;
    std::string u = "0";
    int iterations = 8;
    std::optional<std::string> rule;
    std::optional<Seed> seed;
    double eps = kDefaultClampEps;
    std::optional<std::string> out;
};

inline int cmd_aggregate(const AggregateArgs& a, std::ostream& out) {
    if (!a.seed) throw usage_error("aggregate needs --seed");
    MethodSpec spec{parse_method(a.method), parse_u(a.u), a.iterations, std::nullopt, *a.seed, a.eps};
    if (a.rule) spec.rule = parse_rule(*a.rule);
    if (spec.iterations < 1) throw usage_error("--T must be at least 1");
    const Instance inst = load_instance(a.instance);
    const MethodResult r = run_method(inst, spec);
    if (a.out) {
        auto file = detail::open_out(*a.out);
        using proxytd::detail::format_double;
        file << "# proxytd-aggregate v1\n# method=" << to_string(spec.method) << "\n# u=" << spec.u.text()
             << "\n# T=" << spec.iterations << "\n# rule=" << to_string(spec.rule_for(inst.domain()))
             << "\n# seed=" << spec.seed << "\n";
        if (r.error) file << "# error=" << format_double(*r.error) << "\n";
        file << "worker_id,f_hat,weight\n";
        for (std::size_t i = 0; i < inst.workers(); ++i)
            file << i << "," << (r.faults ? format_double(r.faults->values[i]) : "") << ","
                 << format_double(r.weights.weights[i]) << "\n";
        file << "answer," << to_string(r.estimate) << ",\n";
        if (!file) throw io_error("failed writing '" + *a.out + "'");
    }
    out << to_string(spec.method) << " on " << a.instance << ": answer " << to_string(r.estimate);
    if (r.error) out << ", error " << detail::fmt(*r.error);
    out << "\n";
    return ok;
}

struct ExperimentArgs {
    std::string config;
    bool dry_run = false;
    std::optional<unsigned> threads;
    std::optional<std::size_t> replications;
    std::optional<std::string> out;
};

inline int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
    ExperimentConfig cfg = load_experiment_config(a.config);
    if (a.threads) cfg.threads = *a.threads;
    if (a.replications) {
        if (*a.replications < 1) throw usage_error("--replications must be at least 1");
        cfg.replications = *a.replications;
    }
    if (a.out) cfg.output = *a.out;
    out << "experiment " << cfg.name << ": " << cfg.grid.size() << " cells x " << cfg.replications
        << " replications x " << cfg.methods.size() << " methods, seed " << cfg.seed << "\n";
    if (a.dry_run) {
        out << "config is valid (dry run)\n";
        return ok;
    }
    const ExperimentGrid grid = run_grid(cfg);
    emit_reports(grid, cfg.output);
    for (const auto& c : grid.cells) {
        out << "  n=" << c.cell.n << " m=" << c.cell.width << ":";
        for (const auto& s : c.methods) out << " " << s.method << "=" << detail::fmt(s.mean_error, 4);
        out << "\n";
    }
    out << "reports written to " << cfg.output << "\n";
    return ok;
}

inline int cmd_validate(const std::vector<std::string>& configs, std::ostream& out, std::ostream& err) {
    int code = ok;
    for (const auto& path : configs) {
        try {
            const auto cfg = load_experiment_config(path);
            out << path << ": ok (" << cfg.name << ")\n";
        } catch (const error& e) {
            err << path << ": " << e.what() << "\n";
            code = usage;
        }
    }
    return code;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"proxytd: proxy-voting fault estimation and truth discovery"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "proxytd 1.0");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "sample a synthetic instance from a noise model");
    g->add_option("--model", gen.model, "inn, ier, icn or mallows")->required();
    g->add_option("--k", gen.k, "number of categories (ier)");
    g->add_option("--m", gen.m, "number of questions");
    g->add_option("--c", gen.c, "number of candidates (rankings)");
    g->add_option("--n", gen.n, "number of workers")->required();
    g->add_option("--proto", gen.proto, "proto-population, e.g. normal:0.45,0.1")->required();
    g->add_option("--clip", gen.clip, "clip bounds lo,hi (inf allowed)");
    g->add_option("--seed", gen.seed, "master seed");
    g->add_option("--truth", gen.truth, "standard or random");
    g->add_option("--out", gen.out, "instance file to write")->required();

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "estimate worker fault levels");
    e->add_option("instance", est.instance, "instance file")->required();
    e->add_option("--estimator", est.estimator, "d-efl, p-efl, ip-efl, id-td or oracle")->required();
    e->add_option("--u", est.u, "P-EFL u: a number, 1/n or 1/(n-1)");
    e->add_option("--T", est.iterations, "iterations for ip-efl / id-td");
    e->add_option("--rule", est.rule, "aggregation rule for the D-EFL outcome");
    e->add_option("--seed", est.seed, "seed for stochastic estimators");
    e->add_option("--eps", est.eps, "weight clamp epsilon");
    e->add_option("--out", est.out, "fault CSV to write")->required();

    AggregateArgs agg;
    auto* a = app.add_subcommand("aggregate", "run a truth-discovery method on an instance");
    a->add_option("instance", agg.instance, "instance file")->required();
    a->add_option("--method", agg.method, "UA, OA, D-TD, P-TD, ID-TD or IP-TD")->required();
    a->add_option("--u", agg.u, "P-TD u: a number, 1/n or 1/(n-1)");
    a->add_option("--T", agg.iterations, "iterations for ID-TD / IP-TD");
    a->add_option("--rule", agg.rule, "aggregation rule");
    a->add_option("--seed", agg.seed, "seed");
    a->add_option("--eps", agg.eps, "weight clamp epsilon");
    a->add_option("--out", agg.out, "result CSV to write");

    ExperimentArgs exp;
    auto* x = app.add_subcommand("experiment", "run an experiment grid from a JSON config");
    x->add_option("--config", exp.config, "experiment config")->required();
    x->add_flag("--dry-run", exp.dry_run, "validate the config and stop");
    x->add_option("--threads", exp.threads, "worker threads (default: all cores)");
    x->add_option("--replications", exp.replications, "override replications per cell");
    x->add_option("--out", exp.out, "override the output directory");

    std::vector<std::string> configs;
    auto* v = app.add_subcommand("validate", "check experiment configs");
    v->add_option("configs", configs, "config files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return usage;
    }

    try {
        if (*g) return cmd_generate(gen, out);
        if (*e) return cmd_estimate(est, out);
        if (*a) return cmd_aggregate(agg, out);
        if (*x) return cmd_experiment(exp, out);
        if (*v) return cmd_validate(configs, out, err);
    } catch (const usage_error& ex) {
        err << "usage error: " << ex.what() << "\n";
        return usage;
    } catch (const config_error& ex) {
        err << "config error: " << ex.what() << "\n";
        return usage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return failure;
    }
    return usage;
}

}  // namespace proxytd::cli
