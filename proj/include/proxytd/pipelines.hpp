#pragma once

// End-to-end truth discovery: estimate faults, turn them into weights, and
// aggregate. Seeds are split by stage (see random.hpp) so that methods which
// coincide mathematically also coincide bit for bit.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "proxytd/aggregation.hpp"
#include "proxytd/core.hpp"
#include "proxytd/errors.hpp"
#include "proxytd/estimators.hpp"
#include "proxytd/random.hpp"

namespace proxytd {

enum class Method { ua, oa, d_td, p_td, id_td, ip_td };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::ua: return "UA";
        case Method::oa: return "OA";
        case Method::d_td: return "D-TD";
        case Method::p_td: return "P-TD";
        case Method::id_td: return "ID-TD";
        case Method::ip_td: return "IP-TD";
    }
    return "unknown";
}

inline Method parse_method(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (Method m : {Method::ua, Method::oa, Method::d_td, Method::p_td, Method::id_td, Method::ip_td})
        if (to_string(m) == s) return m;
    throw config_error("unknown method '" + s + "'");
}

inline bool method_fits(Method m, Domain d) {
    if (m == Method::id_td || m == Method::ip_td) return d != Domain::continuous;
    return true;
}

// The u parameter, either a constant or 1/(n - offset) resolved per instance.
struct UParam {
    bool reciprocal = false;
    double value = 0.0;
    int offset = 0;

    double resolve(std::size_t n) const {
        if (!reciprocal) return value;
        const double denom = static_cast<double>(n) - offset;
        if (!(denom > 0)) throw invalid_parameter_error("u = 1/(n-" + std::to_string(offset) + ") needs larger n");
        return 1.0 / denom;
    }

    std::string text() const {
        if (!reciprocal) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", value);
            return buf;
        }
        if (offset == 0) return "1/n";
        return offset > 0 ? "1/(n-" + std::to_string(offset) + ")" : "1/(n+" + std::to_string(-offset) + ")";
    }
};

// Accepts "0.25", "1/n", "1/(n-1)", "1/(n-2)", "1/(n+1)".
inline UParam parse_u(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.rfind("1/", 0) == 0 && s.find('n') != std::string::npos) {
        std::string rest = s.substr(2);
        if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')') rest = rest.substr(1, rest.size() - 2);
        if (rest == "n") return UParam{true, 0.0, 0};
        if (rest.size() > 2 && rest[0] == 'n' && (rest[1] == '-' || rest[1] == '+')) {
            char* end = nullptr;
            const long k = std::strtol(rest.c_str() + 2, &end, 10);
            if (end && *end == '\0') return UParam{true, 0.0, static_cast<int>(rest[1] == '-' ? k : -k)};
        }
        throw config_error("cannot parse u '" + text + "'");
    }
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || !end || *end != '\0' || !(v >= 0.0) || !std::isfinite(v))
        throw config_error("u must be a non-negative number or 1/(n-k), got '" + text + "'");
    return UParam{false, v, 0};
}

struct MethodSpec {
    Method method = Method::p_td;
    UParam u;
    int iterations = 8;
    std::optional<Rule> rule;  // defaults to the domain's natural rule
    Seed seed = 0;
    double clamp_eps = kDefaultClampEps;

    Rule rule_for(Domain d) const { return rule.value_or(default_rule(d)); }
};

struct MethodResult {
    Answer estimate;
    std::optional<FaultEstimate> faults;
    WeightVector weights;
    std::optional<double> error;
};

// Fault estimates to aggregation weights, per domain: inverse variance
// (continuous), Grofman with negatives kept (categorical), Grofman over pair
// coordinates clipped at zero (rankings). An all-zero ranking weight vector
// falls back to uniform weights.
inline WeightVector domain_weights(const Instance& inst, std::span<const double> faults, double eps) {
    switch (inst.domain()) {
        case Domain::continuous: return weights_inverse_variance(faults, eps);
        case Domain::categorical: return weights_grofman(faults, inst.categorical().k, eps, false);
        case Domain::ranking: {
            auto w = weights_grofman(faults, 2, eps, true);
            if (!(w.total() > 0.0)) {
                auto u = uniform_weights(faults.size());
                u.policy = w.policy;
                u.clamp_eps = eps;
                u.clamped = w.clamped;
                u.fell_back_to_uniform = true;
                return u;
            }
            return w;
        }
    }
    throw config_error("unreachable domain");
}

inline void check_rule(const Instance& inst, Rule rule) {
    if (!rule_fits(rule, inst.domain()))
        throw config_error("rule '" + to_string(rule) + "' does not fit the " + to_string(inst.domain()) + " domain");
}

inline MethodResult finish(const Instance& inst, Answer estimate, std::optional<FaultEstimate> faults, WeightVector w) {
    MethodResult r{std::move(estimate), std::move(faults), std::move(w), std::nullopt};
    if (inst.has_truth()) r.error = answer_error(inst, r.estimate);
    return r;
}

inline MethodResult run_ua(const Instance& inst, Rule rule, Seed seed) {
    validate(inst);
    check_rule(inst, rule);
    const auto profile = profile_for(inst, seed);
    auto w = uniform_weights(inst.workers());
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), profile ? &*profile : nullptr);
    return finish(inst, std::move(z), std::nullopt, std::move(w));
}

// Skeleton driven by the true faults, or the empirical faults d(s_i, z) when
// the instance carries truth only.
inline MethodResult run_oa(const Instance& inst, Rule rule, Seed seed, double eps = kDefaultClampEps) {
    validate(inst);
    check_rule(inst, rule);
    std::vector<double> f;
    if (inst.faults) f = *inst.faults;
    else if (inst.has_truth()) f = empirical_faults(inst);
    else throw oracle_unavailable_error("OA needs true faults or ground truth");
    auto w = domain_weights(inst, f, eps);
    w.policy = WeightPolicy::oracle;
    const auto profile = profile_for(inst, seed);
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), profile ? &*profile : nullptr);
    FaultEstimate fe{std::move(f), Estimator::oracle, std::nullopt, std::nullopt, std::nullopt, 0};
    return finish(inst, std::move(z), std::move(fe), std::move(w));
}

inline MethodResult run_d_td(const Instance& inst, Rule rule, Seed seed, double eps = kDefaultClampEps) {
    validate(inst);
    check_rule(inst, rule);
    const auto profile = profile_for(inst, seed);
    const RankingProfile* p = profile ? &*profile : nullptr;
    auto est = d_efl_with_outcome(inst, rule, seed, p);
    auto w = domain_weights(inst, est.faults.values, eps);
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), p);
    return finish(inst, std::move(z), std::move(est.faults), std::move(w));
}

inline MethodResult run_p_td(const Instance& inst, double u, Rule rule, Seed seed, double eps = kDefaultClampEps) {
    validate(inst);
    check_rule(inst, rule);
    auto f = p_efl(inst, u, rule, seed);
    auto w = domain_weights(inst, f.values, eps);
    const auto profile = profile_for(inst, seed);
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), profile ? &*profile : nullptr);
    return finish(inst, std::move(z), std::move(f), std::move(w));
}

inline MethodResult run_ip_td(const Instance& inst, int iterations, Rule rule, Seed seed,
                              double eps = kDefaultClampEps) {
    validate(inst);
    check_rule(inst, rule);
    if (inst.domain() == Domain::continuous) throw config_error("IP-TD needs a categorical or ranking instance");
    auto f = ip_efl(inst, iterations, eps);
    auto w = domain_weights(inst, f.values, eps);
    const auto profile = profile_for(inst, seed);
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), profile ? &*profile : nullptr);
    return finish(inst, std::move(z), std::move(f), std::move(w));
}

// Categorical instances run the plurality loop of id_td_estimate. Ranking
// instances run the same loop with the given voting rule, Kendall-tau
// distances, and zero-clipped Grofman weights.
inline MethodResult run_id_td(const Instance& inst, int iterations, Seed seed, double eps = kDefaultClampEps,
                              Rule rule = Rule::plurality) {
    validate(inst);
    if (inst.domain() == Domain::categorical) {
        auto r = id_td_estimate(inst, iterations, seed, eps);
        auto w = weights_grofman(r.faults.values, inst.categorical().k, eps, false);
        return finish(inst, std::move(r.answer), std::move(r.faults), std::move(w));
    }
    if (inst.domain() != Domain::ranking) throw config_error("ID-TD needs a categorical or ranking instance");
    if (iterations < 1) throw invalid_parameter_error("ID-TD needs T >= 1");
    if (!is_ranking_rule(rule)) rule = Rule::kemeny;
    const auto profile = profile_for(inst, seed);
    WeightVector w = uniform_weights(inst.workers());
    std::vector<double> f;
    for (int t = 0; t < iterations; ++t) {
        const Answer y = aggregate_instance(inst, rule, w.weights, id_td_iteration_seed(seed, t), &*profile);
        f = distances_to(inst, y);
        w = domain_weights(inst, f, eps);
    }
    auto z = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::aggregate), &*profile);
    FaultEstimate fe{std::move(f), Estimator::id_td, std::nullopt, std::nullopt, iterations, 0};
    return finish(inst, std::move(z), std::move(fe), std::move(w));
}

inline MethodResult run_method(const Instance& inst, const MethodSpec& spec) {
    if (!method_fits(spec.method, inst.domain()))
        throw config_error(to_string(spec.method) + " does not support the " + to_string(inst.domain()) + " domain");
    const Rule rule = spec.rule_for(inst.domain());
    switch (spec.method) {
        case Method::ua: return run_ua(inst, rule, spec.seed);
        case Method::oa: return run_oa(inst, rule, spec.seed, spec.clamp_eps);
        case Method::d_td: return run_d_td(inst, rule, spec.seed, spec.clamp_eps);
        case Method::p_td: return run_p_td(inst, spec.u.resolve(inst.workers()), rule, spec.seed, spec.clamp_eps);
        case Method::ip_td: return run_ip_td(inst, spec.iterations, rule, spec.seed, spec.clamp_eps);
        case Method::id_td: return run_id_td(inst, spec.iterations, spec.seed, spec.clamp_eps, rule);
    }
    throw config_error("unreachable method");
}

}  // namespace proxytd
