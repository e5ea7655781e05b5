#pragma once

// Fault-level estimators: distance from the unweighted outcome (D-EFL),
// proxy distance with a mu correction (P-EFL), and the two iterative schemes
// (ID-TD's estimation loop and iterative proxy estimation, IP-EFL).

#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "proxytd/aggregation.hpp"
#include "proxytd/core.hpp"
#include "proxytd/errors.hpp"
#include "proxytd/random.hpp"

namespace proxytd {

enum class Estimator { d_efl, p_efl, ip_efl, id_td, oracle };

inline std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::d_efl: return "d-efl";
        case Estimator::p_efl: return "p-efl";
        case Estimator::ip_efl: return "ip-efl";
        case Estimator::id_td: return "id-td";
        case Estimator::oracle: return "oracle";
    }
    return "unknown";
}

inline Estimator parse_estimator(const std::string& s) {
    for (Estimator e : {Estimator::d_efl, Estimator::p_efl, Estimator::ip_efl, Estimator::id_td, Estimator::oracle})
        if (to_string(e) == s) return e;
    throw config_error("unknown estimator '" + s + "'");
}

struct FaultEstimate {
    std::vector<double> values;
    Estimator estimator = Estimator::p_efl;
    std::optional<double> u;
    std::optional<double> mu_hat;
    std::optional<int> iterations;
    std::size_t fallback_iterations = 0;  // IP-EFL iterations that reverted to uniform weights

    std::size_t size() const { return values.size(); }
};

struct EstimatorConfig {
    double u = 0.0;
    int iterations = 8;
    double clamp_eps = kDefaultClampEps;
};

// Aggregated answer in any domain.
using Answer = std::variant<ContinuousAnswer, CategoricalAnswer, Ranking>;

inline std::string to_string(const Answer& a) {
    return std::visit(
        [](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            std::string out;
            if constexpr (std::is_same_v<T, ContinuousAnswer>) {
                char buf[32];
                for (std::size_t j = 0; j < x.values.size(); ++j) {
                    std::snprintf(buf, sizeof buf, "%.17g", x.values[j]);
                    out += (j ? " " : "") + std::string(buf);
                }
            } else if constexpr (std::is_same_v<T, CategoricalAnswer>) {
                for (std::size_t j = 0; j < x.labels.size(); ++j)
                    out += (j ? " " : "") + std::to_string(x.labels[j]);
            } else {
                for (int c : x.order) out += static_cast<char>('a' + c);
            }
            return out;
        },
        a);
}

// Profile for ranking instances; non-transitive answers are projected with
// derive_seed(seed, stage::projection).
inline std::optional<RankingProfile> profile_for(const Instance& inst, Seed seed) {
    if (inst.domain() != Domain::ranking) return std::nullopt;
    return make_profile(inst.ranking().answers, derive_seed(seed, stage::projection));
}

// Weighted aggregate of the instance's answers with the domain's rule.
inline Answer aggregate_instance(const Instance& inst, Rule rule, std::span<const double> w, Seed seed,
                                 const RankingProfile* profile = nullptr) {
    if (!rule_fits(rule, inst.domain()))
        throw config_error("rule '" + to_string(rule) + "' does not fit the " + to_string(inst.domain()) + " domain");
    switch (inst.domain()) {
        case Domain::continuous: return agg_mean(inst.continuous().answers, w);
        case Domain::categorical: return agg_plurality(inst.categorical().answers, w, seed);
        case Domain::ranking: {
            if (profile) return aggregate_rankings(rule, *profile, w, seed);
            const auto p = make_profile(inst.ranking().answers, derive_seed(seed, stage::projection));
            return aggregate_rankings(rule, p, w, seed);
        }
    }
    throw config_error("unreachable domain");
}

// Domain distance from every worker's answer to y.
inline std::vector<double> distances_to(const Instance& inst, const Answer& y) {
    std::vector<double> out;
    out.reserve(inst.workers());
    switch (inst.domain()) {
        case Domain::continuous:
            for (const auto& a : inst.continuous().answers) out.push_back(dist_continuous(a, std::get<ContinuousAnswer>(y)));
            break;
        case Domain::categorical:
            for (const auto& a : inst.categorical().answers) out.push_back(dist_hamming(a, std::get<CategoricalAnswer>(y)));
            break;
        case Domain::ranking: {
            const auto x = to_pairwise(std::get<Ranking>(y));
            for (const auto& a : inst.ranking().answers) out.push_back(dist_kendall(a, x));
            break;
        }
    }
    return out;
}

// Error of an aggregate against the instance's ground truth.
inline double answer_error(const Instance& inst, const Answer& y) {
    if (!inst.has_truth()) throw oracle_unavailable_error("instance has no ground truth");
    switch (inst.domain()) {
        case Domain::continuous: return dist_continuous(std::get<ContinuousAnswer>(y), *inst.continuous().truth);
        case Domain::categorical: return dist_hamming(std::get<CategoricalAnswer>(y), *inst.categorical().truth);
        case Domain::ranking: return dist_kendall(std::get<Ranking>(y), *inst.ranking().truth);
    }
    return 0.0;
}

// Number of categories seen by the Grofman transform: k, or 2 for pairwise
// ranking coordinates.
inline int effective_k(const Instance& inst) {
    switch (inst.domain()) {
        case Domain::categorical: return inst.categorical().k;
        case Domain::ranking: return 2;
        case Domain::continuous: break;
    }
    throw config_error("continuous instances have no category count");
}

struct OutcomeEstimate {
    FaultEstimate faults;
    Answer outcome;
};

// y0 = rule(S) with uniform weights, f0_i = d(s_i, y0).
inline OutcomeEstimate d_efl_with_outcome(const Instance& inst, Rule rule, Seed seed,
                                          const RankingProfile* profile = nullptr) {
    if (inst.workers() < 2) throw insufficient_workers_error("D-EFL needs at least 2 workers");
    const auto w = uniform_weights(inst.workers());
    Answer y0 = aggregate_instance(inst, rule, w.weights, derive_seed(seed, stage::outcome), profile);
    FaultEstimate f{distances_to(inst, y0), Estimator::d_efl, std::nullopt, std::nullopt, std::nullopt, 0};
    return {std::move(f), std::move(y0)};
}

inline FaultEstimate d_efl(const Instance& inst, Rule rule, Seed seed) {
    return d_efl_with_outcome(inst, rule, seed).faults;
}

inline FaultEstimate d_efl(const Instance& inst, Seed seed) { return d_efl(inst, default_rule(inst.domain()), seed); }

// mu_hat = u * sum_i f0_i.
inline double estimate_mu(const Instance& inst, double u, Rule rule, Seed seed) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw invalid_parameter_error("u must be a finite value >= 0");
    if (u == 0.0) return 0.0;
    const auto f0 = d_efl(inst, rule, seed);
    double sum = 0.0;
    for (double v : f0.values) sum += v;
    return u * sum;
}

inline double estimate_mu(const Instance& inst, double u, Seed seed) {
    return estimate_mu(inst, u, default_rule(inst.domain()), seed);
}

// f_i = pi_i - mu_hat.
inline FaultEstimate p_efl_continuous(const Instance& inst, double u, Seed seed = 0) {
    if (inst.domain() != Domain::continuous) throw config_error("continuous P-EFL needs a continuous instance");
    auto pi = proxy_distances(inst);
    const double mu = estimate_mu(inst, u, Rule::mean, seed);
    for (double& v : pi) v -= mu;
    return FaultEstimate{std::move(pi), Estimator::p_efl, u, mu, std::nullopt, 0};
}

// Inverts E[pi_i | f_i] = mu + (1 - (1+theta) mu) f_i with theta = 1/(k-1).
inline FaultEstimate p_efl_inverted(const Instance& inst, int k, double u, Rule rule, Seed seed) {
    auto pi = proxy_distances(inst);
    const double mu = estimate_mu(inst, u, rule, seed);
    const double theta = 1.0 / static_cast<double>(k - 1);
    const double denom = 1.0 - (1.0 + theta) * mu;
    if (std::abs(denom) < 1e-12) throw singular_inversion_error("mu_hat equals 1/(1+theta); P-EFL is singular");
    if (mu != 0.0)
        for (double& v : pi) v = (v - mu) / denom;
    return FaultEstimate{std::move(pi), Estimator::p_efl, u, mu, std::nullopt, 0};
}

inline FaultEstimate p_efl_categorical(const Instance& inst, double u, Seed seed = 0) {
    if (inst.domain() != Domain::categorical) throw config_error("categorical P-EFL needs a categorical instance");
    return p_efl_inverted(inst, inst.categorical().k, u, Rule::plurality, seed);
}

// Categorical P-EFL with k=2 over the pair coordinates (Kendall-tau proxy).
inline FaultEstimate p_efl_ranking(const Instance& inst, double u = 0.0, Rule rule = Rule::kemeny, Seed seed = 0) {
    if (inst.domain() != Domain::ranking) throw config_error("ranking P-EFL needs a ranking instance");
    return p_efl_inverted(inst, 2, u, rule, seed);
}

inline FaultEstimate p_efl(const Instance& inst, double u, Rule rule, Seed seed) {
    switch (inst.domain()) {
        case Domain::continuous: return p_efl_continuous(inst, u, seed);
        case Domain::categorical: return p_efl_categorical(inst, u, seed);
        case Domain::ranking: return p_efl_ranking(inst, u, rule, seed);
    }
    throw config_error("unreachable domain");
}

// ---------------------------------------------------------------------------
// Iterative estimators

struct IdTdResult {
    FaultEstimate faults;
    CategoricalAnswer answer;
};

// Seed of the t-th intermediate plurality in ID-TD. Iteration 0 shares the
// D-TD outcome stage so that a single iteration reproduces D-TD exactly.
inline Seed id_td_iteration_seed(Seed seed, int t) {
    return t == 0 ? derive_seed(seed, stage::outcome) : derive_seed(seed, {3, static_cast<std::uint64_t>(t)});
}

inline IdTdResult id_td_estimate(const Instance& inst, int iterations, Seed seed, double eps = kDefaultClampEps) {
    if (inst.domain() != Domain::categorical) throw config_error("ID-TD needs a categorical instance");
    if (iterations < 1) throw invalid_parameter_error("ID-TD needs T >= 1");
    if (inst.workers() < 2) throw insufficient_workers_error("ID-TD needs at least 2 workers");
    const auto& data = inst.categorical();
    WeightVector w = uniform_weights(inst.workers());
    std::vector<double> f;
    for (int t = 0; t < iterations; ++t) {
        const auto y = agg_plurality(data.answers, w.weights, id_td_iteration_seed(seed, t));
        f.clear();
        for (const auto& s : data.answers) f.push_back(dist_hamming(s, y));
        w = weights_grofman(f, data.k, eps, false);
    }
    auto z = agg_plurality(data.answers, w.weights, derive_seed(seed, stage::aggregate));
    return {FaultEstimate{std::move(f), Estimator::id_td, std::nullopt, std::nullopt, iterations, 0}, std::move(z)};
}

// pi_i = sum_{i'!=i} w_{i'} d_{ii'} / sum_{i'!=i} w_{i'}. Every normalizer
// must be positive.
inline std::vector<double> weighted_proxy_distances(const DistanceMatrix& d, std::span<const double> w) {
    const std::size_t n = d.size();
    if (n < 2) throw insufficient_workers_error("proxy distance needs at least 2 workers");
    if (w.size() != n) throw shape_error("weights and workers differ in length");
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            num += w[j] * d(i, j);
            den += w[j];
        }
        if (!(den > 0.0)) throw degenerate_weights_error("weighted proxy needs a positive normalizer");
        pi[i] = num / den;
    }
    return pi;
}

struct IterationTrace {
    std::vector<double> proxy;         // pi^t
    std::vector<double> weights;       // w^t used to form pi^t
    bool uniform_fallback = false;
};

// Iterative proxy estimation. Iteration t forms
//   pi^t_i = sum_{i'!=i} w^t_{i'} d_{ii'} / sum_{i'!=i} w^t_{i'}
// then sets w^{t+1} to the Grofman weights of pi^t (negatives kept).
// w^0 is uniform, so the first iteration is the plain proxy distance. If any
// normalizer is <= 0 the iteration falls back to uniform weights.
inline std::vector<IterationTrace> ip_efl_trace(const Instance& inst, int iterations, double eps = kDefaultClampEps) {
    if (iterations < 1) throw invalid_parameter_error("IP-EFL needs T >= 1");
    if (inst.domain() == Domain::continuous) throw config_error("IP-EFL needs a categorical or ranking instance");
    const int k = effective_k(inst);
    const DistanceMatrix d = distance_matrix(inst);
    const std::size_t n = d.size();
    if (n < 2) throw insufficient_workers_error("IP-EFL needs at least 2 workers");

    std::vector<IterationTrace> trace;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    for (int t = 0; t < iterations; ++t) {
        IterationTrace it;
        it.weights = w;
        bool uniform = t == 0;
        if (!uniform) {
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < n && !uniform; ++i)
                if (!(total - w[i] > 0.0)) uniform = true;
            it.uniform_fallback = uniform;
        }
        it.proxy = uniform ? proxy_distances(d) : weighted_proxy_distances(d, w);
        w = weights_grofman(it.proxy, k, eps, false).weights;
        trace.push_back(std::move(it));
    }
    return trace;
}

inline FaultEstimate ip_efl(const Instance& inst, int iterations, double eps = kDefaultClampEps) {
    auto trace = ip_efl_trace(inst, iterations, eps);
    std::size_t fallbacks = 0;
    for (const auto& t : trace) fallbacks += t.uniform_fallback;
    return FaultEstimate{std::move(trace.back().proxy), Estimator::ip_efl, 0.0, 0.0, iterations, fallbacks};
}

}  // namespace proxytd
