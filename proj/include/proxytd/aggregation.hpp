#pragma once

// Fault-to-weight transforms and weighted aggregation: mean, plurality, and
// the ranking voting rules (positional, graph based, dictators, exact Kemeny).
//
// Every rule breaks ties uniformly at random from an explicit seed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "proxytd/core.hpp"
#include "proxytd/errors.hpp"
#include "proxytd/random.hpp"

namespace proxytd {

inline constexpr double kDefaultClampEps = 1e-4;
inline constexpr int kDefaultKemenyCap = 8;

enum class WeightPolicy { uniform, inverse_variance, grofman, grofman_clipped, oracle };

inline std::string to_string(WeightPolicy p) {
    switch (p) {
        case WeightPolicy::uniform: return "uniform";
        case WeightPolicy::inverse_variance: return "inverse-variance";
        case WeightPolicy::grofman: return "grofman";
        case WeightPolicy::grofman_clipped: return "grofman-clipped";
        case WeightPolicy::oracle: return "oracle";
    }
    return "unknown";
}

struct WeightVector {
    std::vector<double> weights;
    WeightPolicy policy = WeightPolicy::uniform;
    double clamp_eps = 0.0;
    std::size_t clamped = 0;   // entries whose fault estimate hit the clamp
    bool fell_back_to_uniform = false;

    std::size_t size() const { return weights.size(); }
    double total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

inline WeightVector uniform_weights(std::size_t n) {
    return WeightVector{std::vector<double>(n, 1.0 / static_cast<double>(n)), WeightPolicy::uniform, 0.0, 0, false};
}

// w_i = 1 / max(f_i, eps).
inline WeightVector weights_inverse_variance(std::span<const double> faults, double eps = kDefaultClampEps) {
    if (!(eps > 0.0)) throw invalid_parameter_error("clamp eps must be positive");
    WeightVector w{{}, WeightPolicy::inverse_variance, eps, 0, false};
    w.weights.reserve(faults.size());
    for (double f : faults) {
        if (!(f > eps)) ++w.clamped;
        w.weights.push_back(1.0 / std::max(f, eps));
    }
    return w;
}

// Grofman log-odds weight log((1-f)(k-1)/f) on f clamped to [eps, 1-eps];
// negatives are zeroed when clip_negative is set.
inline WeightVector weights_grofman(std::span<const double> faults, int k, double eps = kDefaultClampEps,
                                    bool clip_negative = false) {
    if (k < 2) throw invalid_parameter_error("Grofman weights need k >= 2");
    if (!(eps > 0.0 && eps < 0.5)) throw invalid_parameter_error("clamp eps must be in (0, 0.5)");
    WeightVector w{{}, clip_negative ? WeightPolicy::grofman_clipped : WeightPolicy::grofman, eps, 0, false};
    w.weights.reserve(faults.size());
    for (double f : faults) {
        double g = f;
        if (!(g >= eps)) g = eps, ++w.clamped;
        else if (g > 1.0 - eps) g = 1.0 - eps, ++w.clamped;
        double weight = std::log((1.0 - g) * (k - 1) / g);
        if (clip_negative && weight < 0.0) weight = 0.0;
        w.weights.push_back(weight);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Continuous and categorical

inline ContinuousAnswer agg_mean(const std::vector<ContinuousAnswer>& answers, std::span<const double> w) {
    if (answers.empty() || answers.size() != w.size()) throw shape_error("weights and answers differ in length");
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) throw degenerate_weights_error("weighted mean needs positive total weight");
    const std::size_t m = answers.front().size();
    ContinuousAnswer out{std::vector<double>(m, 0.0)};
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i].size() != m) throw shape_error("non-rectangular continuous answers");
        for (std::size_t j = 0; j < m; ++j) out.values[j] += w[i] * answers[i].values[j];
    }
    for (double& v : out.values) v /= total;
    return out;
}

// Per question argmax of summed (possibly negative) weights; exact ties are
// broken uniformly at random.
inline CategoricalAnswer agg_plurality(const std::vector<CategoricalAnswer>& answers, std::span<const double> w,
                                       Seed seed) {
    if (answers.empty() || answers.size() != w.size()) throw shape_error("weights and answers differ in length");
    const int k = answers.front().k;
    const std::size_t m = answers.front().size();
    Rng rng = make_rng(seed);
    CategoricalAnswer out{std::vector<int>(m, 0), k};
    std::vector<double> tally(static_cast<std::size_t>(k));
    std::vector<int> best;
    for (std::size_t j = 0; j < m; ++j) {
        std::fill(tally.begin(), tally.end(), 0.0);
        for (std::size_t i = 0; i < answers.size(); ++i) tally[answers[i].labels[j]] += w[i];
        const double top = *std::max_element(tally.begin(), tally.end());
        best.clear();
        for (int x = 0; x < k; ++x)
            if (tally[x] == top) best.push_back(x);
        out.labels[j] = best.size() == 1
                            ? best.front()
                            : best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rankings

enum class Rule {
    mean,
    plurality,
    borda,
    copeland,
    kemeny,
    kemeny_weighted_graph,
    plurality_rank,
    veto,
    best_dictator,
    random_dictator,
};

inline std::string to_string(Rule r) {
    switch (r) {
        case Rule::mean: return "mean";
        case Rule::plurality: return "plurality";
        case Rule::borda: return "borda";
        case Rule::copeland: return "copeland";
        case Rule::kemeny: return "kemeny";
        case Rule::kemeny_weighted_graph: return "kemeny-weighted-graph";
        case Rule::plurality_rank: return "plurality-rank";
        case Rule::veto: return "veto";
        case Rule::best_dictator: return "best-dictator";
        case Rule::random_dictator: return "random-dictator";
    }
    return "unknown";
}

inline Rule parse_rule(const std::string& s) {
    for (Rule r : {Rule::mean, Rule::plurality, Rule::borda, Rule::copeland, Rule::kemeny,
                   Rule::kemeny_weighted_graph, Rule::plurality_rank, Rule::veto, Rule::best_dictator,
                   Rule::random_dictator})
        if (to_string(r) == s) return r;
    throw config_error("unknown rule '" + s + "'");
}

inline bool is_ranking_rule(Rule r) { return r != Rule::mean && r != Rule::plurality; }

inline bool rule_fits(Rule r, Domain d) {
    switch (d) {
        case Domain::continuous: return r == Rule::mean;
        case Domain::categorical: return r == Rule::plurality;
        case Domain::ranking: return is_ranking_rule(r);
    }
    return false;
}

inline Rule default_rule(Domain d) {
    switch (d) {
        case Domain::continuous: return Rule::mean;
        case Domain::categorical: return Rule::plurality;
        case Domain::ranking: return Rule::kemeny;
    }
    return Rule::mean;
}

inline const std::vector<Rule>& all_ranking_rules() {
    static const std::vector<Rule> rules{Rule::borda,          Rule::copeland, Rule::kemeny,
                                         Rule::kemeny_weighted_graph, Rule::plurality_rank, Rule::veto,
                                         Rule::best_dictator,  Rule::random_dictator};
    return rules;
}

inline void check_ranking_weights(std::span<const double> w, std::size_t n) {
    if (w.size() != n || n == 0) throw shape_error("weights and profile differ in length");
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw invalid_parameter_error("ranking rules need non-negative weights");
        total += x;
    }
    if (!(total > 0.0)) throw degenerate_weights_error("ranking rules need positive total weight");
}

// v(a,b): normalized weight of voters ranking a above b. y(a,b) = v(a,b) > 0.5.
struct WeightedMajorityGraph {
    int candidates = 0;
    std::vector<double> v;  // c*c, row-major
    std::vector<char> y;

    double share(int a, int b) const { return v[static_cast<std::size_t>(a) * candidates + b]; }
    bool beats(int a, int b) const { return y[static_cast<std::size_t>(a) * candidates + b] != 0; }
};

inline WeightedMajorityGraph majority_graph(const std::vector<PairwiseVector>& profile, std::span<const double> w) {
    check_ranking_weights(w, profile.size());
    const int c = profile.front().candidates;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    WeightedMajorityGraph g{c, std::vector<double>(static_cast<std::size_t>(c) * c, 0.0),
                            std::vector<char>(static_cast<std::size_t>(c) * c, 0)};
    std::size_t idx = 0;
    for (int a = 0; a < c; ++a) {
        for (int b = a + 1; b < c; ++b, ++idx) {
            double above = 0.0;
            for (std::size_t i = 0; i < profile.size(); ++i)
                if (profile[i].entries[idx] > 0) above += w[i];
            const double share = above / total;
            g.v[static_cast<std::size_t>(a) * c + b] = share;
            g.v[static_cast<std::size_t>(b) * c + a] = 1.0 - share;
            g.y[static_cast<std::size_t>(a) * c + b] = share > 0.5;
            g.y[static_cast<std::size_t>(b) * c + a] = (1.0 - share) > 0.5;
        }
    }
    return g;
}

// Sorts candidates by ascending score after a seeded shuffle, so exact ties
// land in uniformly random order.
inline Ranking rank_by_score(const std::vector<double>& score, Seed seed) {
    Rng rng = make_rng(seed);
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] < score[b]; });
    return Ranking{std::move(order)};
}

enum class KemenyVariant { unweighted_graph, weighted_graph };

// Exact Kemeny by enumerating all c! rankings.
//   unweighted_graph: minimize Hamming distance to y0 = sign(sum_i w_i s_i),
//                     zero sums broken by a coin flip.
//   weighted_graph:   minimize sum over pairs of the weight share disagreeing
//                     with the ranking (l1 distance to v).
inline Ranking kemeny(const std::vector<PairwiseVector>& profile, std::span<const double> w, KemenyVariant variant,
                      Seed seed, int cap = kDefaultKemenyCap) {
    check_ranking_weights(w, profile.size());
    const int c = profile.front().candidates;
    if (c > cap) throw exceeds_exact_search_error("exact Kemeny limited to " + std::to_string(cap) + " candidates");
    const std::size_t pairs = pair_count(c);
    Rng rng = make_rng(seed);

    // cost_above[p]: cost paid on pair p=(a,b) when a is placed above b;
    // cost_below[p]: cost when b is placed above a.
    std::vector<double> cost_above(pairs, 0.0), cost_below(pairs, 0.0);
    if (variant == KemenyVariant::unweighted_graph) {
        for (std::size_t p = 0; p < pairs; ++p) {
            double sum = 0.0;
            for (std::size_t i = 0; i < profile.size(); ++i) sum += w[i] * profile[i].entries[p];
            int sign = sum > 0 ? 1 : (sum < 0 ? -1 : 0);
            if (sign == 0) sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
            cost_above[p] = sign > 0 ? 0.0 : 1.0;
            cost_below[p] = sign > 0 ? 1.0 : 0.0;
        }
    } else {
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t p = 0; p < pairs; ++p) {
            double above = 0.0;
            for (std::size_t i = 0; i < profile.size(); ++i)
                if (profile[i].entries[p] > 0) above += w[i];
            const double share = above / total;
            cost_above[p] = 1.0 - share;
            cost_below[p] = share;
        }
    }

    std::vector<int> perm(static_cast<std::size_t>(c));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> pos(static_cast<std::size_t>(c));
    std::vector<std::vector<int>> best;
    double best_cost = std::numeric_limits<double>::infinity();
    constexpr double tie_tol = 1e-12;
    do {
        for (int p = 0; p < c; ++p) pos[perm[p]] = p;
        double cost = 0.0;
        std::size_t idx = 0;
        for (int a = 0; a < c; ++a)
            for (int b = a + 1; b < c; ++b, ++idx) cost += pos[a] < pos[b] ? cost_above[idx] : cost_below[idx];
        if (cost < best_cost - tie_tol) {
            best_cost = cost;
            best.clear();
            best.push_back(perm);
        } else if (cost <= best_cost + tie_tol) {
            best.push_back(perm);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    const std::size_t pick =
        best.size() == 1 ? 0 : std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng);
    return Ranking{best[pick]};
}

// Closest ranking to a single (possibly non-transitive) pairwise vector.
inline Ranking kemeny_projection(const PairwiseVector& x, Seed seed, int cap = kDefaultKemenyCap) {
    if (is_transitive(x)) return from_pairwise(x);
    const double one = 1.0;
    return kemeny({x}, std::span<const double>(&one, 1), KemenyVariant::unweighted_graph, seed, cap);
}

// Voters as both pairwise vectors and full rankings. Non-transitive answers
// are replaced by their Kemeny projection in `rankings` only.
struct RankingProfile {
    int candidates = 0;
    std::vector<PairwiseVector> pairwise;
    std::vector<Ranking> rankings;
    std::size_t projected = 0;

    std::size_t size() const { return pairwise.size(); }
};

inline RankingProfile make_profile(const std::vector<PairwiseVector>& answers, Seed seed) {
    if (answers.empty()) throw insufficient_workers_error("empty ranking profile");
    RankingProfile p{answers.front().candidates, answers, {}, 0};
    p.rankings.reserve(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (is_transitive(answers[i])) {
            p.rankings.push_back(from_pairwise(answers[i]));
        } else {
            p.rankings.push_back(kemeny_projection(answers[i], derive_seed(seed, i)));
            ++p.projected;
        }
    }
    return p;
}

inline RankingProfile make_profile(const std::vector<Ranking>& rankings) {
    if (rankings.empty()) throw insufficient_workers_error("empty ranking profile");
    RankingProfile p{rankings.front().candidates(), {}, rankings, 0};
    for (const auto& r : rankings) p.pairwise.push_back(to_pairwise(r));
    return p;
}

// Score-based rules; candidates are ranked by increasing score.
inline Ranking rule_score(Rule rule, const RankingProfile& profile, std::span<const double> w, Seed seed) {
    check_ranking_weights(w, profile.size());
    const int c = profile.candidates;
    std::vector<double> score(static_cast<std::size_t>(c), 0.0);
    switch (rule) {
        case Rule::borda:
            for (std::size_t i = 0; i < profile.size(); ++i) {
                const auto pos = profile.rankings[i].positions();
                for (int cand = 0; cand < c; ++cand) score[cand] += w[i] * pos[cand];
            }
            return rank_by_score(score, seed);
        case Rule::copeland: {
            const auto g = majority_graph(profile.pairwise, w);
            for (int cand = 0; cand < c; ++cand)
                for (int other = 0; other < c; ++other)
                    if (other != cand && g.beats(other, cand)) score[cand] += 1.0;
            return rank_by_score(score, seed);
        }
        case Rule::plurality_rank:
            for (std::size_t i = 0; i < profile.size(); ++i) score[profile.rankings[i].order.front()] -= w[i];
            return rank_by_score(score, seed);
        case Rule::veto:
            for (std::size_t i = 0; i < profile.size(); ++i) score[profile.rankings[i].order.back()] += w[i];
            return rank_by_score(score, seed);
        case Rule::best_dictator: {
            Rng rng = make_rng(seed);
            const double top = *std::max_element(w.begin(), w.end());
            std::vector<std::size_t> argmax;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (w[i] == top) argmax.push_back(i);
            const std::size_t pick =
                argmax.size() == 1 ? 0 : std::uniform_int_distribution<std::size_t>(0, argmax.size() - 1)(rng);
            return profile.rankings[argmax[pick]];
        }
        case Rule::random_dictator: {
            Rng rng = make_rng(seed);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            return profile.rankings[pick(rng)];
        }
        default: throw config_error("rule '" + to_string(rule) + "' is not a score-based ranking rule");
    }
}

inline Ranking aggregate_rankings(Rule rule, const RankingProfile& profile, std::span<const double> w, Seed seed) {
    switch (rule) {
        case Rule::kemeny: return kemeny(profile.pairwise, w, KemenyVariant::unweighted_graph, seed);
        case Rule::kemeny_weighted_graph: return kemeny(profile.pairwise, w, KemenyVariant::weighted_graph, seed);
        default: return rule_score(rule, profile, w, seed);
    }
}

}  // namespace proxytd
