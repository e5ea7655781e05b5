#include <catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace proxytd;
using Catch::Approx;
using th::rk;

namespace {

RankingProfile profile_of(const std::vector<std::string>& rows) {
    std::vector<Ranking> r;
    for (const auto& s : rows) r.push_back(rk(s));
    return make_profile(r);
}

std::vector<oracle::Preference> prefs_of(const RankingProfile& p) {
    std::vector<oracle::Preference> out;
    for (const auto& r : p.rankings) out.push_back(oracle::preference_of(r.order));
    return out;
}

}  // namespace

TEST_CASE("inverse-variance weights") {
    const std::vector<double> f{1.0, 2.0};
    CHECK(weights_inverse_variance(f).weights == std::vector<double>{1.0, 0.5});
    const std::vector<double> g{-0.5, 0.0, 4.0};
    const auto w = weights_inverse_variance(g, 1e-4);
    CHECK(w.weights[0] == Approx(1e4));
    CHECK(w.weights[1] == Approx(1e4));
    CHECK(w.clamped == 2);
    CHECK(w.policy == WeightPolicy::inverse_variance);

    const std::vector<double> h{0.3, 1.2, 5.0};
    std::vector<double> h3;
    for (double x : h) h3.push_back(3.0 * x);
    const auto a = weights_inverse_variance(h), b = weights_inverse_variance(h3);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(b.weights[i] == Approx(a.weights[i] / 3.0));
}

TEST_CASE("Grofman weights") {
    CHECK(weights_grofman(std::vector<double>{0.5}, 2).weights[0] == Approx(0.0).margin(1e-15));
    for (int k : {2, 3, 4, 7}) {
        const double f = 1.0 - 1.0 / k;
        CHECK(weights_grofman(std::vector<double>{f}, k).weights[0] == Approx(0.0).margin(1e-12));
    }
    CHECK(weights_grofman(std::vector<double>{0.2}, 2).weights[0] == Approx(std::log(4.0)));
    CHECK(weights_grofman(std::vector<double>{0.2}, 2).weights[0] == Approx(1.3863).margin(1e-4));

    const std::vector<double> f{0.0, 0.7, 1.0};
    const auto kept = weights_grofman(f, 2, 1e-4, false);
    CHECK(kept.weights[0] == Approx(std::log((1 - 1e-4) / 1e-4)));
    CHECK(kept.weights[1] < 0.0);
    CHECK(kept.weights[2] == Approx(-std::log((1 - 1e-4) / 1e-4)));
    CHECK(kept.clamped == 2);
    const auto clipped = weights_grofman(f, 2, 1e-4, true);
    CHECK(clipped.weights[1] == 0.0);
    CHECK(clipped.weights[2] == 0.0);
    CHECK(clipped.policy == WeightPolicy::grofman_clipped);
}

TEST_CASE("weighted mean") {
    const std::vector<ContinuousAnswer> s{{{0.0}}, {{3.0}}};
    CHECK(agg_mean(s, std::vector<double>{0.5, 0.5}).values[0] == Approx(1.5));
    CHECK(agg_mean(s, std::vector<double>{2, 1}).values[0] == Approx(1.0));
    CHECK(agg_mean(s, std::vector<double>{0, 1}).values[0] == 3.0);
    CHECK_THROWS_AS(agg_mean(s, std::vector<double>{0, 0}), degenerate_weights_error);
    CHECK_THROWS_AS(agg_mean(s, std::vector<double>{1, -1}), degenerate_weights_error);
}

TEST_CASE("weighted plurality") {
    const std::vector<CategoricalAnswer> s{{{0}, 2}, {{0}, 2}, {{1}, 2}};
    CHECK(agg_plurality(s, uniform_weights(3).weights, 1).labels[0] == 0);
    CHECK(agg_plurality(s, std::vector<double>{1, 1, 3}, 1).labels[0] == 1);
    CHECK(agg_plurality(s, std::vector<double>{1, 1, -3}, 1).labels[0] == 0);

    // an exact tie goes either way depending on the seed, never elsewhere
    const std::vector<CategoricalAnswer> tie{{{0}, 3}, {{2}, 3}};
    std::set<int> seen;
    for (Seed sd = 0; sd < 64; ++sd) seen.insert(agg_plurality(tie, std::vector<double>{1, 1}, sd).labels[0]);
    CHECK(seen == std::set<int>{0, 2});
}

TEST_CASE("equal positive weights reproduce unweighted plurality") {
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        const auto inst = th::random_categorical(rng, 7, 6, 3);
        const auto& s = inst.categorical().answers;
        CHECK(agg_plurality(s, std::vector<double>(7, 2.5), 4) == agg_plurality(s, uniform_weights(7).weights, 4));
    }
}

TEST_CASE("majority graph") {
    const auto unanimous = profile_of({"bac", "bac", "bac"});
    const auto g = majority_graph(unanimous.pairwise, uniform_weights(3).weights);
    CHECK(g.beats(1, 0));
    CHECK(g.beats(1, 2));
    CHECK(g.beats(0, 2));
    CHECK_FALSE(g.beats(0, 1));

    const auto cyc = profile_of({"abc", "bca", "cab"});
    const auto gc = majority_graph(cyc.pairwise, uniform_weights(3).weights);
    CHECK(gc.beats(0, 1));
    CHECK(gc.beats(1, 2));
    CHECK(gc.beats(2, 0));

    const auto two = profile_of({"abc", "cba"});
    const auto gw = majority_graph(two.pairwise, std::vector<double>{0.6, 0.4});
    CHECK(gw.beats(0, 1));
    CHECK(gw.beats(0, 2));
    CHECK(gw.beats(1, 2));

    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        std::vector<Ranking> rs;
        std::vector<double> w;
        for (int i = 0; i < 6; ++i) {
            rs.push_back(th::random_ranking(rng, 5));
            w.push_back(u(rng));
        }
        const auto p = make_profile(rs);
        const auto gg = majority_graph(p.pairwise, w);
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b)
                if (a != b) REQUIRE(gg.share(a, b) + gg.share(b, a) == 1.0);
    }
    CHECK_THROWS_AS(majority_graph(two.pairwise, std::vector<double>{1.0, -0.5}), invalid_parameter_error);
}

TEST_CASE("score rules") {
    const auto unanimous = profile_of({"cadb", "cadb", "cadb"});
    const auto w = uniform_weights(3).weights;
    for (Rule r : {Rule::borda, Rule::copeland, Rule::kemeny, Rule::kemeny_weighted_graph, Rule::best_dictator,
                   Rule::random_dictator})
        CHECK(aggregate_rankings(r, unanimous, w, 5) == rk("cadb"));

    // Borda positions: a = 0+0+1, b = 1+1+2, c = 2+2+0
    const auto p = profile_of({"abc", "abc", "cab"});
    for (Seed s = 0; s < 10; ++s) CHECK(aggregate_rankings(Rule::borda, p, w, s).order.front() == 0);
    // weighted: a = 0.8, b = 0.6, c = 1.6
    const auto q = profile_of({"abc", "abc", "bca"});
    CHECK(aggregate_rankings(Rule::borda, q, std::vector<double>{0.3, 0.3, 0.4}, 1) == rk("bac"));

    const auto two = profile_of({"abc", "cba"});
    CHECK(aggregate_rankings(Rule::best_dictator, two, std::vector<double>{0.1, 0.9}, 3) == rk("cba"));

    // plurality over rankings: a tops twice, c once; b never
    CHECK(aggregate_rankings(Rule::plurality_rank, p, w, 2).order.front() == 0);
    CHECK(aggregate_rankings(Rule::plurality_rank, p, w, 2).order[1] == 2);
    // veto: c is bottom twice, b once
    CHECK(aggregate_rankings(Rule::veto, p, w, 2) == rk("abc"));

    // random dictator picks proportionally to weight
    std::map<std::vector<int>, int> hits;
    for (Seed s = 0; s < 4000; ++s) hits[aggregate_rankings(Rule::random_dictator, two, std::vector<double>{0.25, 0.75}, s).order]++;
    CHECK(hits[rk("cba").order] / 4000.0 == Approx(0.75).margin(0.03));
}

TEST_CASE("rule identifiers") {
    for (const char* id : {"mean", "plurality", "borda", "copeland", "kemeny", "kemeny-weighted-graph", "plurality-rank",
                           "veto", "best-dictator", "random-dictator"})
        CHECK(to_string(parse_rule(id)) == id);
    CHECK_THROWS_AS(parse_rule("schulze"), config_error);
    CHECK(rule_fits(Rule::mean, Domain::continuous));
    CHECK_FALSE(rule_fits(Rule::mean, Domain::ranking));
    CHECK_FALSE(rule_fits(Rule::borda, Domain::categorical));
}

TEST_CASE("Kemeny examples") {
    const auto p = profile_of({"abc", "abc", "cab"});
    CHECK(aggregate_rankings(Rule::kemeny, p, uniform_weights(3).weights, 1) == rk("abc"));

    // Condorcet cycle: three rankings at Hamming distance 1/3 from y0.
    const auto cyc = profile_of({"abc", "bca", "cab"});
    std::set<std::vector<int>> outs;
    for (Seed s = 0; s < 60; ++s) {
        const auto r = aggregate_rankings(Rule::kemeny, cyc, uniform_weights(3).weights, s);
        const auto y0 = PairwiseVector{3, {1, -1, 1}};
        REQUIRE(dist_kendall(to_pairwise(r), y0) == Approx(1.0 / 3.0));
        outs.insert(r.order);
    }
    CHECK(outs == std::set<std::vector<int>>{rk("abc").order, rk("bca").order, rk("cab").order});

    std::vector<PairwiseVector> nine{to_pairwise(identity_ranking(9)), to_pairwise(identity_ranking(9))};
    CHECK_THROWS_AS(kemeny(nine, std::vector<double>{1, 1}, KemenyVariant::unweighted_graph, 1), exceeds_exact_search_error);
}

TEST_CASE("Kemeny matches the brute-force oracle on weighted profiles") {
    Rng rng(2024);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::uniform_int_distribution<int> nn(3, 9);
    for (int c : {3, 4, 5}) {
        for (int t = 0; t < 60; ++t) {
            const int n = nn(rng);
            std::vector<Ranking> rs;
            std::vector<double> w;
            for (int i = 0; i < n; ++i) {
                rs.push_back(th::random_ranking(rng, c));
                w.push_back(u(rng));
            }
            const auto p = make_profile(rs);
            const auto prefs = prefs_of(p);
            const auto ow = oracle::kemeny_weighted(prefs, w, c);
            const auto rw = kemeny(p.pairwise, w, KemenyVariant::weighted_graph, t);
            CHECK(std::find(ow.minimizers.begin(), ow.minimizers.end(), rw.order) != ow.minimizers.end());

            const auto om = oracle::kemeny_majority(prefs, w, c);
            const auto rm = kemeny(p.pairwise, w, KemenyVariant::unweighted_graph, t);
            CHECK(std::find(om.minimizers.begin(), om.minimizers.end(), rm.order) != om.minimizers.end());
        }
    }
}

TEST_CASE("Kemeny output is transitive and minimal over all rankings") {
    Rng rng(9);
    for (int c = 3; c <= 5; ++c)
        for (int t = 0; t < 20; ++t) {
            std::vector<PairwiseVector> prof;
            std::bernoulli_distribution coin(0.5);
            for (int i = 0; i < 5; ++i) {
                PairwiseVector x{c, {}};
                for (std::size_t p = 0; p < pair_count(c); ++p) x.entries.push_back(coin(rng) ? 1 : -1);
                prof.push_back(x);
            }
            const std::vector<double> w(5, 0.2);
            const auto r = kemeny(prof, w, KemenyVariant::unweighted_graph, t);
            REQUIRE(is_transitive(to_pairwise(r)));
            // n odd with equal weights: y0 has no zero entries
            PairwiseVector y0{c, std::vector<std::int8_t>(pair_count(c))};
            for (std::size_t p = 0; p < pair_count(c); ++p) {
                int s = 0;
                for (const auto& x : prof) s += x.entries[p];
                y0.entries[p] = s > 0 ? 1 : -1;
            }
            const double best = dist_kendall(to_pairwise(r), y0);
            for (const auto& o : oracle::all_orders(c)) REQUIRE(best <= dist_kendall(to_pairwise(Ranking{o}), y0) + 1e-12);
        }
}

TEST_CASE("positive rescaling leaves every rule's output unchanged") {
    Rng rng(31);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int t = 0; t < 30; ++t) {
        std::vector<Ranking> rs;
        std::vector<double> w, w7;
        for (int i = 0; i < 7; ++i) {
            rs.push_back(th::random_ranking(rng, 4));
            w.push_back(u(rng));
            w7.push_back(7.0 * w.back());
        }
        const auto p = make_profile(rs);
        for (Rule r : all_ranking_rules()) {
            if (r == Rule::random_dictator) continue;  // distributional only
            CHECK(aggregate_rankings(r, p, w, t) == aggregate_rankings(r, p, w7, t));
        }
        const auto inst = th::random_categorical(rng, 7, 4, 3);
        CHECK(agg_plurality(inst.categorical().answers, w, t) == agg_plurality(inst.categorical().answers, w7, t));
    }
}

TEST_CASE("profiles project non-transitive answers") {
    const PairwiseVector cycle{3, {1, -1, 1}};
    const auto p = make_profile(std::vector<PairwiseVector>{cycle, to_pairwise(rk("abc"))}, 4);
    CHECK(p.projected == 1);
    CHECK(p.pairwise[0] == cycle);
    CHECK(dist_kendall(to_pairwise(p.rankings[0]), cycle) == Approx(1.0 / 3.0));
    CHECK(p.rankings[1] == rk("abc"));
}
