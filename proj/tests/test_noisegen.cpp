#include <catch_amalgamated.hpp>

#include <map>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace proxytd;
using Catch::Approx;

TEST_CASE("sample_population: point mass") {
    const auto pop = sample_population(ProtoPopulation::point_mass(0.3), 5, 1);
    CHECK(pop.faults == std::vector<double>(5, 0.3));
    // degenerate clip bounds act as a point mass too
    const auto pinned = sample_population(ProtoPopulation::normal(0.5, 0.2, 0.4, 0.4), 4, 9);
    CHECK(pinned.faults == std::vector<double>(4, 0.4));
}

TEST_CASE("sample_population: clipped normal mean matches numeric integration") {
    const auto proto = ProtoPopulation::normal(0.45, 0.1, 0.0, 1.0);
    const auto pop = sample_population(proto, 10000, 17);
    for (double f : pop.faults) REQUIRE((f >= 0.0 && f <= 1.0));
    CHECK(th::mean(pop.faults) == Approx(oracle::clipped_normal_mean(0.45, 0.1, 0.0, 1.0)).margin(0.01));

    // heavy clipping moves the mean well away from the nominal one
    const auto skew = ProtoPopulation::normal(1.0, 1.0, 0.1, std::numeric_limits<double>::infinity());
    const double expect = oracle::clipped_normal_mean(1.0, 1.0, 0.1, 12.0);
    CHECK(th::mean(sample_population(skew, 10000, 2).faults) == Approx(expect).margin(0.03));
}

TEST_CASE("sample_population: seeds") {
    const auto proto = ProtoPopulation::uniform(0.1, 0.4);
    CHECK(sample_population(proto, 50, 1).faults == sample_population(proto, 50, 1).faults);
    CHECK(sample_population(proto, 50, 1).faults != sample_population(proto, 50, 2).faults);
    CHECK_THROWS_AS(sample_population(proto, 1, 1), insufficient_workers_error);
}

TEST_CASE("proto-population moments and parsing") {
    CHECK(ProtoPopulation::uniform(0.1, 0.4).mean() == Approx(0.25));
    CHECK(ProtoPopulation::uniform(0.0, 1.0).variance() == Approx(1.0 / 12.0));
    CHECK(ProtoPopulation::normal(0.45, 0.1, 0, 1).variance() == Approx(0.01));
    CHECK(ProtoPopulation::bimodal(0.5, 0.1, 0.5).mean() == Approx(0.3));
    CHECK(ProtoPopulation::bimodal(0.5, 0.1, 0.5).variance() == Approx(0.04));
    CHECK(ProtoPopulation::triangular(0.0, 0.5, 1.0).mean() == Approx(0.5));

    const auto p = parse_proto("normal:0.45,0.1");
    CHECK(p.kind == ProtoKind::normal);
    CHECK(p.params == std::vector<double>{0.45, 0.1});
    CHECK_THROWS_AS(parse_proto("normal:0.45"), config_error);
    CHECK_THROWS_AS(parse_proto("cauchy:0,1"), config_error);
    CHECK_THROWS_AS(ProtoPopulation::normal(0, 1, 1, 0), config_error);

    Rng rng(4);
    for (const auto& proto : {ProtoPopulation::triangular(0.1, 0.2, 0.6), ProtoPopulation::bimodal(0.3, 0.1, 0.9),
                              ProtoPopulation::normal(0.5, 1.0, 0.2, 0.7)})
        for (int i = 0; i < 2000; ++i) {
            const double x = proto.sample(rng);
            REQUIRE((x >= proto.lo && x <= proto.hi));
        }
}

TEST_CASE("gen_inn") {
    const ContinuousAnswer z{{1.0, -2.0, 3.0}};
    const auto quiet = gen_inn(z, Population{{1e-12, 1e-12}}, 1);
    for (const auto& a : quiet.continuous().answers)
        for (std::size_t j = 0; j < 3; ++j) CHECK(a.values[j] == Approx(z.values[j]).margin(1e-4));

    const auto big = gen_inn(ContinuousAnswer{std::vector<double>(100000, 0.0)}, Population{{1.0, 1.0}}, 2);
    CHECK(dist_continuous(big.continuous().answers[0], *big.continuous().truth) == Approx(1.0).margin(0.02));

    // two workers with the same fault: per-coordinate errors pass a KS test
    const auto& a = big.continuous().answers;
    const std::vector<double> e0(a[0].values.begin(), a[0].values.begin() + 5000);
    const std::vector<double> e1(a[1].values.begin(), a[1].values.begin() + 5000);
    CHECK(oracle::ks_stat(e0, e1) < oracle::ks_crit_001(5000, 5000));

    CHECK_THROWS_AS(gen_inn(z, Population{{1.0, 0.0}}, 1), invalid_fault_error);
    CHECK_THROWS_AS(gen_inn(z, Population{{1.0, -1.0}}, 1), invalid_fault_error);
}

TEST_CASE("gen_ier") {
    const CategoricalAnswer z{{0, 1, 1, 0, 1}, 2};
    CHECK(gen_ier(z, Population{{0.0, 0.0}}, 1).categorical().answers[0] == z);
    const auto flipped = gen_ier(z, Population{{1.0, 1.0}}, 1).categorical().answers[1];
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(flipped.labels[j] == 1 - z.labels[j]);

    // k = 4, f = 0.5: every wrong label has frequency f / (k-1) = 1/6
    const std::size_t m = 100000;
    const CategoricalAnswer z4{std::vector<int>(m, 2), 4};
    const auto inst = gen_ier(z4, Population{{0.5, 0.5}}, 5);
    std::map<int, double> freq;
    for (int l : inst.categorical().answers[0].labels) freq[l] += 1.0 / m;
    CHECK(freq[2] == Approx(0.5).margin(0.01));
    for (int l : {0, 1, 3}) CHECK(freq[l] == Approx(1.0 / 6.0).margin(0.01));

    CHECK_THROWS_AS(gen_ier(z, Population{{0.2, 1.2}}, 1), invalid_fault_error);
}

TEST_CASE("gen_icn") {
    const Ranking z = th::rk("abcd");
    CHECK(gen_icn(z, Population{{0.0, 0.0}}, 1).ranking().answers[0] == to_pairwise(z));

    // c = 3, f = 0.5: all 8 pairwise vectors equally likely
    const std::size_t n = 100000;
    const auto inst = gen_icn(th::rk("abc"), Population{std::vector<double>(n, 0.5)}, 7);
    std::vector<double> counts(8, 0.0);
    for (const auto& x : inst.ranking().answers) {
        int code = 0;
        for (auto e : x.entries) code = code * 2 + (e > 0);
        counts[code] += 1.0;
    }
    CHECK(oracle::chi2_stat(counts, std::vector<double>(8, n / 8.0)) < oracle::chi2_crit_001(7));

    // marginal flip rate per pair equals f
    const auto inst2 = gen_icn(z, Population{std::vector<double>(n, 0.3)}, 8);
    const auto zx = to_pairwise(z);
    for (std::size_t p = 0; p < zx.size(); ++p) {
        double flips = 0.0;
        for (const auto& x : inst2.ranking().answers) flips += x.entries[p] != zx.entries[p];
        CHECK(flips / n == Approx(0.3).margin(0.01));
    }
    CHECK_THROWS_AS(gen_icn(z, Population{{0.1, -0.1}}, 1), invalid_fault_error);
}

TEST_CASE("Mallows sampler") {
    const Ranking z = th::rk("abc");
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) REQUIRE(sample_mallows(z, 1e-9, rng) == z);
    CHECK_THROWS_AS(sample_mallows(z, 0.0, rng), invalid_parameter_error);
    CHECK_THROWS_AS(sample_mallows(z, -1.0, rng), invalid_parameter_error);

    SECTION("phi = 1 is uniform (chi-square)") {
        Rng r(10);
        std::map<std::vector<int>, double> counts;
        const int draws = 60000;
        for (int i = 0; i < draws; ++i) counts[sample_mallows(z, 1.0, r).order] += 1.0;
        REQUIRE(counts.size() == 6);
        std::vector<double> obs;
        for (auto& [o, c] : counts) obs.push_back(c);
        CHECK(oracle::chi2_stat(obs, std::vector<double>(6, draws / 6.0)) < oracle::chi2_crit_001(5));
    }

    SECTION("frequencies match the enumerated distribution") {
        for (int c : {3, 4})
            for (double phi : {0.3, 0.5, 1.0}) {
                const Ranking truth = c == 3 ? th::rk("bca") : th::rk("dbac");
                const auto pmf = oracle::mallows_pmf(truth.order, phi);
                Rng r(100 + c);
                std::map<std::vector<int>, double> freq;
                const int draws = 100000;
                for (int i = 0; i < draws; ++i) freq[sample_mallows(truth, phi, r).order] += 1.0 / draws;
                double tv = 0.0;
                for (const auto& [o, p] : pmf) {
                    tv += 0.5 * std::abs(freq[o] - p);
                    CHECK(freq[o] == Approx(p).margin(0.01));
                }
                CHECK(tv < 0.02);
            }
    }
}

TEST_CASE("ICN conditioned on transitivity is Mallows with phi = f/(1-f)") {
    const double f = 0.3;
    const Ranking z = th::rk("abc");
    const auto inst = gen_icn(z, Population{std::vector<double>(200000, f)}, 77);
    std::map<std::vector<int>, double> freq;
    double kept = 0.0;
    for (const auto& x : inst.ranking().answers)
        if (is_transitive(x)) {
            freq[from_pairwise(x).order] += 1.0;
            kept += 1.0;
        }
    const auto pmf = oracle::mallows_pmf(z.order, condorcet_phi(f));
    double tv = 0.0;
    for (const auto& [o, p] : pmf) tv += 0.5 * std::abs(freq[o] / kept - p);
    CHECK(tv < 0.02);
}

TEST_CASE("phi <-> fault transforms") {
    CHECK(phi_from_fault(0.5) == 1.0);
    CHECK(fault_from_phi(1.0 / 3.0) == Approx(0.75));
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 100; ++i) {
        const double f = u(rng);
        CHECK(fault_from_phi(phi_from_fault(f)) == Approx(f).epsilon(1e-12));
        CHECK(condorcet_fault(condorcet_phi(f)) == Approx(f).epsilon(1e-12));
    }
    CHECK_THROWS_AS(phi_from_fault(0.0), invalid_parameter_error);
    CHECK_THROWS_AS(phi_from_fault(1.0), invalid_parameter_error);
    CHECK_THROWS_AS(fault_from_phi(0.0), invalid_parameter_error);
}

TEST_CASE("generate_instance is deterministic per seed") {
    for (auto kind : {NoiseKind::inn, NoiseKind::ier, NoiseKind::icn, NoiseKind::mallows}) {
        NoiseModelSpec spec;
        spec.kind = kind;
        spec.width = 5;
        spec.k = 3;
        spec.proto = kind == NoiseKind::inn       ? ProtoPopulation::normal(1, 1, 0.1, 5)
                     : kind == NoiseKind::mallows ? ProtoPopulation::normal(0.85, 0.15, 0.05, 3)
                                                  : ProtoPopulation::uniform(0.1, 0.4);
        const auto a = generate_instance(spec, 12, 99), b = generate_instance(spec, 12, 99);
        CHECK(a == b);
        CHECK_FALSE(a == generate_instance(spec, 12, 100));
        CHECK(a.domain() == spec.domain());
        CHECK(a.workers() == 12);
        CHECK(a.width() == 5);
        CHECK(a.has_truth());
        CHECK(a.faults.has_value());
        validate(a);
    }
}

TEST_CASE("mean distance to truth increases with the fault level") {
    const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto check_increasing = [&](auto&& distance_at) {
        double prev = -1.0;
        for (double f : grid) {
            const double d = distance_at(f);
            CHECK(d > prev);
            prev = d;
        }
    };
    const std::size_t samples = 10000;
    SECTION("INN") {
        check_increasing([&](double f) {
            const auto inst = gen_inn(ContinuousAnswer{std::vector<double>(4, 0.0)},
                                      Population{std::vector<double>(samples, f)}, 1);
            return th::mean(empirical_faults(inst));
        });
    }
    SECTION("IER") {
        check_increasing([&](double f) {
            const auto inst =
                gen_ier(CategoricalAnswer{{0, 1, 2, 0}, 3}, Population{std::vector<double>(samples, f)}, 2);
            return th::mean(empirical_faults(inst));
        });
    }
    SECTION("ICN") {
        check_increasing([&](double f) {
            return th::mean(empirical_faults(gen_icn(th::rk("abcd"), Population{std::vector<double>(samples, f)}, 3)));
        });
    }
    SECTION("Mallows") {
        check_increasing([&](double f) {
            const auto inst = gen_mallows(th::rk("abcd"), std::vector<double>(samples, condorcet_phi(f)), 4);
            return th::mean(empirical_faults(inst));
        });
    }
}

TEST_CASE("noise spec JSON round trip") {
    NoiseModelSpec spec;
    spec.kind = NoiseKind::inn;
    spec.width = 15;
    spec.proto = ProtoPopulation::normal(1.0, 1.0, 0.1, std::numeric_limits<double>::infinity());
    spec.truth = TruthPolicy::random;
    const auto j = to_json(spec);
    const auto back = noise_spec_from_json(j);
    CHECK(back.kind == spec.kind);
    CHECK(back.width == 15);
    CHECK(back.proto.params == spec.proto.params);
    CHECK(back.proto.lo == 0.1);
    CHECK(std::isinf(back.proto.hi));
    CHECK(back.truth == TruthPolicy::random);
    CHECK(to_json(back) == j);

    const auto r = noise_spec_from_json(nlohmann::json::parse(
        R"({"kind": "mallows", "c": 4, "proto": {"kind": "normal", "params": [0.85, 0.15], "clip": [0.05, 3]}})"));
    CHECK(r.kind == NoiseKind::mallows);
    CHECK(r.width == 4);
    CHECK_THROWS(noise_spec_from_json(nlohmann::json::parse(R"({"kind": "ier", "m": 5, "k": 1,
        "proto": {"kind": "uniform", "params": [0, 1]}})")));
}

TEST_CASE("noise spec invariants") {
    NoiseModelSpec spec;
    spec.kind = NoiseKind::icn;
    spec.width = 1;
    CHECK_THROWS_AS(spec.check(), config_error);
    spec.kind = NoiseKind::ier;
    spec.k = 1;
    CHECK_THROWS_AS(spec.check(), config_error);
}
