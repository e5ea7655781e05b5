#pragma once

// Proto-populations, population sampling, and the four synthetic noise models
// (independent normal, independent error, independent Condorcet, Mallows).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "proxytd/core.hpp"
#include "proxytd/errors.hpp"
#include "proxytd/random.hpp"

namespace proxytd {

enum class ProtoKind { normal, uniform, triangular, bimodal, point_mass };

inline std::string to_string(ProtoKind k) {
    switch (k) {
        case ProtoKind::normal: return "normal";
        case ProtoKind::uniform: return "uniform";
        case ProtoKind::triangular: return "triangular";
        case ProtoKind::bimodal: return "bimodal";
        case ProtoKind::point_mass: return "point-mass";
    }
    return "unknown";
}

inline ProtoKind parse_proto_kind(const std::string& s) {
    if (s == "normal") return ProtoKind::normal;
    if (s == "uniform") return ProtoKind::uniform;
    if (s == "triangular") return ProtoKind::triangular;
    if (s == "bimodal") return ProtoKind::bimodal;
    if (s == "point-mass" || s == "point") return ProtoKind::point_mass;
    throw config_error("unknown proto-population kind '" + s + "'");
}

// A distribution over fault levels. Draws are clipped (not resampled) into
// [lo, hi].
//
//   normal      params = {mean, stddev}
//   uniform     params = {a, b}
//   triangular  params = {a, mode, b}
//   bimodal     params = {p, x, y}: x with probability p, otherwise y
//   point-mass  params = {x}
struct ProtoPopulation {
    ProtoKind kind = ProtoKind::point_mass;
    std::vector<double> params{0.0};
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    static ProtoPopulation normal(double mean, double stddev, double lo, double hi) {
        return make(ProtoKind::normal, {mean, stddev}, lo, hi);
    }
    static ProtoPopulation uniform(double a, double b) { return make(ProtoKind::uniform, {a, b}, a, b); }
    static ProtoPopulation triangular(double a, double mode, double b) {
        return make(ProtoKind::triangular, {a, mode, b}, a, b);
    }
    static ProtoPopulation bimodal(double p, double x, double y) {
        return make(ProtoKind::bimodal, {p, x, y}, std::min(x, y), std::max(x, y));
    }
    static ProtoPopulation point_mass(double x) { return make(ProtoKind::point_mass, {x}, x, x); }

    static ProtoPopulation make(ProtoKind kind, std::vector<double> params, double lo, double hi) {
        ProtoPopulation p{kind, std::move(params), lo, hi};
        p.check();
        return p;
    }

    void check() const {
        const std::size_t want = kind == ProtoKind::normal || kind == ProtoKind::uniform ? 2
                                 : kind == ProtoKind::point_mass                          ? 1
                                                                                          : 3;
        if (params.size() != want)
            throw config_error(to_string(kind) + " proto-population needs " + std::to_string(want) + " parameters");
        for (double v : params)
            if (!std::isfinite(v)) throw config_error("proto-population parameters must be finite");
        if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw config_error("proto-population clip bounds need lo <= hi");
        switch (kind) {
            case ProtoKind::normal:
                if (params[1] < 0) throw config_error("normal stddev must be >= 0");
                break;
            case ProtoKind::uniform:
                if (params[0] > params[1]) throw config_error("uniform needs a <= b");
                break;
            case ProtoKind::triangular:
                if (!(params[0] <= params[1] && params[1] <= params[2]))
                    throw config_error("triangular needs a <= mode <= b");
                break;
            case ProtoKind::bimodal:
                if (params[0] < 0 || params[0] > 1) throw config_error("bimodal mixing weight must be in [0,1]");
                break;
            case ProtoKind::point_mass: break;
        }
    }

    // Mean of the unclipped distribution.
    double mean() const {
        switch (kind) {
            case ProtoKind::normal: return params[0];
            case ProtoKind::uniform: return 0.5 * (params[0] + params[1]);
            case ProtoKind::triangular: return (params[0] + params[1] + params[2]) / 3.0;
            case ProtoKind::bimodal: return params[0] * params[1] + (1 - params[0]) * params[2];
            case ProtoKind::point_mass: return params[0];
        }
        return 0.0;
    }

    // Variance of the unclipped distribution.
    double variance() const {
        switch (kind) {
            case ProtoKind::normal: return params[1] * params[1];
            case ProtoKind::uniform: {
                const double w = params[1] - params[0];
                return w * w / 12.0;
            }
            case ProtoKind::triangular: {
                const double a = params[0], c = params[1], b = params[2];
                return (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0;
            }
            case ProtoKind::bimodal: {
                const double d = params[1] - params[2];
                return params[0] * (1 - params[0]) * d * d;
            }
            case ProtoKind::point_mass: return 0.0;
        }
        return 0.0;
    }

    double sample(Rng& rng) const {
        double x = 0.0;
        switch (kind) {
            case ProtoKind::normal:
                x = params[1] == 0.0 ? params[0] : std::normal_distribution<double>(params[0], params[1])(rng);
                break;
            case ProtoKind::uniform:
                x = params[0] + (params[1] - params[0]) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                break;
            case ProtoKind::triangular: {
                const double a = params[0], c = params[1], b = params[2];
                const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                if (b == a) {
                    x = a;
                } else {
                    const double split = (c - a) / (b - a);
                    x = u < split ? a + std::sqrt(u * (b - a) * (c - a))
                                  : b - std::sqrt((1 - u) * (b - a) * (b - c));
                }
                break;
            }
            case ProtoKind::bimodal:
                x = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < params[0] ? params[1] : params[2];
                break;
            case ProtoKind::point_mass: x = params[0]; break;
        }
        return std::clamp(x, lo, hi);
    }
};

// Parses "normal:0.45,0.1" style descriptors. Clip bounds default to the
// distribution's natural support (unbounded for normal).
inline ProtoPopulation parse_proto(const std::string& text) {
    const auto colon = text.find(':');
    const ProtoKind kind = parse_proto_kind(text.substr(0, colon));
    std::vector<double> params;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                params.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw config_error("bad proto-population parameter '" + tok + "'");
            }
        }
    }
    switch (kind) {
        case ProtoKind::normal:
            if (params.size() != 2) throw config_error("normal needs mean,stddev");
            return ProtoPopulation::normal(params[0], params[1], -std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity());
        case ProtoKind::uniform:
            if (params.size() != 2) throw config_error("uniform needs a,b");
            return ProtoPopulation::uniform(params[0], params[1]);
        case ProtoKind::triangular:
            if (params.size() != 3) throw config_error("triangular needs a,mode,b");
            return ProtoPopulation::triangular(params[0], params[1], params[2]);
        case ProtoKind::bimodal:
            if (params.size() != 3) throw config_error("bimodal needs p,x,y");
            return ProtoPopulation::bimodal(params[0], params[1], params[2]);
        case ProtoKind::point_mass:
            if (params.size() != 1) throw config_error("point-mass needs x");
            return ProtoPopulation::point_mass(params[0]);
    }
    throw config_error("unreachable proto kind");
}

struct Population {
    std::vector<double> faults;
};

inline Population sample_population(const ProtoPopulation& proto, std::size_t n, Seed seed) {
    if (n < 2) throw insufficient_workers_error("population needs at least 2 workers");
    proto.check();
    Rng rng = make_rng(seed);
    Population pop;
    pop.faults.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pop.faults.push_back(proto.sample(rng));
    return pop;
}

// ---------------------------------------------------------------------------
// Mallows <-> Condorcet parameterization

inline double phi_from_fault(double f) {
    if (!(f > 0.0 && f < 1.0)) throw invalid_parameter_error("fault level must lie in (0,1) to map to phi");
    return (1.0 - f) / f;
}

inline double fault_from_phi(double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi)) throw invalid_parameter_error("phi must be positive and finite");
    return 1.0 / (1.0 + phi);
}

// ICN with flip probability f, conditioned on a transitive outcome, is
// Mallows with phi = f / (1 - f): the density is proportional to
// (f / (1 - f))^d. This is the mapping used for the fault levels stored on
// Mallows instances, so that larger faults mean noisier rankings.
inline double condorcet_phi(double f) {
    if (!(f > 0.0 && f < 1.0)) throw invalid_parameter_error("fault level must lie in (0,1) to map to phi");
    return f / (1.0 - f);
}

inline double condorcet_fault(double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi)) throw invalid_parameter_error("phi must be positive and finite");
    return phi / (1.0 + phi);
}

// ---------------------------------------------------------------------------
// Generators. Worker i draws from its own stream derive_seed(seed, i).

inline Instance gen_inn(const ContinuousAnswer& z, const Population& pop, Seed seed) {
    if (z.size() == 0) throw shape_error("ground truth is empty");
    for (double f : pop.faults)
        if (!(f > 0.0) || !std::isfinite(f)) throw invalid_fault_error("INN fault levels must be positive");
    ContinuousData data;
    data.truth = z;
    data.answers.reserve(pop.faults.size());
    for (std::size_t i = 0; i < pop.faults.size(); ++i) {
        Rng rng = make_rng(derive_seed(seed, i));
        std::normal_distribution<double> noise(0.0, std::sqrt(pop.faults[i]));
        ContinuousAnswer a{z.values};
        for (double& v : a.values) v += noise(rng);
        data.answers.push_back(std::move(a));
    }
    return Instance{std::move(data), pop.faults};
}

inline void check_unit_faults(const Population& pop) {
    for (double f : pop.faults)
        if (!(f >= 0.0 && f <= 1.0)) throw invalid_fault_error("fault levels must lie in [0,1]");
}

inline Instance gen_ier(const CategoricalAnswer& z, const Population& pop, Seed seed) {
    if (z.k < 2) throw shape_error("IER needs k >= 2");
    if (z.size() == 0) throw shape_error("ground truth is empty");
    check_unit_faults(pop);
    CategoricalData data;
    data.k = z.k;
    data.truth = z;
    data.answers.reserve(pop.faults.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> other(1, z.k - 1);
    for (std::size_t i = 0; i < pop.faults.size(); ++i) {
        Rng rng = make_rng(derive_seed(seed, i));
        CategoricalAnswer a{z.labels, z.k};
        for (int& label : a.labels)
            if (unit(rng) < pop.faults[i]) label = (label + other(rng)) % z.k;
        data.answers.push_back(std::move(a));
    }
    return Instance{std::move(data), pop.faults};
}

inline Instance gen_icn(const Ranking& z, const Population& pop, Seed seed) {
    if (z.candidates() < 2 || !is_permutation_of_candidates(z.order)) throw shape_error("ICN needs a valid ranking");
    check_unit_faults(pop);
    const PairwiseVector truth = to_pairwise(z);
    RankingData data;
    data.candidates = z.candidates();
    data.truth = z;
    data.answers.reserve(pop.faults.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < pop.faults.size(); ++i) {
        Rng rng = make_rng(derive_seed(seed, i));
        PairwiseVector s = truth;
        for (auto& e : s.entries)
            if (unit(rng) < pop.faults[i]) e = static_cast<std::int8_t>(-e);
        data.answers.push_back(std::move(s));
    }
    return Instance{std::move(data), pop.faults};
}

// One exact Mallows draw by repeated insertion: the i-th candidate of z is
// inserted at slot j in {0..i} with probability proportional to phi^(i-j).
inline Ranking sample_mallows(const Ranking& z, double phi, Rng& rng) {
    if (!(phi > 0.0) || !std::isfinite(phi)) throw invalid_parameter_error("Mallows phi must be positive");
    std::vector<int> out;
    out.reserve(z.order.size());
    std::vector<double> weight;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < z.order.size(); ++i) {
        weight.assign(i + 1, 0.0);
        double p = 1.0;
        for (std::size_t j = i + 1; j-- > 0;) {
            weight[j] = p;
            p *= phi;
        }
        const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
        double u = unit(rng) * total;
        std::size_t slot = i;
        for (std::size_t j = 0; j <= i; ++j) {
            if (u < weight[j]) {
                slot = j;
                break;
            }
            u -= weight[j];
        }
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(slot), z.order[i]);
    }
    return Ranking{std::move(out)};
}

// Instance faults are recorded as condorcet_fault(phi_i).
inline Instance gen_mallows(const Ranking& z, const std::vector<double>& phis, Seed seed) {
    if (z.candidates() < 2 || !is_permutation_of_candidates(z.order)) throw shape_error("Mallows needs a valid ranking");
    RankingData data;
    data.candidates = z.candidates();
    data.truth = z;
    std::vector<double> faults;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        Rng rng = make_rng(derive_seed(seed, i));
        data.answers.push_back(to_pairwise(sample_mallows(z, phis[i], rng)));
        faults.push_back(condorcet_fault(phis[i]));
    }
    return Instance{std::move(data), std::move(faults)};
}

// ---------------------------------------------------------------------------
// Noise model specs

enum class NoiseKind { inn, ier, icn, mallows };
enum class TruthPolicy { standard, random };

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::inn: return "inn";
        case NoiseKind::ier: return "ier";
        case NoiseKind::icn: return "icn";
        case NoiseKind::mallows: return "mallows";
    }
    return "unknown";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "inn" || s == "INN") return NoiseKind::inn;
    if (s == "ier" || s == "IER") return NoiseKind::ier;
    if (s == "icn" || s == "ICN") return NoiseKind::icn;
    if (s == "mallows" || s == "Mallows") return NoiseKind::mallows;
    throw config_error("unknown noise model '" + s + "'");
}

inline Domain domain_of(NoiseKind k) {
    switch (k) {
        case NoiseKind::inn: return Domain::continuous;
        case NoiseKind::ier: return Domain::categorical;
        case NoiseKind::icn:
        case NoiseKind::mallows: return Domain::ranking;
    }
    return Domain::continuous;
}

// For Mallows the proto-population is over phi rather than fault level.
//
// Truth policy "standard": zero vector (INN), uniform random labels (IER),
// identity permutation (ICN/Mallows). "random" draws every truth at random.
struct NoiseModelSpec {
    NoiseKind kind = NoiseKind::ier;
    std::size_t width = 10;  // m questions, or c candidates for rankings
    int k = 2;
    ProtoPopulation proto = ProtoPopulation::point_mass(0.3);
    TruthPolicy truth = TruthPolicy::standard;

    Domain domain() const { return domain_of(kind); }

    void check() const {
        proto.check();
        if (width < 1) throw config_error("noise model needs m >= 1");
        if (kind == NoiseKind::ier && k < 2) throw config_error("IER needs k >= 2");
        if ((kind == NoiseKind::icn || kind == NoiseKind::mallows) && width < 2)
            throw config_error("ranking noise models need c >= 2");
        if ((kind == NoiseKind::icn || kind == NoiseKind::mallows) && width > 26)
            throw config_error("ranking noise models support at most 26 candidates");
    }
};

inline Instance generate_instance(const NoiseModelSpec& spec, std::size_t n, Seed seed) {
    spec.check();
    const Population pop = sample_population(spec.proto, n, derive_seed(seed, 0));
    Rng truth_rng = make_rng(derive_seed(seed, 1));
    const Seed answer_seed = derive_seed(seed, 2);
    const std::size_t m = spec.width;
    switch (spec.kind) {
        case NoiseKind::inn: {
            ContinuousAnswer z{std::vector<double>(m, 0.0)};
            if (spec.truth == TruthPolicy::random) {
                std::normal_distribution<double> nd(0.0, 1.0);
                for (double& v : z.values) v = nd(truth_rng);
            }
            return gen_inn(z, pop, answer_seed);
        }
        case NoiseKind::ier: {
            CategoricalAnswer z{std::vector<int>(m, 0), spec.k};
            std::uniform_int_distribution<int> label(0, spec.k - 1);
            for (int& l : z.labels) l = label(truth_rng);
            return gen_ier(z, pop, answer_seed);
        }
        case NoiseKind::icn:
        case NoiseKind::mallows: {
            Ranking z = identity_ranking(static_cast<int>(m));
            if (spec.truth == TruthPolicy::random) std::shuffle(z.order.begin(), z.order.end(), truth_rng);
            if (spec.kind == NoiseKind::icn) return gen_icn(z, pop, answer_seed);
            return gen_mallows(z, pop.faults, answer_seed);
        }
    }
    throw config_error("unreachable noise kind");
}

// ---------------------------------------------------------------------------
// JSON experiment-config block:
//   {"kind": "ier", "m": 50, "k": 2,
//    "proto": {"kind": "normal", "params": [0.45, 0.1], "clip": [0, 1]},
//    "truth": "standard"}
// Rankings may use "c" in place of "m". Infinite clip bounds are written as
// the strings "-inf" / "inf".

inline nlohmann::json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double bound_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw config_error("bad clip bound '" + s + "'");
    }
    if (!j.is_number()) throw config_error("clip bounds must be numbers or \"inf\"");
    return j.get<double>();
}

inline nlohmann::json to_json(const ProtoPopulation& p) {
    return {{"kind", to_string(p.kind)}, {"params", p.params}, {"clip", {bound_to_json(p.lo), bound_to_json(p.hi)}}};
}

inline ProtoPopulation proto_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("proto must be an object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw config_error("proto.kind is required");
    const ProtoKind kind = parse_proto_kind(j["kind"].get<std::string>());
    if (!j.contains("params") || !j["params"].is_array()) throw config_error("proto.params must be an array");
    std::vector<double> params;
    for (const auto& v : j["params"]) {
        if (!v.is_number()) throw config_error("proto.params entries must be numbers");
        params.push_back(v.get<double>());
    }
    ProtoPopulation p;
    p.kind = kind;
    p.params = params;
    if (j.contains("clip")) {
        const auto& c = j["clip"];
        if (!c.is_array() || c.size() != 2) throw config_error("proto.clip must be [lo, hi]");
        p.lo = bound_from_json(c[0]);
        p.hi = bound_from_json(c[1]);
    } else if (kind == ProtoKind::normal) {
        p.lo = -std::numeric_limits<double>::infinity();
        p.hi = std::numeric_limits<double>::infinity();
    } else if (kind == ProtoKind::point_mass && !params.empty()) {
        p.lo = p.hi = params[0];
    } else if (kind == ProtoKind::bimodal && params.size() == 3) {
        p.lo = std::min(params[1], params[2]);
        p.hi = std::max(params[1], params[2]);
    } else if (!params.empty()) {
        p.lo = params.front();
        p.hi = params.back();
    }
    p.check();
    return p;
}

inline nlohmann::json to_json(const NoiseModelSpec& s) {
    nlohmann::json j{{"kind", to_string(s.kind)},
                     {"proto", to_json(s.proto)},
                     {"truth", s.truth == TruthPolicy::random ? "random" : "standard"}};
    j[s.domain() == Domain::ranking ? "c" : "m"] = s.width;
    if (s.kind == NoiseKind::ier) j["k"] = s.k;
    return j;
}

inline NoiseModelSpec noise_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("noise spec must be an object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw config_error("noise.kind is required");
    NoiseModelSpec s;
    s.kind = parse_noise_kind(j["kind"].get<std::string>());
    const char* width_key = j.contains("c") ? "c" : "m";
    if (j.contains(width_key)) {
        if (!j[width_key].is_number_integer() || j[width_key].get<long long>() < 1)
            throw config_error(std::string("noise.") + width_key + " must be a positive integer");
        s.width = j[width_key].get<std::size_t>();
    }
    if (j.contains("k")) {
        if (!j["k"].is_number_integer()) throw config_error("noise.k must be an integer");
        s.k = j["k"].get<int>();
    }
    if (!j.contains("proto")) throw config_error("noise.proto is required");
    s.proto = proto_from_json(j["proto"]);
    if (j.contains("truth")) {
        const auto t = j["truth"].get<std::string>();
        if (t == "random") s.truth = TruthPolicy::random;
        else if (t == "standard" || t == "default") s.truth = TruthPolicy::standard;
        else throw config_error("noise.truth must be 'standard' or 'random'");
    }
    s.check();
    return s;
}

}  // namespace proxytd
