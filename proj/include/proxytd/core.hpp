#pragma once

// Answer types, the three per-domain distances, and proxy distances.
//
// Rankings list candidates best-first: order[pos] = candidate.
// A PairwiseVector has one entry per candidate pair (a,b), a<b, in
// lexicographic order; +1 means a is ranked above b.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "proxytd/errors.hpp"

namespace proxytd {

enum class Domain { continuous, categorical, ranking };

inline std::string to_string(Domain d) {
    switch (d) {
        case Domain::continuous: return "continuous";
        case Domain::categorical: return "categorical";
        case Domain::ranking: return "ranking";
    }
    return "unknown";
}

inline Domain parse_domain(const std::string& s) {
    if (s == "continuous") return Domain::continuous;
    if (s == "categorical") return Domain::categorical;
    if (s == "ranking") return Domain::ranking;
    throw config_error("unknown domain '" + s + "'");
}

struct ContinuousAnswer {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const ContinuousAnswer&, const ContinuousAnswer&) = default;
};

struct CategoricalAnswer {
    std::vector<int> labels;
    int k = 2;

    std::size_t size() const { return labels.size(); }
    friend bool operator==(const CategoricalAnswer&, const CategoricalAnswer&) = default;
};

struct Ranking {
    std::vector<int> order;

    int candidates() const { return static_cast<int>(order.size()); }
    // positions()[c] = rank of candidate c (0 = top).
    std::vector<int> positions() const {
        std::vector<int> pos(order.size());
        for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = static_cast<int>(p);
        return pos;
    }
    friend bool operator==(const Ranking&, const Ranking&) = default;
};

struct PairwiseVector {
    int candidates = 0;
    std::vector<std::int8_t> entries;

    std::size_t size() const { return entries.size(); }
    friend bool operator==(const PairwiseVector&, const PairwiseVector&) = default;
};

inline std::size_t pair_count(int c) {
    return c < 2 ? 0 : static_cast<std::size_t>(c) * static_cast<std::size_t>(c - 1) / 2;
}

// Index of pair (a,b), a<b, in lexicographic order.
inline std::size_t pair_index(int a, int b, int c) {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(c) -
           static_cast<std::size_t>(a) * static_cast<std::size_t>(a + 1) / 2 +
           static_cast<std::size_t>(b - a - 1);
}

inline bool is_permutation_of_candidates(const std::vector<int>& order) {
    std::vector<char> seen(order.size(), 0);
    for (int c : order) {
        if (c < 0 || static_cast<std::size_t>(c) >= order.size() || seen[c]) return false;
        seen[c] = 1;
    }
    return true;
}

inline Ranking make_ranking(std::vector<int> order) {
    if (order.size() < 2) throw shape_error("ranking needs at least 2 candidates");
    if (!is_permutation_of_candidates(order)) throw shape_error("ranking is not a permutation");
    return Ranking{std::move(order)};
}

inline Ranking identity_ranking(int c) {
    Ranking r;
    r.order.resize(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) r.order[i] = i;
    return r;
}

inline PairwiseVector to_pairwise(const Ranking& r) {
    const int c = r.candidates();
    const auto pos = r.positions();
    PairwiseVector x{c, std::vector<std::int8_t>(pair_count(c))};
    std::size_t idx = 0;
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b) x.entries[idx++] = pos[a] < pos[b] ? 1 : -1;
    return x;
}

inline bool is_transitive(const PairwiseVector& x) {
    const int c = x.candidates;
    std::vector<int> wins(static_cast<std::size_t>(c), 0);
    std::size_t idx = 0;
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b) ++wins[x.entries[idx++] > 0 ? a : b];
    // A tournament is transitive iff its win counts are exactly {0, ..., c-1}.
    std::sort(wins.begin(), wins.end());
    for (int i = 0; i < c; ++i)
        if (wins[i] != i) return false;
    return true;
}

inline Ranking from_pairwise(const PairwiseVector& x) {
    const int c = x.candidates;
    if (x.entries.size() != pair_count(c)) throw shape_error("pairwise vector has wrong length");
    std::vector<int> wins(static_cast<std::size_t>(c), 0);
    std::size_t idx = 0;
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b) ++wins[x.entries[idx++] > 0 ? a : b];
    Ranking r;
    r.order.assign(static_cast<std::size_t>(c), -1);
    for (int cand = 0; cand < c; ++cand) {
        const int pos = c - 1 - wins[cand];
        if (r.order[pos] != -1) throw non_transitive_error("pairwise vector is not transitive");
        r.order[pos] = cand;
    }
    return r;
}

struct RankingAnswer {
    Ranking order;
    PairwiseVector pairwise;

    explicit RankingAnswer(Ranking r) : order(std::move(r)), pairwise(to_pairwise(order)) {}
};

// ---------------------------------------------------------------------------
// Distances

inline double dist_continuous(const ContinuousAnswer& a, const ContinuousAnswer& b) {
    if (a.size() != b.size()) throw shape_error("continuous answers differ in length");
    if (a.size() == 0) throw shape_error("continuous answers are empty");
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a.values[j] - b.values[j];
        sum += diff * diff;
    }
    return sum / static_cast<double>(a.size());
}

inline double dist_hamming(const CategoricalAnswer& a, const CategoricalAnswer& b) {
    if (a.size() != b.size() || a.k != b.k) throw shape_error("categorical answers differ in shape or k");
    if (a.size() == 0) throw shape_error("categorical answers are empty");
    std::size_t diff = 0;
    for (std::size_t j = 0; j < a.size(); ++j) diff += a.labels[j] != b.labels[j];
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

inline double dist_kendall(const PairwiseVector& a, const PairwiseVector& b) {
    if (a.candidates != b.candidates || a.size() != b.size())
        throw shape_error("pairwise vectors differ in candidate count");
    if (a.size() == 0) throw shape_error("pairwise vectors are empty");
    std::size_t diff = 0;
    for (std::size_t j = 0; j < a.size(); ++j) diff += a.entries[j] != b.entries[j];
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

inline double dist_kendall(const Ranking& a, const Ranking& b) {
    if (a.candidates() != b.candidates()) throw shape_error("rankings differ in candidate count");
    return dist_kendall(to_pairwise(a), to_pairwise(b));
}

inline double dist_kendall(const RankingAnswer& a, const RankingAnswer& b) {
    return dist_kendall(a.pairwise, b.pairwise);
}

// ---------------------------------------------------------------------------
// Instances

struct ContinuousData {
    std::vector<ContinuousAnswer> answers;
    std::optional<ContinuousAnswer> truth;
};

struct CategoricalData {
    int k = 2;
    std::vector<CategoricalAnswer> answers;
    std::optional<CategoricalAnswer> truth;
};

struct RankingData {
    int candidates = 0;
    std::vector<PairwiseVector> answers;  // may be non-transitive (ICN)
    std::optional<Ranking> truth;
};

using InstanceData = std::variant<ContinuousData, CategoricalData, RankingData>;

// Answer matrix plus optional ground truth and, for synthetic data, the true
// fault levels that generated it.
struct Instance {
    InstanceData data;
    std::optional<std::vector<double>> faults;

    Domain domain() const { return static_cast<Domain>(data.index()); }

    std::size_t workers() const {
        return std::visit([](const auto& d) { return d.answers.size(); }, data);
    }

    // Questions (m) for continuous/categorical, candidates (c) for rankings.
    std::size_t width() const {
        if (const auto* r = std::get_if<RankingData>(&data)) return static_cast<std::size_t>(r->candidates);
        return std::visit(
            [](const auto& d) -> std::size_t { return d.answers.empty() ? 0 : d.answers.front().size(); }, data);
    }

    bool has_truth() const {
        return std::visit([](const auto& d) { return d.truth.has_value(); }, data);
    }

    const ContinuousData& continuous() const { return std::get<ContinuousData>(data); }
    const CategoricalData& categorical() const { return std::get<CategoricalData>(data); }
    const RankingData& ranking() const { return std::get<RankingData>(data); }

    friend bool operator==(const Instance& a, const Instance& b) {
        return a.faults == b.faults && a.data.index() == b.data.index() &&
               std::visit(
                   [&](const auto& da) {
                       using T = std::decay_t<decltype(da)>;
                       const auto& db = std::get<T>(b.data);
                       if constexpr (std::is_same_v<T, CategoricalData>)
                           return da.k == db.k && da.answers == db.answers && da.truth == db.truth;
                       else if constexpr (std::is_same_v<T, RankingData>)
                           return da.candidates == db.candidates && da.answers == db.answers && da.truth == db.truth;
                       else
                           return da.answers == db.answers && da.truth == db.truth;
                   },
                   a.data);
    }
};

// Checks every shape invariant; throws shape_error / insufficient_workers_error.
inline void validate(const Instance& inst) {
    if (inst.workers() < 2) throw insufficient_workers_error("instance needs at least 2 workers");
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, ContinuousData>) {
                const auto m = d.answers.front().size();
                if (m == 0) throw shape_error("answers are empty");
                auto check = [&](const ContinuousAnswer& a) {
                    if (a.size() != m) throw shape_error("non-rectangular continuous answers");
                    for (double v : a.values)
                        if (!std::isfinite(v)) throw shape_error("non-finite continuous answer");
                };
                for (const auto& a : d.answers) check(a);
                if (d.truth) check(*d.truth);
            } else if constexpr (std::is_same_v<T, CategoricalData>) {
                if (d.k < 2) throw shape_error("categorical domain needs k >= 2");
                const auto m = d.answers.front().size();
                if (m == 0) throw shape_error("answers are empty");
                auto check = [&](const CategoricalAnswer& a) {
                    if (a.size() != m || a.k != d.k) throw shape_error("non-rectangular categorical answers");
                    for (int l : a.labels)
                        if (l < 0 || l >= d.k) throw shape_error("categorical label outside [0, k)");
                };
                for (const auto& a : d.answers) check(a);
                if (d.truth) check(*d.truth);
            } else {
                if (d.candidates < 2) throw shape_error("ranking domain needs at least 2 candidates");
                for (const auto& a : d.answers) {
                    if (a.candidates != d.candidates || a.size() != pair_count(d.candidates))
                        throw shape_error("pairwise vector has wrong shape");
                    for (auto e : a.entries)
                        if (e != 1 && e != -1) throw shape_error("pairwise entries must be +1 or -1");
                }
                if (d.truth && (d.truth->candidates() != d.candidates ||
                                !is_permutation_of_candidates(d.truth->order)))
                    throw shape_error("truth ranking has wrong shape");
            }
        },
        inst.data);
    if (inst.faults) {
        if (inst.faults->size() != inst.workers()) throw shape_error("fault vector length differs from n");
        for (double f : *inst.faults)
            if (!std::isfinite(f)) throw shape_error("non-finite fault level");
    }
}

// Symmetric n x n matrix of pairwise answer distances, zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) {
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

template <typename Answer, typename Dist>
DistanceMatrix pairwise_matrix(const std::vector<Answer>& answers, Dist dist) {
    DistanceMatrix m(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i)
        for (std::size_t j = i + 1; j < answers.size(); ++j) m.set(i, j, dist(answers[i], answers[j]));
    return m;
}

inline DistanceMatrix distance_matrix(const Instance& inst) {
    return std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, ContinuousData>)
                return pairwise_matrix(d.answers, [](const auto& a, const auto& b) { return dist_continuous(a, b); });
            else if constexpr (std::is_same_v<T, CategoricalData>)
                return pairwise_matrix(d.answers, [](const auto& a, const auto& b) { return dist_hamming(a, b); });
            else
                return pairwise_matrix(d.answers, [](const auto& a, const auto& b) { return dist_kendall(a, b); });
        },
        inst.data);
}

inline std::vector<double> proxy_distances(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    if (n < 2) throw insufficient_workers_error("proxy distance needs at least 2 workers");
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum += d(i, j);
        pi[i] = sum / static_cast<double>(n - 1);
    }
    return pi;
}

// Average distance of every worker to all other workers.
inline std::vector<double> proxy_distances(const Instance& inst) {
    if (inst.workers() < 2) throw insufficient_workers_error("proxy distance needs at least 2 workers");
    return proxy_distances(distance_matrix(inst));
}

// Distance of every worker's answer to the ground truth (the empirical fault).
inline std::vector<double> empirical_faults(const Instance& inst) {
    if (!inst.has_truth()) throw oracle_unavailable_error("instance has no ground truth");
    return std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            std::vector<double> out;
            out.reserve(d.answers.size());
            if constexpr (std::is_same_v<T, ContinuousData>) {
                for (const auto& a : d.answers) out.push_back(dist_continuous(a, *d.truth));
            } else if constexpr (std::is_same_v<T, CategoricalData>) {
                for (const auto& a : d.answers) out.push_back(dist_hamming(a, *d.truth));
            } else {
                const auto z = to_pairwise(*d.truth);
                for (const auto& a : d.answers) out.push_back(dist_kendall(a, z));
            }
            return out;
        },
        inst.data);
}

}  // namespace proxytd
