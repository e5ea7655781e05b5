#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "proxytd/proxytd.hpp"

namespace th {

using namespace proxytd;

inline Instance cont(std::vector<std::vector<double>> rows, std::optional<std::vector<double>> truth = std::nullopt) {
    ContinuousData d;
    for (auto& r : rows) d.answers.push_back(ContinuousAnswer{std::move(r)});
    if (truth) d.truth = ContinuousAnswer{*truth};
    return Instance{std::move(d), std::nullopt};
}

inline Instance cat(int k, std::vector<std::vector<int>> rows, std::optional<std::vector<int>> truth = std::nullopt) {
    CategoricalData d;
    d.k = k;
    for (auto& r : rows) d.answers.push_back(CategoricalAnswer{std::move(r), k});
    if (truth) d.truth = CategoricalAnswer{*truth, k};
    return Instance{std::move(d), std::nullopt};
}

// "acb" -> order (0, 2, 1)
inline Ranking rk(const std::string& s) {
    std::vector<int> order;
    for (char ch : s) order.push_back(ch - 'a');
    return make_ranking(order);
}

inline Instance rank(std::vector<std::string> rows, std::optional<std::string> truth = std::nullopt) {
    RankingData d;
    for (const auto& r : rows) d.answers.push_back(to_pairwise(rk(r)));
    d.candidates = d.answers.front().candidates;
    if (truth) d.truth = rk(*truth);
    return Instance{std::move(d), std::nullopt};
}

inline Instance random_continuous(Rng& rng, std::size_t n, std::size_t m, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<std::vector<double>> rows(n, std::vector<double>(m));
    for (auto& r : rows)
        for (auto& v : r) v = u(rng);
    std::vector<double> truth(m);
    for (auto& v : truth) v = u(rng);
    return cont(rows, truth);
}

inline Instance random_categorical(Rng& rng, std::size_t n, std::size_t m, int k) {
    std::uniform_int_distribution<int> u(0, k - 1);
    std::vector<std::vector<int>> rows(n, std::vector<int>(m));
    for (auto& r : rows)
        for (auto& v : r) v = u(rng);
    std::vector<int> truth(m);
    for (auto& v : truth) v = u(rng);
    return cat(k, rows, truth);
}

inline Ranking random_ranking(Rng& rng, int c) {
    Ranking r = identity_ranking(c);
    std::shuffle(r.order.begin(), r.order.end(), rng);
    return r;
}

inline Instance permute_workers(const Instance& inst, const std::vector<std::size_t>& perm) {
    Instance out = inst;
    std::visit(
        [&](auto& d) {
            auto orig = d.answers;
            for (std::size_t i = 0; i < perm.size(); ++i) d.answers[i] = orig[perm[i]];
        },
        out.data);
    if (out.faults)
        for (std::size_t i = 0; i < perm.size(); ++i) (*out.faults)[i] = (*inst.faults)[perm[i]];
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace th
