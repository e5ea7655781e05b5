// Mallows rankings aggregated by each voting rule, with and without
// proxy-based weights. Errors are averaged over 200 instances.
#include <cstdio>

#include "proxytd/proxytd.hpp"

int main() {
    using namespace proxytd;
    NoiseModelSpec spec;
    spec.kind = NoiseKind::mallows;
    spec.width = 4;
    spec.proto = ProtoPopulation::normal(0.85, 0.15, 0.05, 3.0);
    const int reps = 200;

    std::printf("%-22s %8s %8s %8s\n", "rule", "UA", "D-TD", "P-TD");
    for (Rule r : all_ranking_rules()) {
        double ua = 0, dt = 0, pt = 0;
        for (int i = 0; i < reps; ++i) {
            const Seed seed = derive_seed(11, i);
            const Instance inst = generate_instance(spec, 20, seed);
            ua += *run_ua(inst, r, seed).error / reps;
            dt += *run_d_td(inst, r, seed).error / reps;
            pt += *run_p_td(inst, 0.0, r, seed).error / reps;
        }
        std::printf("%-22s %8.3f %8.3f %8.3f\n", to_string(r).c_str(), ua, dt, pt);
    }
}
