// Generate one IER instance, estimate fault levels with P-EFL, and compare
// weighted aggregation against the unweighted baseline.
#include <cstdio>

#include "proxytd/proxytd.hpp"

int main() {
    using namespace proxytd;
    NoiseModelSpec spec;
    spec.kind = NoiseKind::ier;
    spec.width = 50;
    spec.k = 2;
    spec.proto = ProtoPopulation::normal(0.45, 0.1, 0.0, 1.0);

    const Instance inst = generate_instance(spec, 40, 7);
    const auto f = p_efl(inst, 0.0, Rule::plurality, 7);
    std::printf("worker  true f   f_hat\n");
    for (std::size_t i = 0; i < 5; ++i) std::printf("%6zu  %.3f   %.3f\n", i, (*inst.faults)[i], f.values[i]);

    for (Method m : {Method::ua, Method::d_td, Method::p_td, Method::ip_td, Method::oa}) {
        MethodSpec s;
        s.method = m;
        s.seed = 7;
        std::printf("%-6s error %.3f\n", to_string(m).c_str(), *run_method(inst, s).error);
    }
}
