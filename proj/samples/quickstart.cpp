// Compare three synthetic series, one of which has a raised peak.

#include <iostream>

#include "mscale/multiscale_test.hpp"
#include "mscale/synthetic.hpp"

int main() {
    mscale::SimConfig sim;
    sim.n = 3;
    sim.T = 100;
    sim.scenario = mscale::Scenario::A;
    sim.seed = 42;
    const auto panel = mscale::generate_panel(sim, 0);

    mscale::TestConfig cfg;
    cfg.alpha = 0.05;
    cfg.draws = 2000;
    const auto res = mscale::run_test(panel, cfg);

    std::cout << "sigma_hat = " << res.sigma_hat << ", q = " << res.quantile.q << '\n';
    const auto summary = mscale::fwer_decision_summary(res);
    for (const auto& p : summary.pairs) std::cout << p.statement << '\n';
    std::cout << summary.statement << '\n';
}
