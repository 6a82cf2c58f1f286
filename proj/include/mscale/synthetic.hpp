#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mscale/errors.hpp"
#include "mscale/gauss_quantile.hpp"
#include "mscale/interval_family.hpp"
#include "mscale/multiscale_test.hpp"
#include "mscale/parallel.hpp"
#include "mscale/rng.hpp"
#include "mscale/stats_core.hpp"

namespace mscale {

// Bell-shaped trend amplitude * exp(-(frequency * u - center)^2 / 2) + base.
struct BellTrend {
    double amplitude = 5000.0;
    double frequency = 10.0;
    double center = 3.0;
    double base = 1000.0;

    [[nodiscard]] double operator()(double u) const {
        const double z = frequency * u - center;
        return amplitude * std::exp(-0.5 * z * z) + base;
    }
};

enum class Scenario { Null, A, B };

inline const char* to_string(Scenario s) {
    switch (s) {
    case Scenario::Null: return "null";
    case Scenario::A: return "A";
    case Scenario::B: return "B";
    }
    return "?";
}

inline Scenario parse_scenario(const std::string& s) {
    if (s == "null" || s == "none") return Scenario::Null;
    if (s == "A" || s == "a") return Scenario::A;
    if (s == "B" || s == "b") return Scenario::B;
    throw ConfigError("unknown scenario '" + s + "' (expected null, A or B)");
}

/// lambda(u) = 5000 exp(-(10u - 3)^2 / 2) + 1000
inline double lambda_null(double u) { return BellTrend{}(u); }

/// Scenario A raises the peak to 6000 + 1000; scenario B moves it to u = 1/3.
inline double lambda_scenario(double u, Scenario s) {
    switch (s) {
    case Scenario::Null: return lambda_null(u);
    case Scenario::A: return BellTrend{6000.0, 10.0, 3.0, 1000.0}(u);
    case Scenario::B: return BellTrend{5000.0, 9.0, 3.0, 1000.0}(u);
    }
    return lambda_null(u);
}

/// Negative binomial draw with E = mean and Var = sigma_sq * mean, i.e.
/// q = 1/sigma_sq and r = mean/(sigma_sq - 1), sampled as a Poisson whose rate
/// is Gamma(shape r, scale (1 - q)/q) so that non-integer r is exact.
/// sigma_sq = 1 (plain Poisson) is only accepted with allow_poisson.
template <typename Rng>
std::int64_t sample_nb(double mean, double sigma_sq, Rng& rng, bool allow_poisson = false) {
    if (!(mean > 0.0) || !std::isfinite(mean)) throw ConfigError("sample_nb: mean must be positive");
    if (sigma_sq == 1.0 && allow_poisson) {
        std::poisson_distribution<std::int64_t> pois(mean);
        return pois(rng);
    }
    if (!(sigma_sq > 1.0)) throw ConfigError("sample_nb: parametrization requires sigma^2 > 1");
    const double shape = mean / (sigma_sq - 1.0);
    const double scale = sigma_sq - 1.0; // (1 - q) / q with q = 1 / sigma_sq
    std::gamma_distribution<double> gamma(shape, scale);
    const double rate = gamma(rng);
    if (!(rate > 0.0)) return 0;
    std::poisson_distribution<std::int64_t> pois(rate);
    return pois(rng);
}

struct SimConfig {
    int n = 5;
    int T = 100;
    double sigma = 15.0;
    Scenario scenario = Scenario::Null;
    std::size_t reps = 1000;
    std::vector<double> alphas{0.01, 0.05, 0.1};
    std::size_t draws = 5000;
    std::uint64_t seed = 1;
    CriticalMode mode = CriticalMode::Scale;
    unsigned threads = 0;

    void validate() const {
        if (n < 2) throw ConfigError("simulation needs n >= 2");
        if (T < 7) throw ConfigError("simulation needs T >= 7");
        if (!(sigma * sigma > 1.0)) throw ConfigError("simulation needs sigma^2 > 1");
        if (reps < 1) throw ConfigError("simulation needs at least one replication");
        if (alphas.empty()) throw ConfigError("simulation needs at least one alpha");
        for (double a : alphas) validate_alpha(a);
        if (draws < 100) throw ConfigError("draws must be at least 100");
    }
};

/// Panel for replication rep: series 0 follows the scenario trend, the others
/// follow lambda_null. Each (rep, series) has its own substream.
inline std::vector<CountSeries> generate_panel(const SimConfig& cfg, std::size_t rep) {
    const double sigma_sq = cfg.sigma * cfg.sigma;
    std::vector<CountSeries> panel(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        auto& s = panel[static_cast<std::size_t>(i)];
        s.id = "s" + std::to_string(i + 1);
        s.values.resize(static_cast<std::size_t>(cfg.T));
        Engine eng = make_substream(cfg.seed, StreamDomain::SyntheticPanel, {rep, static_cast<std::uint64_t>(i)});
        const Scenario sc = i == 0 ? cfg.scenario : Scenario::Null;
        for (int t = 1; t <= cfg.T; ++t) {
            const double mean = lambda_scenario(static_cast<double>(t) / cfg.T, sc);
            s.values[static_cast<std::size_t>(t - 1)] = static_cast<double>(sample_nb(mean, sigma_sq, eng));
        }
    }
    return panel;
}

struct ExperimentRow {
    int T = 0;
    int n = 0;
    double sigma = 0.0;
    Scenario scenario = Scenario::Null;
    double alpha = 0.0;
    double value = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

inline void write_experiment_csv(std::ostream& os, std::span<const ExperimentRow> rows) {
    os << "T,n,sigma,scenario,alpha,value,R,seed\n";
    for (const auto& r : rows) {
        os << r.T << ',' << r.n << ',' << r.sigma << ',' << to_string(r.scenario) << ',' << r.alpha << ','
           << r.value << ',' << r.reps << ',' << r.seed << '\n';
    }
}

namespace detail {

// Per replication and alpha: bit 0 = some pair (0, j) rejects,
// bit 1 = some pair (i, j) with i > 0 rejects.
inline std::vector<std::uint8_t> simulate_outcomes(const SimConfig& cfg) {
    cfg.validate();
    const IntervalFamily family = build_default_family(cfg.T);
    const PairSet pairs = PairSet::all_pairs(cfg.n);
    const QuantileTable table = build_quantile_table(pairs, family, cfg.alphas, cfg.draws, cfg.seed, cfg.threads);

    const std::size_t n_alpha = cfg.alphas.size();
    std::vector<std::vector<double>> critical(n_alpha, std::vector<double>(family.size()));
    for (std::size_t a = 0; a < n_alpha; ++a)
        for (std::size_t k = 0; k < family.size(); ++k)
            critical[a][k] = critical_value(table, cfg.alphas[a], family[k].h, cfg.mode);

    std::vector<std::uint8_t> outcome(cfg.reps * n_alpha, 0);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
        const auto panel = generate_panel(cfg, rep);
        const auto od = overdispersion_pooled(panel, pairs);
        const auto stats = all_statistics(panel, pairs, family, od.sigma_hat(), 1);
        for (std::size_t pm = 0; pm < pairs.size(); ++pm) {
            const std::uint8_t bit = pairs[pm].first == 0 ? 1 : 2;
            for (std::size_t k = 0; k < family.size(); ++k) {
                const double v = std::abs(stats.at(pm, k));
                for (std::size_t a = 0; a < n_alpha; ++a) {
                    if (v > critical[a][k]) outcome[rep * n_alpha + a] |= bit;
                }
            }
        }
    });
    return outcome;
}

inline std::vector<ExperimentRow> tabulate(const SimConfig& cfg, const std::vector<std::uint8_t>& outcome,
                                           bool power) {
    std::vector<ExperimentRow> rows;
    const std::size_t n_alpha = cfg.alphas.size();
    for (std::size_t a = 0; a < n_alpha; ++a) {
        std::size_t hits = 0;
        for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
            const auto o = outcome[rep * n_alpha + a];
            hits += power ? (o == 1) : (o != 0);
        }
        rows.push_back({cfg.T, cfg.n, cfg.sigma, cfg.scenario, cfg.alphas[a],
                        static_cast<double>(hits) / static_cast<double>(cfg.reps), cfg.reps, cfg.seed});
    }
    return rows;
}

} // namespace detail

/// Fraction of replications under the full null with at least one rejection.
/// One quantile table is shared by all replications.
inline std::vector<ExperimentRow> run_size_experiment(SimConfig cfg) {
    if (cfg.scenario != Scenario::Null) throw ConfigError("size experiment requires the null scenario");
    return detail::tabulate(cfg, detail::simulate_outcomes(cfg), false);
}

/// Fraction of replications where some pair (1, j) rejects and no pair among
/// the remaining series does.
inline std::vector<ExperimentRow> run_power_experiment(SimConfig cfg) {
    if (cfg.scenario == Scenario::Null) throw ConfigError("power experiment requires scenario A or B");
    return detail::tabulate(cfg, detail::simulate_outcomes(cfg), true);
}

} // namespace mscale
