#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mscale/multiscale_test.hpp"
#include "mscale/synthetic.hpp"

using namespace mscale;
using Catch::Matchers::ContainsSubstring;

namespace {

std::vector<CountSeries> null_panel(int n, int T, std::uint64_t seed, std::size_t rep = 0) {
    SimConfig cfg;
    cfg.n = n;
    cfg.T = T;
    cfg.seed = seed;
    return generate_panel(cfg, rep);
}

std::vector<CountSeries> shifted_panel() {
    // Second series doubles the first on days 29..56 of 70.
    auto panel = null_panel(2, 70, 5);
    panel[1] = panel[0];
    panel[1].id = "s2";
    for (int t = 29; t <= 56; ++t) panel[1].values[static_cast<std::size_t>(t - 1)] *= 2.0;
    return panel;
}

TestConfig quick_config(double alpha = 0.05) {
    TestConfig cfg;
    cfg.alpha = alpha;
    cfg.draws = 1000;
    cfg.seed = 17;
    cfg.threads = 1;
    return cfg;
}

std::vector<std::pair<int, int>> reject_keys(const TestResultSet& r) {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : r.pairs)
        for (const auto& iv : p.rejected) out.emplace_back(iv.start_day, iv.length_days);
    return out;
}

} // namespace

TEST_CASE("identical series produce no rejections", "[multiscale_test]") {
    auto panel = null_panel(1, 100, 3);
    panel.push_back(panel[0]);
    panel[1].id = "copy";
    const auto res = run_test(panel, quick_config());
    CHECK(res.total_rejections() == 0);
    for (const auto& t : res.pairs.at(0).triples) CHECK(t.psi == 0.0);
    const auto summary = fwer_decision_summary(res);
    CHECK_FALSE(summary.any_rejection);
    CHECK_THAT(summary.statement, ContainsSubstring("no differences detected at level alpha = 0.05") ||
                                      ContainsSubstring("No differences detected at level alpha = 0.05"));
}

TEST_CASE("a localized shift is detected on covering intervals", "[multiscale_test]") {
    const auto res = run_test(shifted_panel(), quick_config());
    REQUIRE(res.pairs.size() == 1);
    const auto& p = res.pairs[0];
    REQUIRE_FALSE(p.rejected.empty());
    for (const auto& iv : p.rejected) {
        // Every rejected interval overlaps the shifted block.
        CHECK(iv.end_day() >= 29);
        CHECK(iv.start_day <= 56);
    }
    for (const auto& m : p.minimal)
        for (const auto& r : p.rejected) CHECK_FALSE(r.properly_within(m));

    const auto summary = fwer_decision_summary(res);
    CHECK(summary.any_rejection);
    CHECK_THAT(summary.pairs[0].statement, ContainsSubstring("s1 vs s2"));
    CHECK_THAT(summary.statement, ContainsSubstring("0.95"));
}

TEST_CASE("rejections are monotone in alpha", "[multiscale_test][property]") {
    const auto panel = null_panel(4, 100, 8);
    auto p2 = panel;
    for (int t = 40; t <= 70; ++t) p2[2].values[static_cast<std::size_t>(t - 1)] *= 1.3;

    const auto fam = build_default_family(100);
    const auto pairs = PairSet::all_pairs(4);
    std::vector<double> alphas{0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
    const auto table = build_quantile_table(pairs, fam, alphas, 1000, 3, 1);
    for (CriticalMode mode : {CriticalMode::Scale, CriticalMode::Uniform}) {
        std::vector<std::vector<std::pair<int, int>>> sets;
        for (double a : alphas) {
            auto keys = reject_keys(run_test_with_table(p2, pairs, fam, table, a, mode));
            std::sort(keys.begin(), keys.end());
            sets.push_back(keys);
        }
        for (std::size_t k = 1; k < sets.size(); ++k) {
            CHECK(std::includes(sets[k].begin(), sets[k].end(), sets[k - 1].begin(), sets[k - 1].end()));
        }
    }
}

TEST_CASE("relabelling the series permutes the results", "[multiscale_test][property]") {
    auto panel = null_panel(3, 80, 12);
    for (int t = 20; t <= 50; ++t) panel[1].values[static_cast<std::size_t>(t - 1)] *= 1.4;
    const auto base = run_test(panel, quick_config(0.1));

    const std::vector<CountSeries> swapped{panel[2], panel[0], panel[1]};
    const auto perm = run_test(swapped, quick_config(0.1));
    // Original index -> new index.
    const int to_new[] = {1, 2, 0};
    CHECK(base.sigma_hat == Catch::Approx(perm.sigma_hat).epsilon(1e-14));
    CHECK(base.quantile.q == perm.quantile.q);
    for (const auto& p : base.pairs) {
        int a = to_new[p.i], b = to_new[p.j];
        const double sign = a < b ? 1.0 : -1.0;
        if (a > b) std::swap(a, b);
        const auto it = std::find_if(perm.pairs.begin(), perm.pairs.end(), [&](const PairResult& q) {
            return q.i == a && q.j == b;
        });
        REQUIRE(it != perm.pairs.end());
        CHECK(it->rejected == p.rejected);
        for (std::size_t k = 0; k < p.triples.size(); ++k)
            CHECK(it->triples[k].psi == Catch::Approx(sign * p.triples[k].psi).margin(1e-12));
    }
}

TEST_CASE("multiplying all counts by a constant leaves decisions unchanged", "[multiscale_test][property]") {
    auto panel = null_panel(3, 90, 21);
    for (int t = 30; t <= 60; ++t) panel[0].values[static_cast<std::size_t>(t - 1)] *= 1.35;
    const auto base = run_test(panel, quick_config());
    for (double c : {0.5, 3.0, 10.0}) {
        auto scaled = panel;
        for (auto& s : scaled)
            for (auto& v : s.values) v *= c;
        CHECK(reject_keys(run_test(scaled, quick_config())) == reject_keys(base));
    }
}

TEST_CASE("degenerate triples are never rejected", "[multiscale_test]") {
    auto panel = null_panel(3, 40, 2);
    for (int t = 1; t <= 14; ++t) {
        panel[0].values[static_cast<std::size_t>(t - 1)] = 0.0;
        panel[1].values[static_cast<std::size_t>(t - 1)] = 0.0;
    }
    const auto res = run_test(panel, quick_config(0.3));
    std::size_t degenerate = 0;
    for (const auto& p : res.pairs)
        for (const auto& t : p.triples) {
            if (t.degenerate) {
                ++degenerate;
                CHECK(t.psi == 0.0);
                CHECK_FALSE(t.reject);
            }
        }
    CHECK(degenerate > 0);
    CHECK(std::any_of(res.warnings.begin(), res.warnings.end(),
                      [](const std::string& w) { return w.find("zero counts") != std::string::npos; }));
}

TEST_CASE("summary lists rejected and minimal intervals", "[multiscale_test]") {
    TestResultSet res;
    res.T = 100;
    res.ids = {"DE", "IT"};
    res.quantile.alpha = 0.05;
    PairResult p;
    p.i = 0;
    p.j = 1;
    const Interval outer{1, 14, 0.14}, inner{1, 7, 0.07};
    p.rejected = {inner, outer};
    p.minimal = {inner};
    res.pairs.push_back(p);
    const auto s = fwer_decision_summary(res);
    REQUIRE(s.pairs.size() == 1);
    CHECK(s.pairs[0].statement == "DE vs IT: the trends differ on each of the intervals [1, 7], [1, 14]; most localized: [1, 7].");
    CHECK(s.pairs[0].minimal == std::vector<Interval>{inner});
    CHECK_THAT(s.statement, ContainsSubstring("0.95"));
}

TEST_CASE("input errors", "[multiscale_test]") {
    const auto panel = null_panel(3, 50, 1);
    CHECK_THROWS_AS(run_test(std::vector<CountSeries>{panel[0]}, quick_config()), IngestError);

    auto ragged = panel;
    ragged[1].values.pop_back();
    CHECK_THROWS_WITH(run_test(ragged, quick_config()), ContainsSubstring("s2"));

    auto shortp = panel;
    for (auto& s : shortp) s.values.resize(6);
    CHECK_THROWS_AS(run_test(shortp, quick_config()), IngestError);

    auto negative = panel;
    negative[0].values[3] = -1.0;
    CHECK_THROWS_AS(run_test(negative, quick_config()), IngestError);

    auto dead = panel;
    dead[2].values.assign(50, 0.0);
    CHECK_THROWS_WITH(run_test(dead, quick_config()), ContainsSubstring("all-zero series"));

    auto cfg = quick_config();
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(run_test(panel, cfg), ConfigError);
    cfg = quick_config();
    cfg.draws = 10;
    CHECK_THROWS_AS(run_test(panel, cfg), ConfigError);
    cfg = quick_config();
    cfg.pairs = std::vector<std::pair<int, int>>{{0, 5}};
    CHECK_THROWS_AS(run_test(panel, cfg), ConfigError);
}

TEST_CASE("restricting the pair set restricts the output", "[multiscale_test]") {
    const auto panel = null_panel(4, 60, 10);
    auto cfg = quick_config();
    cfg.pairs = std::vector<std::pair<int, int>>{{0, 2}, {1, 3}};
    const auto res = run_test(panel, cfg);
    REQUIRE(res.pairs.size() == 2);
    CHECK(res.pairs[0].i == 0);
    CHECK(res.pairs[0].j == 2);
    CHECK(res.overdispersion.per_series.size() == 4);

    cfg.pairs = std::vector<std::pair<int, int>>{{0, 1}};
    const auto two = run_test(panel, cfg);
    CHECK(two.overdispersion.per_series.size() == 2);
}

TEST_CASE("family-wise error rate under the null", "[multiscale_test][montecarlo]") {
    SimConfig cfg;
    cfg.n = 5;
    cfg.T = 100;
    cfg.reps = 300;
    cfg.draws = 2000;
    cfg.seed = 606;
    cfg.alphas = {0.05};
    const auto rows = run_size_experiment(cfg);
    REQUIRE(rows.size() == 1);
    // Allowance for 300 replications: alpha plus about three standard errors.
    CHECK(rows[0].value <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 300));
}
