#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "mscale/interval_family.hpp"
#include "oracles.hpp"

using namespace mscale;
using Catch::Approx;

namespace {

std::vector<oracle::Window> windows_of(const IntervalFamily& f) {
    std::vector<oracle::Window> out;
    for (const auto& iv : f.intervals()) out.push_back({iv.start_day, iv.end_day()});
    return out;
}

Interval iv(int start, int end, int T = 100) {
    return Interval{start, end - start + 1, static_cast<double>(end - start + 1) / T};
}

} // namespace

TEST_CASE("default family sizes match the enumeration oracle", "[interval_family]") {
    // Frozen from oracle::enumerate_default_family.
    const std::map<int, std::size_t> expected{{7, 1}, {30, 16}, {100, 96}, {139, 140}, {250, 268}, {500, 556}};
    for (auto [T, K] : expected) {
        const auto fam = build_default_family(T);
        CHECK(fam.size() == K);
        CHECK(oracle::enumerate_default_family(T).size() == K);
    }
}

TEST_CASE("default family equals the oracle interval set in (length, start) order", "[interval_family]") {
    for (int T : {7, 8, 13, 29, 100, 139, 250}) {
        auto ref = oracle::enumerate_default_family(T);
        std::sort(ref.begin(), ref.end(), [](auto x, auto y) {
            return std::pair(x.end - x.start, x.start) < std::pair(y.end - y.start, y.start);
        });
        CHECK(windows_of(build_default_family(T)) == ref);
    }
}

TEST_CASE("per-length counts at T = 100", "[interval_family]") {
    const auto fam = build_default_family(100);
    std::map<int, int> per;
    for (const auto& i : fam.intervals()) per[i.length_days]++;
    CHECK(per == std::map<int, int>{{7, 27}, {14, 25}, {21, 23}, {28, 21}});
}

TEST_CASE("T = 7 has the single interval [1, 7]", "[interval_family]") {
    const auto fam = build_default_family(7);
    REQUIRE(fam.size() == 1);
    CHECK(fam[0].start_day == 1);
    CHECK(fam[0].length_days == 7);
    CHECK(fam[0].h == 1.0);
    CHECK(fam.a(0) == 1.0);
    CHECK(fam.b(0) == 0.0);
}

TEST_CASE("T below 7 has no admissible interval", "[interval_family]") {
    CHECK_THROWS_AS(build_default_family(6), ConfigError);
    CHECK_THROWS_WITH(build_default_family(3), Catch::Matchers::ContainsSubstring("no admissible interval"));
}

TEST_CASE("membership count equals the interval length", "[interval_family]") {
    const auto fam = build_default_family(139);
    for (const auto& i : fam.intervals()) {
        int members = 0;
        for (int t = 1; t <= fam.T(); ++t) members += i.contains_day(t);
        CHECK(members == i.length_days);
        CHECK(i.h == Approx(static_cast<double>(i.length_days) / 139).epsilon(0));
        CHECK(i.start_day >= 1);
        CHECK(i.end_day() <= 139);
    }
}

TEST_CASE("custom family", "[interval_family]") {
    SECTION("full-length single interval has h = 1") {
        const int lengths[] = {10};
        const auto fam = build_custom_family(10, lengths, StartList{{1}});
        REQUIRE(fam.size() == 1);
        CHECK(fam[0].h == 1.0);
        CHECK(fam.a(0) == 1.0);
        CHECK(fam.b(0) == 0.0);
    }
    SECTION("default rule reproduces the default family") {
        const auto custom = build_custom_family(100, default_lengths(), StrideRule{});
        CHECK(windows_of(custom) == windows_of(build_default_family(100)));
    }
    SECTION("duplicated starts are deduplicated") {
        const int lengths[] = {7};
        const auto fam = build_custom_family(20, lengths, StartList{{1, 1, 5, 1}});
        CHECK(fam.size() == 2);
        const auto overlapping = build_custom_family(20, lengths, StrideRule{{1, 8}, 7});
        CHECK(overlapping.size() == 2); // 1, 8 from offset 1; 8 again from offset 8
    }
    SECTION("intervals past the right edge are dropped, not clipped") {
        const int lengths[] = {5};
        const auto fam = build_custom_family(12, lengths, StartList{{1, 6, 9}});
        REQUIRE(fam.size() == 2);
        CHECK(fam[1].start_day == 6);
        CHECK(fam[1].end_day() == 10);
    }
    SECTION("errors") {
        const int too_long[] = {11};
        CHECK_THROWS_AS(build_custom_family(10, too_long, StrideRule{}), ConfigError);
        const int zero[] = {0};
        CHECK_THROWS_AS(build_custom_family(10, zero, StrideRule{}), ConfigError);
        const int ok[] = {5};
        CHECK_THROWS_AS(build_custom_family(10, ok, StartList{{8, 9}}), ConfigError);
        CHECK_THROWS_AS(build_custom_family(10, ok, StartList{}), ConfigError);
    }
}

TEST_CASE("scale constants closed forms", "[interval_family]") {
    const auto one = scale_constants(1.0);
    CHECK(one.a == 1.0);
    CHECK(one.b == 0.0);
    CHECK_FALSE(std::signbit(one.b));

    CHECK(scale_constants(std::exp(-1.0)).b == Approx(std::sqrt(2.0)).epsilon(1e-15));

    // Frozen from a 40-digit evaluation of the closed forms.
    const auto c = scale_constants(0.07);
    CHECK(c.a == Approx(1.1371320745760235879).epsilon(1e-12));
    CHECK(c.b == Approx(2.3061916819435361336).epsilon(1e-12));

    for (double h : {7.0 / 100, 14.0 / 100, 21.0 / 100, 28.0 / 100, 7.0 / 139, 28.0 / 500, 1e-6, 0.999}) {
        const auto [a_ref, b_ref] = oracle::scale_constants(h);
        const auto got = scale_constants(h);
        CHECK(got.a == Approx(static_cast<double>(a_ref)).epsilon(1e-12));
        CHECK(got.b == Approx(static_cast<double>(b_ref)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(scale_constants(0.0), ConfigError);
    CHECK_THROWS_AS(scale_constants(-0.5), ConfigError);
    CHECK_THROWS_AS(scale_constants(1.0000001), ConfigError);
}

TEST_CASE("scale constants strictly decrease in h", "[interval_family]") {
    double prev_a = std::numeric_limits<double>::infinity();
    double prev_b = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 10000; ++k) {
        const auto c = scale_constants(k / 10000.0);
        CHECK(c.a < prev_a);
        CHECK(c.b < prev_b);
        CHECK(std::isfinite(c.a));
        CHECK(c.a > 0);
        CHECK(c.b > 0);
        prev_a = c.a;
        prev_b = c.b;
    }
}

TEST_CASE("minimal intervals examples", "[interval_family]") {
    CHECK(minimal_intervals({}).empty());

    const std::vector<Interval> nested{iv(1, 7), iv(1, 14)};
    CHECK(minimal_intervals(nested) == std::vector<Interval>{iv(1, 7)});

    const std::vector<Interval> three{iv(1, 7), iv(8, 14), iv(1, 28)};
    CHECK(minimal_intervals(three) == std::vector<Interval>{iv(1, 7), iv(8, 14)});

    const std::vector<Interval> dup{iv(4, 10), iv(4, 10)};
    CHECK(minimal_intervals(dup) == std::vector<Interval>{iv(4, 10)});
}

TEST_CASE("minimal intervals properties on random subsets", "[interval_family][property]") {
    const auto fam = build_default_family(100);
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 300; ++trial) {
        std::bernoulli_distribution keep(std::uniform_real_distribution<double>(0.02, 0.5)(rng));
        std::vector<Interval> rejected;
        for (const auto& i : fam.intervals())
            if (keep(rng)) rejected.push_back(i);

        const auto mins = minimal_intervals(rejected);
        // Subset of the input.
        for (const auto& m : mins) CHECK(std::find(rejected.begin(), rejected.end(), m) != rejected.end());
        // No minimal interval properly contains a rejected one.
        for (const auto& m : mins)
            for (const auto& r : rejected) CHECK_FALSE(r.properly_within(m));
        // Idempotent.
        CHECK(minimal_intervals(mins) == mins);
        // Agrees with the pairwise oracle.
        std::vector<oracle::Window> w;
        for (const auto& r : rejected) w.push_back({r.start_day, r.end_day()});
        auto ref = oracle::minimal(w);
        std::vector<oracle::Window> got;
        for (const auto& m : mins) got.push_back({m.start_day, m.end_day()});
        std::sort(ref.begin(), ref.end(), [](auto x, auto y) {
            return std::pair(x.end - x.start, x.start) < std::pair(y.end - y.start, y.start);
        });
        CHECK(got == ref);
    }
}
