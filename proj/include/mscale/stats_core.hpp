#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mscale/errors.hpp"
#include "mscale/interval_family.hpp"
#include "mscale/parallel.hpp"

namespace mscale {

/// One unit's aligned daily counts. Values are non-negative reals so that
/// rescaled or pre-adjusted data can be fed through unchanged.
struct CountSeries {
    std::string id;
    std::vector<double> values;

    [[nodiscard]] int T() const noexcept { return static_cast<int>(values.size()); }
};

inline void validate_series(const CountSeries& s) {
    for (std::size_t t = 0; t < s.values.size(); ++t) {
        const double v = s.values[t];
        if (!std::isfinite(v) || v < 0.0) {
            throw IngestError("series '" + s.id + "': value at day " + std::to_string(t + 1) +
                              " is negative or not finite");
        }
    }
}

/// Ordered list of compared pairs (i, j), i < j, indexing into a data vector.
class PairSet {
public:
    PairSet() = default;

    explicit PairSet(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
        std::set<std::pair<int, int>> seen;
        std::set<int> countries;
        for (auto [i, j] : pairs_) {
            if (i < 0 || i >= j) {
                throw ConfigError("pair (" + std::to_string(i) + ", " + std::to_string(j) + ") must satisfy 0 <= i < j");
            }
            if (!seen.insert({i, j}).second) {
                throw ConfigError("duplicate pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            countries.insert(i);
            countries.insert(j);
        }
        countries_.assign(countries.begin(), countries.end());
    }

    /// All pairs i < j over n series, in lexicographic order.
    static PairSet all_pairs(int n) {
        std::vector<std::pair<int, int>> p;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) p.emplace_back(i, j);
        return PairSet(std::move(p));
    }

    [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pairs_.empty(); }
    [[nodiscard]] const std::pair<int, int>& operator[](std::size_t m) const { return pairs_[m]; }
    [[nodiscard]] std::span<const std::pair<int, int>> pairs() const noexcept { return pairs_; }
    /// Sorted set of indices appearing in at least one pair.
    [[nodiscard]] std::span<const int> countries() const noexcept { return countries_; }
    [[nodiscard]] int max_index() const noexcept { return countries_.empty() ? -1 : countries_.back(); }

private:
    std::vector<std::pair<int, int>> pairs_;
    std::vector<int> countries_;
};

struct OverdispersionEstimate {
    double sigma_hat_sq = 0.0;
    std::map<std::string, double> per_series;

    [[nodiscard]] double sigma_hat() const { return std::sqrt(sigma_hat_sq); }
};

/// sum_{t>=2} (X_t - X_{t-1})^2 / (2 sum_{t>=1} X_t)
inline double overdispersion_single(std::span<const double> x) {
    if (x.size() < 2) throw NumericError("overdispersion needs at least two observations");
    double total = 0.0;
    double sq = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        total += x[t];
        if (t > 0) {
            const double d = x[t] - x[t - 1];
            sq += d * d;
        }
    }
    if (!(total > 0.0)) throw NumericError("all-zero series: overdispersion undefined");
    return sq / (2.0 * total);
}

inline double overdispersion_single(const CountSeries& s) {
    try {
        return overdispersion_single(std::span<const double>(s.values));
    } catch (const NumericError& e) {
        throw NumericError("series '" + s.id + "': " + e.what());
    }
}

/// Pooled estimate: mean of the per-series values over the countries in pairs.
inline OverdispersionEstimate overdispersion_pooled(std::span<const CountSeries> data, const PairSet& pairs) {
    if (pairs.empty()) throw ConfigError("overdispersion_pooled: empty pair set");
    if (pairs.max_index() >= static_cast<int>(data.size())) {
        throw ConfigError("pair set references series " + std::to_string(pairs.max_index()) + " but only " +
                          std::to_string(data.size()) + " series supplied");
    }
    OverdispersionEstimate est;
    double sum = 0.0;
    for (int i : pairs.countries()) {
        const double v = overdispersion_single(data[static_cast<std::size_t>(i)]);
        est.per_series[data[static_cast<std::size_t>(i)].id] = v;
        sum += v;
    }
    est.sigma_hat_sq = sum / static_cast<double>(pairs.countries().size());
    return est;
}

/// Prefix sums S[t] = x_1 + ... + x_t with S[0] = 0, so an interval sum is
/// S[end] - S[start - 1].
class PrefixSums {
public:
    PrefixSums() = default;
    explicit PrefixSums(std::span<const double> x) : sums_(x.size() + 1, 0.0) {
        for (std::size_t t = 0; t < x.size(); ++t) sums_[t + 1] = sums_[t] + x[t];
    }

    [[nodiscard]] double over(const Interval& iv) const {
        return sums_[static_cast<std::size_t>(iv.end_day())] - sums_[static_cast<std::size_t>(iv.start_day - 1)];
    }

    [[nodiscard]] double range(int first_day, int last_day) const {
        return sums_[static_cast<std::size_t>(last_day)] - sums_[static_cast<std::size_t>(first_day - 1)];
    }

private:
    std::vector<double> sums_;
};

struct PairStatistic {
    double psi = 0.0;
    bool degenerate = false; ///< both series are zero on the whole interval
};

/// Normalized difference on one interval given the interval sums of the two series.
inline PairStatistic pair_statistic_from_sums(double sum_i, double sum_j, double sigma_hat) {
    const double total = sum_i + sum_j;
    if (!(total > 0.0)) return {0.0, true};
    return {(sum_i - sum_j) / (sigma_hat * std::sqrt(total)), false};
}

inline PairStatistic pair_statistic(const CountSeries& x_i, const CountSeries& x_j, const Interval& ival,
                                    double sigma_hat) {
    if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) {
        throw NumericError("pair_statistic: sigma_hat must be positive and finite");
    }
    if (x_i.values.size() != x_j.values.size()) {
        throw IngestError("series '" + x_i.id + "' and '" + x_j.id + "' have different lengths");
    }
    if (ival.start_day < 1 || ival.end_day() > x_i.T()) {
        throw ConfigError("pair_statistic: interval does not fit in the series");
    }
    double sum_i = 0.0;
    double sum_j = 0.0;
    for (int t = ival.start_day; t <= ival.end_day(); ++t) {
        sum_i += x_i.values[static_cast<std::size_t>(t - 1)];
        sum_j += x_j.values[static_cast<std::size_t>(t - 1)];
    }
    return pair_statistic_from_sums(sum_i, sum_j, sigma_hat);
}

/// Dense |pairs| x K matrix of statistics, pair-major.
struct StatisticsMatrix {
    std::size_t n_pairs = 0;
    std::size_t n_intervals = 0;
    std::vector<double> psi;
    std::vector<std::uint8_t> degenerate;

    [[nodiscard]] std::size_t size() const noexcept { return psi.size(); }
    [[nodiscard]] double at(std::size_t pair, std::size_t k) const { return psi[pair * n_intervals + k]; }
    [[nodiscard]] bool is_degenerate(std::size_t pair, std::size_t k) const {
        return degenerate[pair * n_intervals + k] != 0;
    }
};

inline StatisticsMatrix all_statistics(std::span<const CountSeries> data, const PairSet& pairs,
                                       const IntervalFamily& family, double sigma_hat, unsigned threads = 1) {
    if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) {
        throw NumericError("all_statistics: sigma_hat must be positive and finite");
    }
    if (pairs.max_index() >= static_cast<int>(data.size())) {
        throw ConfigError("pair set references a missing series");
    }
    std::vector<PrefixSums> prefix(data.size());
    for (int i : pairs.countries()) {
        const auto& s = data[static_cast<std::size_t>(i)];
        if (s.T() != family.T()) {
            throw IngestError("series '" + s.id + "' has length " + std::to_string(s.T()) + ", expected " +
                              std::to_string(family.T()));
        }
        prefix[static_cast<std::size_t>(i)] = PrefixSums(s.values);
    }

    StatisticsMatrix m;
    m.n_pairs = pairs.size();
    m.n_intervals = family.size();
    m.psi.assign(m.n_pairs * m.n_intervals, 0.0);
    m.degenerate.assign(m.n_pairs * m.n_intervals, 0);

    parallel_for(m.n_pairs, threads, [&](std::size_t pm) {
        const auto [i, j] = pairs[pm];
        const auto& pi = prefix[static_cast<std::size_t>(i)];
        const auto& pj = prefix[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < m.n_intervals; ++k) {
            const auto st = pair_statistic_from_sums(pi.over(family[k]), pj.over(family[k]), sigma_hat);
            m.psi[pm * m.n_intervals + k] = st.psi;
            m.degenerate[pm * m.n_intervals + k] = st.degenerate ? 1 : 0;
        }
    });
    return m;
}

/// Rectangular-kernel Nadaraya-Watson smoother: the mean of x over
/// [t - bandwidth_days, t + bandwidth_days] intersected with [1, T].
inline std::vector<double> smooth_trend(std::span<const double> x, int bandwidth_days) {
    if (bandwidth_days < 1) throw ConfigError("smooth_trend: bandwidth must be at least one day");
    const int T = static_cast<int>(x.size());
    PrefixSums ps(x);
    std::vector<double> out(x.size());
    for (int t = 1; t <= T; ++t) {
        const int lo = std::max(1, t - bandwidth_days);
        const int hi = std::min(T, t + bandwidth_days);
        out[static_cast<std::size_t>(t - 1)] = ps.range(lo, hi) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

} // namespace mscale
