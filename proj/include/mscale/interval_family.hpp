#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mscale/errors.hpp"

namespace mscale {

/// A window of consecutive days [start_day, start_day + length_days - 1], 1-based.
///
/// In rescaled time the window covers exactly those t with t/T in
/// ((start_day - 1)/T, (start_day + length_days - 1)/T], so every sum over the
/// interval is an integer range sum and the member count is length_days.
struct Interval {
    int start_day = 1;
    int length_days = 1;
    double h = 1.0; ///< length_days / T

    [[nodiscard]] int end_day() const noexcept { return start_day + length_days - 1; }

    [[nodiscard]] bool contains_day(int t) const noexcept {
        return start_day <= t && t <= end_day();
    }

    /// True when *this is a subset of other (possibly equal).
    [[nodiscard]] bool within(const Interval& other) const noexcept {
        return other.start_day <= start_day && end_day() <= other.end_day();
    }

    /// True when *this is a proper subset of other.
    [[nodiscard]] bool properly_within(const Interval& other) const noexcept {
        return within(other) && !(start_day == other.start_day && length_days == other.length_days);
    }

    friend bool operator==(const Interval& x, const Interval& y) noexcept {
        return x.start_day == y.start_day && x.length_days == y.length_days;
    }

    /// (length, start) order used throughout the library.
    friend bool operator<(const Interval& x, const Interval& y) noexcept {
        if (x.length_days != y.length_days) return x.length_days < y.length_days;
        return x.start_day < y.start_day;
    }
};

struct ScaleConstants {
    double a = 1.0;
    double b = 0.0;
};

/// Scale-dependent calibration constants for an interval of rescaled length h:
///   a(h) = sqrt(log(e/h)) / log(log(e^e/h)),   b(h) = sqrt(2 log(1/h)).
/// Both are strictly decreasing on (0,1), with a(1) = 1 and b(1) = 0.
inline ScaleConstants scale_constants(double h) {
    if (!(h > 0.0) || h > 1.0 || !std::isfinite(h)) {
        throw ConfigError("scale_constants: h must lie in (0, 1], got " + std::to_string(h));
    }
    const double neg_log_h = h == 1.0 ? 0.0 : -std::log(h);
    ScaleConstants c;
    c.a = std::sqrt(1.0 + neg_log_h) / std::log(std::numbers::e + neg_log_h);
    c.b = std::sqrt(2.0 * neg_log_h);
    return c;
}

/// Starts generated as offset + stride * m for m = 0, 1, ... and every offset.
struct StrideRule {
    std::vector<int> offsets{1, 4};
    int stride = 7;
};

/// Explicit list of admissible start days.
struct StartList {
    std::vector<int> starts;
};

using StartRule = std::variant<StrideRule, StartList>;

inline const std::vector<int>& default_lengths() {
    static const std::vector<int> lengths{7, 14, 21, 28};
    return lengths;
}

/// The candidate interval collection together with per-interval constants.
/// Immutable after construction.
class IntervalFamily {
public:
    IntervalFamily() = default;

    IntervalFamily(int T, std::vector<Interval> intervals) : T_(T), intervals_(std::move(intervals)) {
        std::sort(intervals_.begin(), intervals_.end());
        intervals_.erase(std::unique(intervals_.begin(), intervals_.end()), intervals_.end());
        if (intervals_.empty()) {
            throw ConfigError("interval family: no admissible interval");
        }
        constants_.reserve(intervals_.size());
        for (auto& iv : intervals_) {
            if (iv.start_day < 1 || iv.length_days < 1 || iv.end_day() > T_) {
                throw ConfigError("interval family: interval [" + std::to_string(iv.start_day) + ", " +
                                  std::to_string(iv.end_day()) + "] does not fit in [1, " + std::to_string(T_) + "]");
            }
            iv.h = static_cast<double>(iv.length_days) / static_cast<double>(T_);
            constants_.push_back(scale_constants(iv.h));
        }
    }

    [[nodiscard]] int T() const noexcept { return T_; }
    [[nodiscard]] std::size_t size() const noexcept { return intervals_.size(); }
    [[nodiscard]] std::span<const Interval> intervals() const noexcept { return intervals_; }
    [[nodiscard]] const Interval& operator[](std::size_t k) const { return intervals_[k]; }
    [[nodiscard]] double a(std::size_t k) const { return constants_[k].a; }
    [[nodiscard]] double b(std::size_t k) const { return constants_[k].b; }

    /// Index of iv inside the family, or size() when absent.
    [[nodiscard]] std::size_t index_of(const Interval& iv) const {
        auto it = std::lower_bound(intervals_.begin(), intervals_.end(), iv);
        if (it != intervals_.end() && *it == iv) return static_cast<std::size_t>(it - intervals_.begin());
        return intervals_.size();
    }

private:
    int T_ = 0;
    std::vector<Interval> intervals_;
    std::vector<ScaleConstants> constants_;
};

/// Intervals of the given lengths whose start is produced by rule; intervals
/// that do not fit in [1, T] are dropped, not clipped.
inline IntervalFamily build_custom_family(int T, std::span<const int> lengths, const StartRule& rule) {
    if (T < 1) throw ConfigError("interval family: T must be positive");
    if (lengths.empty()) throw ConfigError("interval family: no lengths given");
    for (int d : lengths) {
        if (d < 1 || d > T) {
            throw ConfigError("interval family: length " + std::to_string(d) + " outside [1, " + std::to_string(T) + "]");
        }
    }

    std::vector<int> starts;
    if (const auto* stride = std::get_if<StrideRule>(&rule)) {
        if (stride->stride < 1 || stride->offsets.empty()) {
            throw ConfigError("interval family: stride rule needs stride >= 1 and at least one offset");
        }
        for (int off : stride->offsets) {
            for (int s = off; s <= T; s += stride->stride) {
                if (s >= 1) starts.push_back(s);
            }
        }
    } else {
        starts = std::get<StartList>(rule).starts;
    }

    std::vector<Interval> out;
    for (int d : lengths) {
        for (int s : starts) {
            if (s >= 1 && s + d - 1 <= T) out.push_back(Interval{s, d, 0.0});
        }
    }
    if (out.empty()) throw ConfigError("interval family: no admissible interval");
    return IntervalFamily(T, std::move(out));
}

/// Lengths 7, 14, 21, 28 days starting on days 1 + 7m and 4 + 7m.
inline IntervalFamily build_default_family(int T) {
    if (T < 7) throw ConfigError("interval family: no admissible interval for T = " + std::to_string(T));
    std::vector<int> lengths;
    for (int d : default_lengths()) {
        if (d <= T) lengths.push_back(d);
    }
    return build_custom_family(T, lengths, StrideRule{});
}

/// Intervals of rejected that contain no other element of rejected as a proper subset.
/// Output keeps the (length, start) order.
inline std::vector<Interval> minimal_intervals(std::span<const Interval> rejected) {
    std::vector<Interval> out;
    for (const auto& candidate : rejected) {
        bool minimal = std::none_of(rejected.begin(), rejected.end(),
                                    [&](const Interval& other) { return other.properly_within(candidate); });
        if (minimal && std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(candidate);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace mscale
