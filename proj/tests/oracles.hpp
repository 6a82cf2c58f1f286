#pragma once

// Reference computations used only by tests. None of these call into the
// library's implementation paths.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

struct Window {
    int start;
    int end;
    friend bool operator==(const Window&, const Window&) = default;
};

/// Every (start, length) pair checked one by one against the 1 + 7m / 4 + 7m rule.
inline std::vector<Window> enumerate_default_family(int T) {
    std::vector<Window> out;
    for (int d : {7, 14, 21, 28}) {
        for (int s = 1; s <= T; ++s) {
            const bool on_grid = (s - 1) % 7 == 0 || (s >= 4 && (s - 4) % 7 == 0);
            if (on_grid && s + d - 1 <= T) out.push_back({s, s + d - 1});
        }
    }
    return out;
}

/// Closed forms evaluated literally in extended precision.
inline std::pair<long double, long double> scale_constants(long double h) {
    const long double e = std::exp(1.0L);
    const long double a = std::sqrt(std::log(e / h)) / std::log(std::log(std::exp(e) / h));
    const long double b = std::sqrt(2.0L * std::log(1.0L / h));
    return {a, b};
}

/// Pairwise containment check: keep w unless some other element is a proper subset.
inline std::vector<Window> minimal(const std::vector<Window>& rejected) {
    std::vector<Window> out;
    for (const auto& w : rejected) {
        bool has_proper_subset = false;
        for (const auto& v : rejected) {
            const bool subset = w.start <= v.start && v.end <= w.end;
            if (subset && !(v == w)) has_proper_subset = true;
        }
        if (!has_proper_subset) out.push_back(w);
    }
    return out;
}

/// Negative binomial pmf Gamma(m + r) / (Gamma(r) m!) q^r (1 - q)^m.
inline double nb_pmf(int m, double r, double q) {
    return std::exp(std::lgamma(m + r) - std::lgamma(r) - std::lgamma(m + 1.0) + r * std::log(q) +
                    m * std::log1p(-q));
}

/// Direct interval sum statistic without prefix sums.
inline double psi(const std::vector<double>& xi, const std::vector<double>& xj, int start, int end, double sigma) {
    double diff = 0.0, total = 0.0;
    for (int t = start; t <= end; ++t) {
        diff += xi[static_cast<std::size_t>(t - 1)] - xj[static_cast<std::size_t>(t - 1)];
        total += xi[static_cast<std::size_t>(t - 1)] + xj[static_cast<std::size_t>(t - 1)];
    }
    return total > 0 ? diff / (sigma * std::sqrt(total)) : 0.0;
}

} // namespace oracle
