#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mscale/errors.hpp"
#include "mscale/interval_family.hpp"
#include "mscale/parallel.hpp"
#include "mscale/rng.hpp"
#include "mscale/stats_core.hpp"

namespace mscale {

enum class CriticalMode { Scale, Uniform };

inline const char* to_string(CriticalMode m) { return m == CriticalMode::Scale ? "scale" : "uniform"; }

inline CriticalMode parse_mode(const std::string& s) {
    if (s == "scale") return CriticalMode::Scale;
    if (s == "uniform") return CriticalMode::Uniform;
    throw ConfigError("unknown mode '" + s + "' (expected scale or uniform)");
}

namespace detail {

class Fnv1a {
public:
    void add(std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            state_ ^= (v >> (8 * byte)) & 0xffu;
            state_ *= 0x100000001b3ull;
        }
    }
    [[nodiscard]] std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

/// Everything the law of the Gaussian maximum depends on.
struct Geometry {
    int T = 0;
    int n_countries = 0;
    std::uint64_t pair_hash = 0;
    std::uint64_t family_hash = 0;

    friend bool operator==(const Geometry&, const Geometry&) = default;

    [[nodiscard]] std::string key() const {
        detail::Fnv1a h;
        h.add(static_cast<std::uint64_t>(T));
        h.add(static_cast<std::uint64_t>(n_countries));
        h.add(pair_hash);
        h.add(family_hash);
        return detail::hex64(h.value());
    }
};

inline Geometry make_geometry(const PairSet& pairs, const IntervalFamily& family) {
    Geometry g;
    g.T = family.T();
    g.n_countries = static_cast<int>(pairs.countries().size());
    detail::Fnv1a ph;
    for (auto [i, j] : pairs.pairs()) {
        ph.add(static_cast<std::uint64_t>(i));
        ph.add(static_cast<std::uint64_t>(j));
    }
    g.pair_hash = ph.value();
    detail::Fnv1a fh;
    for (const auto& iv : family.intervals()) {
        fh.add(static_cast<std::uint64_t>(iv.start_day));
        fh.add(static_cast<std::uint64_t>(iv.length_days));
    }
    g.family_hash = fh.value();
    return g;
}

struct GaussianMax {
    double scaled = 0.0; ///< max a_k (|phi| - b_k)
    double plain = 0.0;  ///< max |phi|
};

/// Computes the Gaussian coupling statistics for one panel of i.i.d. standard
/// normals. One panel row per country is shared by every pair containing it.
class GaussianSampler {
public:
    GaussianSampler(const PairSet& pairs, const IntervalFamily& family) : pairs_(pairs), family_(family) {
        if (pairs.empty()) throw ConfigError("gaussian sampler: empty pair set");
        const int max_index = pairs.max_index();
        slot_.assign(static_cast<std::size_t>(max_index + 1), -1);
        int next = 0;
        for (int i : pairs.countries()) slot_[static_cast<std::size_t>(i)] = next++;
        T_ = static_cast<std::size_t>(family.T());
        prefix_.assign(static_cast<std::size_t>(next) * (T_ + 1), 0.0);
        inv_norm_.reserve(family.size());
        for (const auto& iv : family.intervals()) inv_norm_.push_back(1.0 / std::sqrt(2.0 * iv.length_days));
    }

    /// Fills a fresh panel from engine. Countries are drawn in ascending index order.
    void draw_panel(Engine& engine) {
        std::normal_distribution<double> normal(0.0, 1.0);
        const std::size_t rows = prefix_.size() / (T_ + 1);
        for (std::size_t r = 0; r < rows; ++r) {
            double* row = prefix_.data() + r * (T_ + 1);
            row[0] = 0.0;
            for (std::size_t t = 1; t <= T_; ++t) row[t] = row[t - 1] + normal(engine);
        }
    }

    /// phi for pair index pm and interval k on the current panel.
    [[nodiscard]] double phi(std::size_t pm, std::size_t k) const {
        const auto [i, j] = pairs_[pm];
        const auto& iv = family_[k];
        return (window(i, iv) - window(j, iv)) * inv_norm_[k];
    }

    [[nodiscard]] GaussianMax max_on_panel() const {
        GaussianMax out{-std::numeric_limits<double>::infinity(), 0.0};
        for (std::size_t pm = 0; pm < pairs_.size(); ++pm) {
            for (std::size_t k = 0; k < family_.size(); ++k) {
                const double v = std::abs(phi(pm, k));
                out.scaled = std::max(out.scaled, family_.a(k) * (v - family_.b(k)));
                out.plain = std::max(out.plain, v);
            }
        }
        return out;
    }

    GaussianMax draw(Engine& engine) {
        draw_panel(engine);
        return max_on_panel();
    }

private:
    [[nodiscard]] double window(int country, const Interval& iv) const {
        const double* row = prefix_.data() + static_cast<std::size_t>(slot_[static_cast<std::size_t>(country)]) * (T_ + 1);
        return row[iv.end_day()] - row[iv.start_day - 1];
    }

    const PairSet& pairs_;
    const IntervalFamily& family_;
    std::size_t T_ = 0;
    std::vector<int> slot_;
    std::vector<double> prefix_;
    std::vector<double> inv_norm_;
};

/// One draw of (max scaled, max plain) using a caller-provided engine.
inline GaussianMax draw_gaussian_max(const PairSet& pairs, const IntervalFamily& family, Engine& engine) {
    GaussianSampler sampler(pairs, family);
    return sampler.draw(engine);
}

/// 1-based rank of the empirical (1 - alpha)-quantile among N ascending draws,
/// i.e. ceil(N (1 - alpha)) clamped to [1, N]. A relative slack of 1e-9 absorbs
/// representation error so that e.g. N = 5000, alpha = 0.05 gives 4750.
inline std::size_t quantile_rank(std::size_t N, double alpha) {
    const double target = static_cast<double>(N) * (1.0 - alpha);
    auto rank = static_cast<std::size_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
    return std::clamp<std::size_t>(rank, 1, N);
}

inline void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

/// Monte Carlo quantiles of the Gaussian maximum, in both calibration modes.
struct QuantileTable {
    Geometry geometry;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    std::vector<double> sorted_scaled;
    std::vector<double> sorted_plain;
    std::map<double, double> q_scale;
    std::map<double, double> q_uniform;

    void add_alpha(double alpha) {
        validate_alpha(alpha);
        const std::size_t r = quantile_rank(draws, alpha);
        q_scale[alpha] = sorted_scaled[r - 1];
        q_uniform[alpha] = sorted_plain[r - 1];
    }

    [[nodiscard]] double q(double alpha, CriticalMode mode) const {
        const auto& m = mode == CriticalMode::Scale ? q_scale : q_uniform;
        auto it = m.find(alpha);
        if (it == m.end()) {
            throw ConfigError("alpha " + std::to_string(alpha) + " was not precomputed in the quantile table");
        }
        return it->second;
    }
};

inline QuantileTable table_from_draws(const Geometry& g, std::uint64_t seed, std::vector<double> scaled,
                                      std::vector<double> plain, std::span<const double> alphas) {
    QuantileTable table;
    table.geometry = g;
    table.seed = seed;
    table.draws = scaled.size();
    std::sort(scaled.begin(), scaled.end());
    std::sort(plain.begin(), plain.end());
    table.sorted_scaled = std::move(scaled);
    table.sorted_plain = std::move(plain);
    for (double a : alphas) table.add_alpha(a);
    return table;
}

/// Simulates N Gaussian maxima and tabulates their empirical quantiles.
/// Draw l uses the substream (seed, l), so the table does not depend on threads.
inline QuantileTable build_quantile_table(const PairSet& pairs, const IntervalFamily& family,
                                          std::span<const double> alphas, std::size_t N, std::uint64_t seed,
                                          unsigned threads = 0) {
    if (N < 100) throw ConfigError("quantile table needs at least 100 draws, got " + std::to_string(N));
    for (double a : alphas) validate_alpha(a);
    if (pairs.empty()) throw ConfigError("quantile table: empty pair set");

    std::vector<double> scaled(N);
    std::vector<double> plain(N);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), N));
    const std::size_t chunk = (N + workers - 1) / workers;
    parallel_for(workers, workers, [&](std::size_t w) {
        GaussianSampler sampler(pairs, family);
        const std::size_t hi = std::min(N, (w + 1) * chunk);
        for (std::size_t l = w * chunk; l < hi; ++l) {
            Engine eng = make_substream(seed, StreamDomain::GaussianDraw, {l});
            const auto m = sampler.draw(eng);
            scaled[l] = m.scaled;
            plain[l] = m.plain;
        }
    });
    return table_from_draws(make_geometry(pairs, family), seed, std::move(scaled), std::move(plain), alphas);
}

/// Scale mode: b(h) + q/a(h). Uniform mode: the same value for every h.
inline double critical_value(const QuantileTable& table, double alpha, double h, CriticalMode mode) {
    const double q = table.q(alpha, mode);
    if (mode == CriticalMode::Uniform) return q;
    const auto c = scale_constants(h);
    return c.b + q / c.a;
}

// Cache file: a versioned text header followed by both sorted draw vectors in
// hexadecimal floating point, so reloading is bit-exact.

inline constexpr const char* kQuantileCacheMagic = "mscale-quantile-cache";
inline constexpr int kQuantileCacheVersion = 1;

inline std::filesystem::path quantile_cache_path(const std::filesystem::path& dir, const Geometry& g,
                                                 std::uint64_t seed, std::size_t N) {
    return dir / ("quantiles_" + g.key() + "_" + std::to_string(seed) + "_" + std::to_string(N) + ".txt");
}

inline void write_quantile_cache(const std::filesystem::path& file, const QuantileTable& table) {
    std::filesystem::create_directories(file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write quantile cache " + tmp);
        out << kQuantileCacheMagic << ' ' << kQuantileCacheVersion << '\n';
        out << "geometry " << table.geometry.T << ' ' << table.geometry.n_countries << ' '
            << detail::hex64(table.geometry.pair_hash) << ' ' << detail::hex64(table.geometry.family_hash) << '\n';
        out << "seed " << table.seed << '\n';
        out << "draws " << table.draws << '\n';
        char buf[64];
        for (const auto* vec : {&table.sorted_scaled, &table.sorted_plain}) {
            out << (vec == &table.sorted_scaled ? "scale" : "uniform");
            for (double v : *vec) {
                std::snprintf(buf, sizeof buf, " %a", v);
                out << buf;
            }
            out << '\n';
        }
        if (!out) throw IoError("failed writing quantile cache " + tmp);
    }
    std::filesystem::rename(tmp, file);
}

/// Loads a cached table. Returns nullopt if the file is missing or was written
/// for a different geometry, seed or draw count.
inline std::optional<QuantileTable> read_quantile_cache(const std::filesystem::path& file, const Geometry& g,
                                                        std::uint64_t seed, std::size_t N,
                                                        std::span<const double> alphas) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::string magic, tag;
    int version = 0;
    in >> magic >> version;
    if (magic != kQuantileCacheMagic || version != kQuantileCacheVersion) return std::nullopt;

    Geometry fg;
    std::string ph, fh;
    in >> tag >> fg.T >> fg.n_countries >> ph >> fh;
    if (tag != "geometry") return std::nullopt;
    fg.pair_hash = std::stoull(ph, nullptr, 16);
    fg.family_hash = std::stoull(fh, nullptr, 16);
    std::uint64_t file_seed = 0;
    std::size_t file_draws = 0;
    in >> tag >> file_seed;
    if (tag != "seed") return std::nullopt;
    in >> tag >> file_draws;
    if (tag != "draws") return std::nullopt;
    if (!(fg == g) || file_seed != seed || file_draws != N) return std::nullopt;

    auto read_vec = [&](const char* expected) -> std::optional<std::vector<double>> {
        std::string name;
        in >> name;
        if (name != expected) return std::nullopt;
        std::vector<double> v(file_draws);
        for (auto& x : v) {
            std::string tok;
            if (!(in >> tok)) return std::nullopt;
            x = std::strtod(tok.c_str(), nullptr);
        }
        return v;
    };
    auto scaled = read_vec("scale");
    auto plain = read_vec("uniform");
    if (!scaled || !plain) throw IoError("corrupt quantile cache " + file.string());
    return table_from_draws(g, seed, std::move(*scaled), std::move(*plain), alphas);
}

/// Builds the table, reusing a cache file under cache_dir when one matches.
inline QuantileTable cached_quantile_table(const PairSet& pairs, const IntervalFamily& family,
                                           std::span<const double> alphas, std::size_t N, std::uint64_t seed,
                                           const std::optional<std::filesystem::path>& cache_dir,
                                           unsigned threads = 0, bool* cache_hit = nullptr) {
    const Geometry g = make_geometry(pairs, family);
    if (cache_hit) *cache_hit = false;
    if (cache_dir) {
        const auto file = quantile_cache_path(*cache_dir, g, seed, N);
        if (auto t = read_quantile_cache(file, g, seed, N, alphas)) {
            if (cache_hit) *cache_hit = true;
            return *t;
        }
        auto table = build_quantile_table(pairs, family, alphas, N, seed, threads);
        write_quantile_cache(file, table);
        return table;
    }
    return build_quantile_table(pairs, family, alphas, N, seed, threads);
}

} // namespace mscale
