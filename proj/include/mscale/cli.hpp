#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mscale/errors.hpp"
#include "mscale/figure.hpp"
#include "mscale/files.hpp"
#include "mscale/ingest.hpp"
#include "mscale/multiscale_test.hpp"
#include "mscale/results_json.hpp"
#include "mscale/synthetic.hpp"

namespace mscale::cli {

/// Process exit codes. Every failure path maps to exactly one of these.
enum ExitCode : int {
    kOk = 0,
    kUsage = 2,   ///< unknown flag, malformed flag value
    kConfig = 3,  ///< ConfigError
    kIngest = 4,  ///< IngestError
    kNumeric = 5, ///< NumericError
    kIo = 6,      ///< IoError, filesystem failures
    kInternal = 70,
};

inline constexpr const char* kCacheDirEnv = "MSCALE_CACHE_DIR";

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("invalid integer '" + tok + "'");
        }
    }
    return out;
}

/// "default" or "lengths=7,14;offsets=1,4;stride=7" or "lengths=7;starts=1,5,9".
inline FamilySpec parse_family(const std::string& text) {
    FamilySpec spec;
    if (text.empty() || text == "default") return spec;
    StrideRule stride;
    std::optional<StartList> list;
    bool have_lengths = false;
    for (const auto& part : split(text, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("family: expected key=value, got '" + part + "'");
        const std::string key = part.substr(0, eq);
        const std::string value = part.substr(eq + 1);
        if (key == "lengths") {
            spec.lengths = parse_ints(value);
            have_lengths = true;
        } else if (key == "offsets") {
            stride.offsets = parse_ints(value);
        } else if (key == "stride") {
            const auto v = parse_ints(value);
            if (v.size() != 1) throw ConfigError("family: stride takes one value");
            stride.stride = v.front();
        } else if (key == "starts") {
            list = StartList{parse_ints(value)};
        } else {
            throw ConfigError("family: unknown key '" + key + "'");
        }
    }
    if (!have_lengths) throw ConfigError("family: 'lengths' is required");
    if (list) {
        spec.starts = *list;
    } else {
        spec.starts = stride;
    }
    return spec;
}

/// "all" or "A:B,A:C" by unit id or zero-based index.
inline std::optional<std::vector<std::pair<int, int>>> parse_pairs(const std::string& text,
                                                                   const std::vector<std::string>& ids) {
    if (text.empty() || text == "all") return std::nullopt;
    auto resolve = [&](const std::string& tok) {
        for (std::size_t k = 0; k < ids.size(); ++k)
            if (ids[k] == tok) return static_cast<int>(k);
        try {
            std::size_t used = 0;
            const int idx = std::stoi(tok, &used);
            if (used == tok.size() && idx >= 0 && idx < static_cast<int>(ids.size())) return idx;
        } catch (const std::exception&) {
        }
        throw ConfigError("pairs: unknown series '" + tok + "'");
    };
    std::vector<std::pair<int, int>> out;
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("pairs: expected A:B, got '" + item + "'");
        int i = resolve(item.substr(0, colon));
        int j = resolve(item.substr(colon + 1));
        if (i == j) throw ConfigError("pairs: a series cannot be compared with itself");
        if (i > j) std::swap(i, j);
        out.emplace_back(i, j);
    }
    return out;
}

inline std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

inline std::optional<OverlaySeries> read_overlay(const std::string& path, const std::string& column, int T) {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open overlay file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestError(path + ": empty overlay file");
    const auto header = mscale::detail::split_csv_line(line);
    std::size_t col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c)
        if (mscale::detail::trim(header[c]) == column) col = c;
    if (col == header.size()) throw IngestError(path + ": overlay column '" + column + "' not found");
    OverlaySeries ov;
    ov.label = column;
    std::size_t lineno = 1;
    while (std::getline(in, line) && static_cast<int>(ov.values.size()) < T) {
        ++lineno;
        const auto fields = mscale::detail::split_csv_line(line);
        if (fields.size() <= col) throw IngestError(path + ":" + std::to_string(lineno) + ": missing overlay value");
        try {
            ov.values.push_back(std::stod(fields[col]));
        } catch (const std::exception&) {
            throw IngestError(path + ":" + std::to_string(lineno) + ": invalid overlay value");
        }
    }
    return ov;
}

inline std::string results_csv(const TestResultSet& res) {
    std::ostringstream os;
    os.precision(17);
    os << "first,second,start,end,length,psi,critical,reject,degenerate,minimal\n";
    for (const auto& p : res.pairs) {
        for (const auto& t : p.triples) {
            const bool minimal = std::find(p.minimal.begin(), p.minimal.end(), t.interval) != p.minimal.end();
            os << res.ids[static_cast<std::size_t>(p.i)] << ',' << res.ids[static_cast<std::size_t>(p.j)] << ','
               << t.interval.start_day << ',' << t.interval.end_day() << ',' << t.interval.length_days << ',' << t.psi
               << ',' << t.critical << ',' << (t.reject ? 1 : 0) << ',' << (t.degenerate ? 1 : 0) << ','
               << (minimal ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IngestError& e) {
        err << "input error: " << e.what() << '\n';
        return kIngest;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

} // namespace detail

struct TestArgs {
    std::string input;
    double alpha = 0.05;
    std::string mode = "scale";
    std::size_t draws = 5000;
    std::uint64_t seed = 1;
    std::string pairs = "all";
    std::string family = "default";
    std::string cache_dir;
    std::string out = "mscale-out";
    unsigned threads = 0;
    std::string date_col = "date";
    std::string unit_col = "unit";
    std::string cases_col = "new_cases";
    std::string date_format = "iso";
    long threshold = 100;
    int bandwidth = 7;
    std::string overlay;
    std::string overlay_col = "value";
    bool no_figures = false;
};

/// Ingest, normalize, test, and write results.json, results.csv and one SVG per pair.
inline int cmd_test(const TestArgs& a, std::ostream& log, std::ostream& err) {
    return detail::guarded(
        [&] {
            ColumnMapping cols;
            cols.date = a.date_col;
            cols.unit = a.unit_col;
            cols.cases = a.cases_col;
            if (a.date_format == "iso") {
                cols.date_format = DateFormat::Iso;
            } else if (a.date_format == "dmy") {
                cols.date_format = DateFormat::DayMonthYear;
            } else {
                throw ConfigError("date format must be iso or dmy");
            }
            if (a.bandwidth < 1) throw ConfigError("bandwidth must be at least 1 day");

            TestConfig cfg;
            cfg.alpha = a.alpha;
            cfg.mode = parse_mode(a.mode);
            cfg.draws = a.draws;
            cfg.seed = a.seed;
            cfg.family = detail::parse_family(a.family);
            cfg.threads = a.threads;
            std::string cache = a.cache_dir;
            if (cache.empty()) {
                if (const char* env = std::getenv(kCacheDirEnv)) cache = env;
            }
            if (!cache.empty()) cfg.cache_dir = cache;
            cfg.validate();

            const auto table = ingest_csv(a.input, cols);
            auto [series, report] = normalize(table, a.threshold);
            std::vector<std::string> ids;
            for (const auto& s : series) ids.push_back(s.id);
            cfg.pairs = detail::parse_pairs(a.pairs, ids);

            const auto res = run_test(series, cfg);
            const auto overlay = detail::read_overlay(a.overlay, a.overlay_col, res.T);

            const std::filesystem::path out(a.out);
            write_file_atomic(out / "results.json", results_to_json(res, cfg, report).dump(2) + "\n");
            write_file_atomic(out / "results.csv", detail::results_csv(res));
            if (!a.no_figures) {
                FigureOptions fo;
                fo.bandwidth_days = a.bandwidth;
                for (const auto& p : res.pairs) {
                    const auto& s1 = series[static_cast<std::size_t>(p.i)];
                    const auto& s2 = series[static_cast<std::size_t>(p.j)];
                    write_file_atomic(out / "figures" / (detail::safe_name(s1.id) + "_vs_" + detail::safe_name(s2.id) + ".svg"),
                                      render_figure(p, s1, s2, overlay, fo));
                }
            }

            log << "T = " << res.T << ", series = " << res.ids.size() << ", sigma_hat = " << res.sigma_hat
                << ", q = " << res.quantile.q << (res.quantile.cache_hit ? " (cached)" : "") << '\n';
            const auto summary = fwer_decision_summary(res);
            for (const auto& ps : summary.pairs) log << "  " << ps.statement << '\n';
            log << summary.statement << '\n';
            for (const auto& w : res.warnings) err << "warning: " << w << '\n';
            return static_cast<int>(kOk);
        },
        err);
}

struct SimulateArgs {
    std::string kind; ///< size | power
    std::vector<int> T{100};
    std::vector<int> n{5};
    double sigma = 15.0;
    std::string scenario;
    std::size_t reps = 1000;
    std::vector<double> alphas{0.01, 0.05, 0.1};
    std::size_t draws = 5000;
    std::uint64_t seed = 1;
    std::string mode = "scale";
    unsigned threads = 0;
    std::string out;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    return detail::guarded(
        [&] {
            std::vector<ExperimentRow> rows;
            for (int T : a.T) {
                for (int n : a.n) {
                    SimConfig cfg;
                    cfg.n = n;
                    cfg.T = T;
                    cfg.sigma = a.sigma;
                    cfg.reps = a.reps;
                    cfg.alphas = a.alphas;
                    cfg.draws = a.draws;
                    cfg.seed = a.seed;
                    cfg.mode = parse_mode(a.mode);
                    cfg.threads = a.threads;
                    std::vector<ExperimentRow> part;
                    if (a.kind == "size") {
                        cfg.scenario = a.scenario.empty() ? Scenario::Null : parse_scenario(a.scenario);
                        part = run_size_experiment(cfg);
                    } else {
                        cfg.scenario = parse_scenario(a.scenario.empty() ? "A" : a.scenario);
                        part = run_power_experiment(cfg);
                    }
                    rows.insert(rows.end(), part.begin(), part.end());
                }
            }
            std::ostringstream csv;
            write_experiment_csv(csv, rows);
            if (a.out.empty()) {
                out << csv.str();
            } else {
                write_file_atomic(a.out, csv.str());
            }
            return static_cast<int>(kOk);
        },
        err);
}

/// Parses argv and dispatches to a subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Multiscale comparison of epidemic time trends"};
    app.set_config("--config", "", "Read flags from a TOML/INI file");
    app.require_subcommand(1);

    TestArgs targs;
    auto* test = app.add_subcommand("test", "Run the multiscale test on a case-count CSV");
    test->add_option("--input", targs.input, "Input CSV")->required()->check(CLI::ExistingFile);
    test->add_option("--alpha", targs.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    test->add_option("--mode", targs.mode, "Critical values: scale or uniform")
        ->check(CLI::IsMember({"scale", "uniform"}));
    test->add_option("--draws", targs.draws, "Monte Carlo draws for the quantile")->check(CLI::Range(100, 100000000));
    test->add_option("--seed", targs.seed, "Master seed");
    test->add_option("--pairs", targs.pairs, "Pairs to compare: all, or A:B,C:D");
    test->add_option("--family", targs.family, "Interval family: default, or lengths=..;offsets=..;stride=..");
    test->add_option("--cache-dir", targs.cache_dir, std::string("Quantile cache directory (env ") + kCacheDirEnv + ")");
    test->add_option("--out", targs.out, "Output directory");
    test->add_option("--threads", targs.threads, "Worker threads (0 = all cores)");
    test->add_option("--date-column", targs.date_col, "Date column name");
    test->add_option("--unit-column", targs.unit_col, "Unit column name");
    test->add_option("--cases-column", targs.cases_col, "New-cases column name");
    test->add_option("--date-format", targs.date_format, "iso (YYYY-MM-DD) or dmy (DD/MM/YYYY)")
        ->check(CLI::IsMember({"iso", "dmy"}));
    test->add_option("--threshold", targs.threshold, "Cumulative count defining day 1")->check(CLI::PositiveNumber);
    test->add_option("--bandwidth", targs.bandwidth, "Smoothing half-width in days for figures")
        ->check(CLI::PositiveNumber);
    test->add_option("--overlay", targs.overlay, "CSV with an auxiliary series drawn in the figures");
    test->add_option("--overlay-column", targs.overlay_col, "Column of the overlay CSV");
    test->add_flag("--no-figures", targs.no_figures, "Skip SVG output");

    SimulateArgs sargs;
    auto* sim = app.add_subcommand("simulate", "Size and power experiments on negative binomial data");
    sim->require_subcommand(1);
    auto add_sim_options = [&](CLI::App* sub) {
        sub->add_option("--T", sargs.T, "Series lengths")->delimiter(',')->check(CLI::Range(7, 1000000));
        sub->add_option("--n", sargs.n, "Numbers of series")->delimiter(',')->check(CLI::Range(2, 100000));
        sub->add_option("--sigma", sargs.sigma, "Overdispersion sigma (> 1)")->check(CLI::Range(1.0, 1e6));
        sub->add_option("--scenario", sargs.scenario, "null, A or B")->check(CLI::IsMember({"null", "A", "B"}));
        sub->add_option("--reps", sargs.reps, "Replications")->check(CLI::Range(1, 100000000));
        sub->add_option("--alphas", sargs.alphas, "Significance levels")->delimiter(',')->check(CLI::Range(0.0, 1.0));
        sub->add_option("--draws", sargs.draws, "Monte Carlo draws for the quantile")->check(CLI::Range(100, 100000000));
        sub->add_option("--seed", sargs.seed, "Master seed");
        sub->add_option("--mode", sargs.mode, "scale or uniform")->check(CLI::IsMember({"scale", "uniform"}));
        sub->add_option("--threads", sargs.threads, "Worker threads (0 = all cores)");
        sub->add_option("--out", sargs.out, "CSV output file (default stdout)");
    };
    auto* size = sim->add_subcommand("size", "Empirical size under the full null");
    auto* power = sim->add_subcommand("power", "Empirical power in scenario A or B");
    add_sim_options(size);
    add_sim_options(power);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }

    if (*test) return cmd_test(targs, out, err);
    sargs.kind = *size ? "size" : "power";
    if (sargs.kind == "power" && sargs.scenario == "null") {
        err << "usage error: power experiments need scenario A or B\n";
        return kUsage;
    }
    return cmd_simulate(sargs, out, err);
}

} // namespace mscale::cli
