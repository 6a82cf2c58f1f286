#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mscale/errors.hpp"
#include "mscale/stats_core.hpp"

namespace mscale {

enum class DateFormat { Iso, DayMonthYear };

struct ColumnMapping {
    std::string date = "date";
    std::string unit = "unit";
    std::string cases = "new_cases";
    DateFormat date_format = DateFormat::Iso;
};

struct CaseRow {
    std::chrono::sys_days date;
    std::int64_t new_cases = 0;
    std::size_t line = 0;
};

/// Daily case rows grouped per unit, sorted by date, contiguous, one row per day.
struct RawCaseTable {
    std::vector<std::string> units; ///< first-appearance order
    std::map<std::string, std::vector<CaseRow>> rows;
};

inline std::string format_date(std::chrono::sys_days d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline bool parse_date(std::string_view text, DateFormat fmt, std::chrono::sys_days& out) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string s(text);
    int got = 0;
    if (fmt == DateFormat::Iso) {
        got = std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail);
    } else {
        got = std::sscanf(s.c_str(), "%2u/%2u/%4d%c", &d, &m, &y, &tail);
    }
    if (got != 3) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd};
    return true;
}

namespace detail {

// Splits one CSV record; double quotes delimit fields that may contain commas.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur.push_back('"');
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

} // namespace detail

/// Parses case rows from a CSV stream with a header row.
inline RawCaseTable ingest_csv(std::istream& in, const ColumnMapping& cols = {}, const std::string& source = "<input>") {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw IngestError(source + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // UTF-8 BOM
    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (detail::trim(header[c]) == name) return c;
        throw IngestError(source + ": column '" + name + "' not found in header");
    };
    const std::size_t c_date = column(cols.date);
    const std::size_t c_unit = column(cols.unit);
    const std::size_t c_cases = column(cols.cases);
    const std::size_t needed = std::max({c_date, c_unit, c_cases}) + 1;

    RawCaseTable table;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() < needed) {
            throw IngestError(source + ":" + std::to_string(lineno) + ": expected at least " + std::to_string(needed) +
                              " fields, got " + std::to_string(fields.size()));
        }
        CaseRow row;
        row.line = lineno;
        const std::string date = detail::trim(fields[c_date]);
        if (!parse_date(date, cols.date_format, row.date)) {
            throw IngestError(source + ":" + std::to_string(lineno) + ": invalid date '" + date + "'");
        }
        const std::string cases = detail::trim(fields[c_cases]);
        try {
            std::size_t used = 0;
            row.new_cases = std::stoll(cases, &used);
            if (used != cases.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IngestError(source + ":" + std::to_string(lineno) + ": invalid case count '" + cases + "'");
        }
        const std::string unit = detail::trim(fields[c_unit]);
        if (unit.empty()) throw IngestError(source + ":" + std::to_string(lineno) + ": empty unit");
        auto [it, inserted] = table.rows.try_emplace(unit);
        if (inserted) table.units.push_back(unit);
        it->second.push_back(row);
    }
    if (table.units.empty()) throw IngestError(source + ": no data rows");

    for (auto& [unit, rows] : table.rows) {
        std::stable_sort(rows.begin(), rows.end(), [](const CaseRow& a, const CaseRow& b) { return a.date < b.date; });
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const auto step = (rows[k].date - rows[k - 1].date).count();
            if (step == 0) {
                throw IngestError(source + ": duplicate row for unit '" + unit + "' on " + format_date(rows[k].date) +
                                  " (lines " + std::to_string(rows[k - 1].line) + " and " +
                                  std::to_string(rows[k].line) + ")");
            }
            if (step > 1) {
                throw IngestError(source + ": unit '" + unit + "' has a gap between " +
                                  format_date(rows[k - 1].date) + " and " + format_date(rows[k].date));
            }
        }
    }
    return table;
}

inline RawCaseTable ingest_csv(const std::string& path, const ColumnMapping& cols = {}) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open input file '" + path + "'");
    return ingest_csv(in, cols, path);
}

struct UnitStart {
    std::string unit;
    std::string start_date;
};

struct NormalizationReport {
    std::vector<UnitStart> starts;
    int T = 0;
    long negatives_replaced = 0;           ///< over all ingested rows
    long negatives_replaced_in_window = 0; ///< over the retained analysis window only
};

/// Aligns every unit at its first day with cumulative count >= threshold and
/// truncates all units to the shortest remaining length. Negative daily counts
/// are replaced by 0 before the cumulative scan.
inline std::pair<std::vector<CountSeries>, NormalizationReport> normalize(const RawCaseTable& table,
                                                                           std::int64_t threshold = 100) {
    NormalizationReport rep;
    struct Aligned {
        std::string unit;
        std::vector<std::int64_t> clamped;
        std::vector<bool> was_negative;
        std::size_t start = 0;
    };
    std::vector<Aligned> aligned;
    std::size_t T = std::numeric_limits<std::size_t>::max();
    for (const auto& unit : table.units) {
        const auto& rows = table.rows.at(unit);
        Aligned a;
        a.unit = unit;
        for (const auto& r : rows) {
            a.was_negative.push_back(r.new_cases < 0);
            a.clamped.push_back(std::max<std::int64_t>(r.new_cases, 0));
            if (r.new_cases < 0) ++rep.negatives_replaced;
        }
        std::int64_t cum = 0;
        std::size_t start = a.clamped.size();
        for (std::size_t k = 0; k < a.clamped.size(); ++k) {
            cum += a.clamped[k];
            if (cum >= threshold) {
                start = k;
                break;
            }
        }
        if (start == a.clamped.size()) {
            throw IngestError("unit '" + unit + "' never reaches " + std::to_string(threshold) + " cumulative cases");
        }
        a.start = start;
        rep.starts.push_back({unit, format_date(rows[start].date)});
        T = std::min(T, a.clamped.size() - start);
        aligned.push_back(std::move(a));
    }

    std::vector<CountSeries> series;
    for (const auto& a : aligned) {
        CountSeries s;
        s.id = a.unit;
        for (std::size_t k = a.start; k < a.start + T; ++k) {
            s.values.push_back(static_cast<double>(a.clamped[k]));
            if (a.was_negative[k]) ++rep.negatives_replaced_in_window;
        }
        series.push_back(std::move(s));
    }
    rep.T = static_cast<int>(T);
    return {std::move(series), rep};
}

} // namespace mscale
