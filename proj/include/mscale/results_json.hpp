#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "mscale/ingest.hpp"
#include "mscale/multiscale_test.hpp"

namespace mscale {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr const char* kQuantileConvention = "ascending order statistic at rank ceil(N(1-alpha))";
inline constexpr const char* kRngDescription = "mt19937_64 per draw, seeded from (seed, domain, draw index) via seed_seq";

namespace detail {

inline nlohmann::ordered_json interval_json(const Interval& iv) {
    return {{"start", iv.start_day}, {"end", iv.end_day()}, {"length", iv.length_days}};
}

inline Interval interval_from_json(const nlohmann::json& j, int T) {
    Interval iv;
    iv.start_day = j.at("start").get<int>();
    iv.length_days = j.at("length").get<int>();
    iv.h = static_cast<double>(iv.length_days) / static_cast<double>(T);
    return iv;
}

inline nlohmann::ordered_json family_json(const FamilySpec& f) {
    nlohmann::ordered_json j;
    j["lengths"] = f.lengths;
    if (const auto* s = std::get_if<StrideRule>(&f.starts)) {
        j["starts"] = {{"rule", "stride"}, {"offsets", s->offsets}, {"stride", s->stride}};
    } else {
        j["starts"] = {{"rule", "list"}, {"days", std::get<StartList>(f.starts).starts}};
    }
    return j;
}

} // namespace detail

/// Serializes a run. Output depends only on the data and configuration, so
/// identical inputs give byte-identical documents.
inline nlohmann::ordered_json results_to_json(const TestResultSet& res, const TestConfig& cfg,
                                              const std::optional<NormalizationReport>& norm = std::nullopt) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["spec_version"] = kResultsSchemaVersion;

    ordered_json config;
    config["alpha"] = cfg.alpha;
    config["mode"] = to_string(cfg.mode);
    config["draws"] = cfg.draws;
    config["seed"] = cfg.seed;
    config["family"] = detail::family_json(cfg.family);
    config["pairs"] = cfg.pairs ? "custom" : "all";
    j["config"] = config;

    j["T"] = res.T;
    j["series"] = res.ids;
    j["sigma_hat"] = res.sigma_hat;
    j["sigma_hat_sq"] = res.overdispersion.sigma_hat_sq;
    ordered_json per_series = ordered_json::object();
    for (const auto& id : res.ids) {
        auto it = res.overdispersion.per_series.find(id);
        if (it != res.overdispersion.per_series.end()) per_series[id] = it->second;
    }
    j["sigma_hat_sq_per_series"] = per_series;

    j["quantiles"] = {{"mode", to_string(res.quantile.mode)},
                      {"alpha", res.quantile.alpha},
                      {"q", res.quantile.q},
                      {"seed", res.quantile.seed},
                      {"N", res.quantile.draws},
                      {"geometry", res.quantile.geometry_key},
                      {"convention", kQuantileConvention},
                      {"rng", kRngDescription}};

    ordered_json pairs = ordered_json::array();
    for (const auto& p : res.pairs) {
        ordered_json pj;
        pj["i"] = p.i;
        pj["j"] = p.j;
        pj["first"] = res.ids.at(static_cast<std::size_t>(p.i));
        pj["second"] = res.ids.at(static_cast<std::size_t>(p.j));
        ordered_json triples = ordered_json::array();
        for (const auto& t : p.triples) {
            triples.push_back({{"start", t.interval.start_day},
                               {"length", t.interval.length_days},
                               {"psi", t.psi},
                               {"critical", t.critical},
                               {"reject", t.reject},
                               {"degenerate", t.degenerate}});
        }
        pj["triples"] = triples;
        ordered_json rej = ordered_json::array();
        for (const auto& iv : p.rejected) rej.push_back(detail::interval_json(iv));
        pj["rejected"] = rej;
        ordered_json mini = ordered_json::array();
        for (const auto& iv : p.minimal) mini.push_back(detail::interval_json(iv));
        pj["minimal"] = mini;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;

    if (norm) {
        ordered_json starts = ordered_json::array();
        for (const auto& s : norm->starts) starts.push_back({{"unit", s.unit}, {"start_date", s.start_date}});
        j["normalization"] = {{"T", norm->T},
                              {"starts", starts},
                              {"negatives_replaced", norm->negatives_replaced},
                              {"negatives_replaced_in_window", norm->negatives_replaced_in_window}};
    }

    const auto summary = fwer_decision_summary(res);
    ordered_json stmts = ordered_json::array();
    for (const auto& ps : summary.pairs) stmts.push_back(ps.statement);
    j["summary"] = {{"statement", summary.statement}, {"pairs", stmts}};
    j["warnings"] = res.warnings;
    return j;
}

/// Reads back the parts of a results document that carry decisions.
inline TestResultSet results_from_json(const nlohmann::json& j) {
    if (j.at("spec_version").get<int>() != kResultsSchemaVersion) {
        throw IngestError("unsupported results schema version " + j.at("spec_version").dump());
    }
    TestResultSet res;
    res.T = j.at("T").get<int>();
    res.ids = j.at("series").get<std::vector<std::string>>();
    res.sigma_hat = j.at("sigma_hat").get<double>();
    res.overdispersion.sigma_hat_sq = j.at("sigma_hat_sq").get<double>();
    for (const auto& [id, v] : j.at("sigma_hat_sq_per_series").items()) res.overdispersion.per_series[id] = v.get<double>();
    const auto& q = j.at("quantiles");
    res.quantile.mode = parse_mode(q.at("mode").get<std::string>());
    res.quantile.alpha = q.at("alpha").get<double>();
    res.quantile.q = q.at("q").get<double>();
    res.quantile.seed = q.at("seed").get<std::uint64_t>();
    res.quantile.draws = q.at("N").get<std::size_t>();
    res.quantile.geometry_key = q.at("geometry").get<std::string>();
    for (const auto& pj : j.at("pairs")) {
        PairResult p;
        p.i = pj.at("i").get<int>();
        p.j = pj.at("j").get<int>();
        for (const auto& tj : pj.at("triples")) {
            TripleRecord t;
            t.interval = detail::interval_from_json(tj, res.T);
            t.psi = tj.at("psi").get<double>();
            t.critical = tj.at("critical").get<double>();
            t.reject = tj.at("reject").get<bool>();
            t.degenerate = tj.at("degenerate").get<bool>();
            p.triples.push_back(t);
        }
        for (const auto& iv : pj.at("rejected")) p.rejected.push_back(detail::interval_from_json(iv, res.T));
        for (const auto& iv : pj.at("minimal")) p.minimal.push_back(detail::interval_from_json(iv, res.T));
        res.pairs.push_back(std::move(p));
    }
    res.warnings = j.at("warnings").get<std::vector<std::string>>();
    return res;
}

} // namespace mscale
