#pragma once

// Scoring pipeline output against a corpus manifest: yield rate, accuracy, per-site and
// per-finalization-point slices, and Category 2 (incorrect yield) breakdowns.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nodulelink/corpus.hpp"
#include "nodulelink/pipeline.hpp"

namespace nodulelink {

enum class YieldCategory { C1, C2_wrong_nodule_info, C2_wrong_images };

namespace detail {
inline constexpr EnumNames<YieldCategory, 3> kCategoryNames{{{{YieldCategory::C1, "C1"},
                                                              {YieldCategory::C2_wrong_nodule_info, "C2_wrong_nodule_info"},
                                                              {YieldCategory::C2_wrong_images, "C2_wrong_images"}}}};
}  // namespace detail

inline std::string_view to_string(YieldCategory c) { return detail::kCategoryNames.name(c); }
inline YieldCategory parse_yield_category(std::string_view s) {
    return detail::parse_or_throw(detail::kCategoryNames, s, "yield category");
}

/// Integer percent of num/den, rounded half up; empty when den is 0.
inline std::optional<int> percent(long num, long den) {
    if (den <= 0 || num < 0) return std::nullopt;
    return static_cast<int>((200 * num + den) / (2 * den));
}

inline std::string percent_text(long num, long den) {
    auto p = percent(num, den);
    return p ? std::to_string(*p) + "%" : "";
}

struct ErrorRecord {
    std::string case_id;
    std::string nodule_id;
    YieldCategory category = YieldCategory::C2_wrong_images;
    FinalizationPoint finalized_at;
    std::string site;
};

struct SliceStats {
    long truth = 0;
    long yield = 0;
    long correct = 0;

    [[nodiscard]] double yield_rate() const { return truth > 0 ? static_cast<double>(yield) / truth : 0.0; }
    [[nodiscard]] std::optional<double> accuracy() const {
        if (yield == 0) return std::nullopt;
        return static_cast<double>(correct) / yield;
    }
};

struct PointStats {
    FinalizationPoint point;
    long cumulative_yield = 0;
    long cumulative_correct = 0;
};

struct IncorrectTable {
    std::vector<std::string> sites;                          // column order
    std::map<std::string, long> site_yield;                  // denominators for the proportions
    std::map<std::pair<FinalizationPoint, std::string>, long> counts;

    [[nodiscard]] long cell(FinalizationPoint p, const std::string& site) const {
        auto it = counts.find({p, site});
        return it == counts.end() ? 0 : it->second;
    }
    [[nodiscard]] long point_total(FinalizationPoint p) const {
        long t = 0;
        for (const auto& s : sites) t += cell(p, s);
        return t;
    }
    [[nodiscard]] long stage_total(int stage) const {
        long t = 0;
        for (auto p : kYieldPoints) {
            if (p.stage == stage) t += point_total(p);
        }
        return t;
    }
    [[nodiscard]] long site_total(const std::string& site) const {
        long t = 0;
        for (auto p : kYieldPoints) t += cell(p, site);
        return t;
    }
    [[nodiscard]] long total() const { return stage_total(1) + stage_total(2); }
    [[nodiscard]] std::optional<int> site_incorrect_percent(const std::string& site) const {
        auto it = site_yield.find(site);
        return percent(site_total(site), it == site_yield.end() ? 0 : it->second);
    }
};

struct EvalReport {
    SliceStats all;
    std::map<std::string, SliceStats> by_site;
    std::vector<PointStats> by_point;
    std::vector<ErrorRecord> errors;
    IncorrectTable incorrect;

    [[nodiscard]] long n_truth_nodules() const { return all.truth; }
    [[nodiscard]] long n_yield() const { return all.yield; }
    [[nodiscard]] long n_correct() const { return all.correct; }
    [[nodiscard]] double yield_rate() const { return all.yield_rate(); }
    [[nodiscard]] std::optional<double> accuracy() const { return all.accuracy(); }
};

inline bool same_pair(const std::pair<ImageRef, ImageRef>& got, const KeyImages& key) {
    const std::set<ImageRef> a{got.first, got.second};
    const std::set<ImageRef> b{{key.study_id, key.transverse}, {key.study_id, key.longitudinal}};
    return a.size() == 2 && a == b;
}

/// Nodule information is checked before the image pair.
inline YieldCategory categorize(const NoduleOutcome& outcome, const NoduleTruth& truth) {
    if (!outcome.yielded || !outcome.images) throw ValidationError("categorize needs a yielded outcome");
    if (outcome.nodule.laterality != truth.laterality || outcome.label != truth.diagnosis) {
        return YieldCategory::C2_wrong_nodule_info;
    }
    return same_pair(*outcome.images, truth.key_images) ? YieldCategory::C1 : YieldCategory::C2_wrong_images;
}

namespace detail {

/// Index of the truth nodule an outcome is scored against, or -1. Exact
/// (laterality, location, label) first; then a lone truth nodule; then a unique laterality match.
inline int align_outcome(const NoduleRecord& n, const std::vector<NoduleTruth>& truth, const std::vector<bool>& used) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& t = truth[i];
        if (!used[i] && t.laterality == n.laterality && t.location == n.location && t.label == n.label) {
            return static_cast<int>(i);
        }
    }
    if (truth.size() == 1) return used[0] ? -1 : 0;
    int found = -1;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].laterality != n.laterality) continue;
        if (found >= 0) return -1;
        found = static_cast<int>(i);
    }
    return found >= 0 && !used[static_cast<std::size_t>(found)] ? found : -1;
}

}  // namespace detail

inline EvalReport evaluate(const std::vector<CaseResult>& results, const CorpusManifest& manifest) {
    EvalReport rep;
    std::set<std::string> sites;
    for (const auto& c : manifest.cases) {
        rep.all.truth += static_cast<long>(c.nodules.size());
        rep.by_site[c.site].truth += static_cast<long>(c.nodules.size());
        sites.insert(c.site);
    }
    std::map<FinalizationPoint, std::pair<long, long>> at_point;
    std::set<std::string> seen;
    for (const auto& r : results) {
        const auto* c = manifest.find(r.case_id);
        if (!c) throw ValidationError("result for unknown case '" + r.case_id + "'");
        if (!seen.insert(r.case_id).second) throw ValidationError("duplicate result for case '" + r.case_id + "'");
        std::vector<bool> used(c->nodules.size(), false);
        for (std::size_t k = 0; k < r.per_nodule.size(); ++k) {
            const auto& o = r.per_nodule[k];
            if (!o.yielded) continue;
            if (!o.finalized_at || !o.images) throw ValidationError("case " + r.case_id + ": yield without images");
            const int idx = detail::align_outcome(o.nodule, c->nodules, used);
            YieldCategory cat = YieldCategory::C2_wrong_nodule_info;
            std::string nodule_id = "unaligned_" + std::to_string(k + 1);
            if (idx >= 0) {
                used[static_cast<std::size_t>(idx)] = true;
                const auto& t = c->nodules[static_cast<std::size_t>(idx)];
                cat = categorize(o, t);
                nodule_id = t.nodule_id;
            }
            const bool ok = cat == YieldCategory::C1;
            ++rep.all.yield;
            ++rep.by_site[c->site].yield;
            ++at_point[*o.finalized_at].first;
            if (ok) {
                ++rep.all.correct;
                ++rep.by_site[c->site].correct;
                ++at_point[*o.finalized_at].second;
            } else {
                rep.errors.push_back({r.case_id, nodule_id, cat, *o.finalized_at, c->site});
            }
        }
    }
    long y = 0, ok = 0;
    for (auto p : kYieldPoints) {
        y += at_point[p].first;
        ok += at_point[p].second;
        rep.by_point.push_back({p, y, ok});
    }
    rep.incorrect.sites.assign(sites.begin(), sites.end());
    for (const auto& [site, s] : rep.by_site) rep.incorrect.site_yield[site] = s.yield;
    for (const auto& e : rep.errors) ++rep.incorrect.counts[{e.finalized_at, e.site}];
    return rep;
}

inline std::vector<PointStats> breakdown_by_point(const std::vector<CaseResult>& results, const CorpusManifest& manifest) {
    return evaluate(results, manifest).by_point;
}

inline IncorrectTable incorrect_by_site_stage(const std::vector<CaseResult>& results, const CorpusManifest& manifest) {
    return evaluate(results, manifest).incorrect;
}

// ---------------------------------------------------------------------------------------
// JSON and CSV

inline json slice_json(const SliceStats& s) {
    return json{{"truth", s.truth},
                {"yield", s.yield},
                {"correct", s.correct},
                {"yield_rate", s.yield_rate()},
                {"accuracy", optional_to_json(s.accuracy())},
                {"yield_rate_pct", optional_to_json(percent(s.yield, s.truth))},
                {"accuracy_pct", optional_to_json(percent(s.correct, s.yield))}};
}

inline void to_json(json& j, const ErrorRecord& e) {
    j = json{{"case_id", e.case_id},
             {"nodule_id", e.nodule_id},
             {"category", std::string(to_string(e.category))},
             {"finalized_at", e.finalized_at},
             {"site", e.site}};
}

inline void to_json(json& j, const EvalReport& r) {
    j = slice_json(r.all);
    j["n_truth_nodules"] = r.n_truth_nodules();
    j["n_yield"] = r.n_yield();
    j["n_correct"] = r.n_correct();
    json sites = json::object();
    for (const auto& [site, s] : r.by_site) sites[site] = slice_json(s);
    j["by_site"] = sites;
    json points = json::array();
    for (const auto& p : r.by_point) {
        points.push_back({{"stage", p.point.stage},
                          {"module", p.point.module},
                          {"cumulative_yield", p.cumulative_yield},
                          {"cumulative_correct", p.cumulative_correct}});
    }
    j["by_point"] = points;
    j["errors"] = r.errors;
    json table = json::array();
    for (auto p : kYieldPoints) {
        json row{{"stage", p.stage}, {"module", p.module}, {"total", r.incorrect.point_total(p)}};
        for (const auto& s : r.incorrect.sites) row["sites"][s] = r.incorrect.cell(p, s);
        table.push_back(row);
    }
    j["incorrect_by_site_stage"] = table;
}

inline std::string table1_csv(const EvalReport& r) {
    std::string out = "site,ground_truth_nodules,yields,successful_yields,yield_rate,accuracy\n";
    auto row = [&](const std::string& name, const SliceStats& s) {
        out += name + "," + std::to_string(s.truth) + "," + std::to_string(s.yield) + "," + std::to_string(s.correct) +
               "," + percent_text(s.yield, s.truth) + "," + percent_text(s.correct, s.yield) + "\n";
    };
    for (const auto& [site, s] : r.by_site) row(site, s);
    row("All Sites", r.all);
    return out;
}

inline std::string table2_csv(const EvalReport& r) {
    std::string out = "stage,module,yield,yield_rate,correct,accuracy\n";
    for (const auto& p : r.by_point) {
        out += std::to_string(p.point.stage) + ",M" + std::to_string(p.point.module) + "," +
               std::to_string(p.cumulative_yield) + "," + percent_text(p.cumulative_yield, r.all.truth) + "," +
               std::to_string(p.cumulative_correct) + "," + percent_text(p.cumulative_correct, p.cumulative_yield) +
               "\n";
    }
    return out;
}

inline std::string table3_csv(const IncorrectTable& t) {
    std::string out = "stage,module";
    for (const auto& s : t.sites) out += "," + s;
    out += ",module_total,stage_total\n";
    int last_stage = 0;
    for (auto p : kYieldPoints) {
        out += std::to_string(p.stage) + ",M" + std::to_string(p.module);
        for (const auto& s : t.sites) out += "," + std::to_string(t.cell(p, s));
        out += "," + std::to_string(t.point_total(p)) + ",";
        if (p.stage != last_stage) out += std::to_string(t.stage_total(p.stage));
        last_stage = p.stage;
        out += "\n";
    }
    out += "site_total,";
    for (const auto& s : t.sites) {
        const auto pct = t.site_incorrect_percent(s);
        out += "," + std::to_string(t.site_total(s)) + (pct ? " (" + std::to_string(*pct) + "%)" : "");
    }
    out += "," + std::to_string(t.total()) + ",\n";
    return out;
}

}  // namespace nodulelink
