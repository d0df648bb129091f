#pragma once

// Two-stage routing of pathology nodules to key image pairs.
//
// Stage 1 works on the FNA study matched to the pathology report, Stage 2 on the
// diagnostic study. Within a stage: Module 3 keeps images with 2 or 4 calipers, Module 4
// compares banner text with the nodule, and (Stage 2 only) Module 5 compares on-image
// measurements with the radiology report. Yields happen only at (1,3), (1,4), (2,4), (2,5).

#include <algorithm>
#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nodulelink/caliper.hpp"
#include "nodulelink/font.hpp"
#include "nodulelink/json_io.hpp"
#include "nodulelink/ocr.hpp"
#include "nodulelink/path_parser.hpp"
#include "nodulelink/rad_parser.hpp"
#include "nodulelink/study_matcher.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

struct FinalizationPoint {
    int stage = 1;
    int module = 3;

    auto operator<=>(const FinalizationPoint&) const = default;
};

inline constexpr std::array<FinalizationPoint, 4> kYieldPoints{{{1, 3}, {1, 4}, {2, 4}, {2, 5}}};

enum class NoYieldReason {
    no_study_in_window,
    caliper_underflow,
    ocr_mismatch,
    measurement_ambiguous,
    multiple_side_nodules,
    report_parse_failure
};

namespace detail {
inline constexpr EnumNames<NoYieldReason, 6> kNoYieldNames{{{{NoYieldReason::no_study_in_window, "no_study_in_window"},
                                                             {NoYieldReason::caliper_underflow, "caliper_underflow"},
                                                             {NoYieldReason::ocr_mismatch, "ocr_mismatch"},
                                                             {NoYieldReason::measurement_ambiguous, "measurement_ambiguous"},
                                                             {NoYieldReason::multiple_side_nodules, "multiple_side_nodules"},
                                                             {NoYieldReason::report_parse_failure, "report_parse_failure"}}}};
}  // namespace detail

inline std::string_view to_string(NoYieldReason r) { return detail::kNoYieldNames.name(r); }
inline NoYieldReason parse_no_yield_reason(std::string_view s) {
    return detail::parse_or_throw(detail::kNoYieldNames, s, "no-yield reason");
}

struct NoduleOutcome {
    NoduleRecord nodule;
    bool yielded = false;
    std::optional<std::pair<ImageRef, ImageRef>> images;
    Diagnosis label = Diagnosis::benign;
    std::optional<FinalizationPoint> finalized_at;
    std::optional<NoYieldReason> no_yield_reason;

    static NoduleOutcome yield(const NoduleRecord& n, ImageRef a, ImageRef b, FinalizationPoint at) {
        return {n, true, std::make_pair(std::move(a), std::move(b)), n.diagnosis, at, std::nullopt};
    }
    static NoduleOutcome no_yield(const NoduleRecord& n, NoYieldReason why) {
        return {n, false, std::nullopt, n.diagnosis, std::nullopt, why};
    }
};

struct CaseResult {
    std::string case_id;
    std::vector<NoduleOutcome> per_nodule;
    std::vector<std::string> diagnostics;
};

struct CaseInputs {
    std::string case_id;
    std::string pathology_text;
    std::optional<std::string> radiology_text;
    std::vector<Study> studies;
    ImageProvider images;
};

struct PipelineConfig {
    CaliperConfig caliper;
    MatchWindow window;
    double tol_cm = 0.05;

    void validate() const {
        caliper.validate();
        window.validate();
        if (!(tol_cm >= 0.0)) throw ValidationError("tol_cm must be >= 0");
    }
};

/// Laterality must agree; location and label only block the match when both sides carry one.
inline bool match_banner_to_nodule(const BannerInfo& banner, const NoduleRecord& nodule) {
    if (!banner.laterality || *banner.laterality != nodule.laterality) return false;
    if (banner.location && nodule.location && *banner.location != *nodule.location) return false;
    if (banner.label && nodule.label && *banner.label != *nodule.label) return false;
    return true;
}

inline bool match_measurements(const MeasurementSet& image_ms, const std::vector<double>& report_dims, double tol_cm) {
    return match_measurements(image_ms.values_cm, report_dims, tol_cm);
}

namespace detail {

/// Per-case memo of decoded frames and OCR reads, so each image is fetched once.
class FrameCache {
public:
    explicit FrameCache(const ImageProvider& load) : load_(load) {}

    const Raster& raster(const ImageRef& ref) {
        auto it = rasters_.find(ref);
        if (it == rasters_.end()) it = rasters_.emplace(ref, load_(ref)).first;
        return it->second;
    }
    const BannerInfo& banner(const ImageRef& ref) {
        auto it = banners_.find(ref);
        if (it == banners_.end()) it = banners_.emplace(ref, read_banner(raster(ref))).first;
        return it->second;
    }
    const MeasurementSet& measurements(const ImageRef& ref) {
        auto it = measurements_.find(ref);
        if (it == measurements_.end()) it = measurements_.emplace(ref, read_image_measurements(raster(ref))).first;
        return it->second;
    }

private:
    const ImageProvider& load_;
    std::map<ImageRef, Raster> rasters_;
    std::map<ImageRef, BannerInfo> banners_;
    std::map<ImageRef, MeasurementSet> measurements_;
};

inline std::string ref_name(const ImageRef& r) { return r.study_id + "/" + r.image_id; }

inline void note_view_composition(FrameCache& cache, const ImageRef& a, const ImageRef& b, Diagnostics& diag) {
    const auto va = cache.banner(a).view, vb = cache.banner(b).view;
    const bool pair = (va == View::transverse && vb == View::longitudinal) || (va == View::longitudinal && vb == View::transverse);
    if (!pair) {
        diag.note("view composition " + std::string(to_string(va)) + "+" + std::string(to_string(vb)) + " for " +
                  ref_name(a) + ", " + ref_name(b));
    }
}

inline std::vector<ImageRef> banner_matches(const std::vector<CandidateImage>& cands, const NoduleRecord& n,
                                            FrameCache& cache) {
    std::vector<ImageRef> out;
    for (const auto& c : cands) {
        if (match_banner_to_nodule(cache.banner(c.ref), n)) out.push_back(c.ref);
    }
    return out;
}

inline std::vector<CandidateImage> candidates(const Study& study, FrameCache& cache, const CaliperConfig& cfg,
                                              Diagnostics& diag) {
    ImageProvider cached = [&cache](const ImageRef& r) { return cache.raster(r); };
    return select_candidate_images(study, cached, cfg, diag);
}

}  // namespace detail

/// Stage 1 over the matched FNA study. Entries left empty fall through to Stage 2;
/// `fallthrough_reason` records why, for nodules that never reach a Stage 2.
struct StageOneResult {
    std::vector<std::optional<NoduleOutcome>> outcomes;
    std::vector<NoYieldReason> fallthrough_reason;
};

inline StageOneResult stage1(const std::vector<NoduleRecord>& nodules, const Study& fna, detail::FrameCache& cache,
                             const PipelineConfig& cfg, Diagnostics& diag) {
    StageOneResult r;
    r.outcomes.resize(nodules.size());
    r.fallthrough_reason.assign(nodules.size(), NoYieldReason::caliper_underflow);
    const auto cands = detail::candidates(fna, cache, cfg.caliper, diag);
    if (cands.size() < 2) {
        diag.note("stage 1: " + std::to_string(cands.size()) + " caliper image(s) in " + fna.study_id);
        return r;
    }
    if (cands.size() == 2 && nodules.size() == 1) {
        r.outcomes[0] = NoduleOutcome::yield(nodules[0], cands[0].ref, cands[1].ref, {1, 3});
        return r;
    }
    for (std::size_t i = 0; i < nodules.size(); ++i) {
        const auto matched = detail::banner_matches(cands, nodules[i], cache);
        if (matched.size() == 2) {
            detail::note_view_composition(cache, matched[0], matched[1], diag);
            r.outcomes[i] = NoduleOutcome::yield(nodules[i], matched[0], matched[1], {1, 4});
        } else {
            r.fallthrough_reason[i] = NoYieldReason::ocr_mismatch;
            diag.note("stage 1: nodule " + std::to_string(i + 1) + " matched " + std::to_string(matched.size()) +
                      " banner(s)");
        }
    }
    return r;
}

inline NoduleOutcome module5(const NoduleRecord& nodule, const std::vector<ImageRef>& matched,
                             const std::optional<std::string>& radiology, detail::FrameCache& cache,
                             const PipelineConfig& cfg, Diagnostics& diag) {
    if (!radiology) {
        diag.note("module 5: no radiology report");
        return NoduleOutcome::no_yield(nodule, NoYieldReason::measurement_ambiguous);
    }
    if (!has_findings_section(*radiology)) {
        diag.note("module 5: radiology report has no Findings section");
        return NoduleOutcome::no_yield(nodule, NoYieldReason::report_parse_failure);
    }
    const auto side = extract_nodule_measurements(*radiology, nodule.laterality, &diag);
    if (side.size() > 1) return NoduleOutcome::no_yield(nodule, NoYieldReason::multiple_side_nodules);
    if (side.empty()) {
        diag.note("module 5: no nodule measurement on the " + std::string(to_string(nodule.laterality)) + " side");
        return NoduleOutcome::no_yield(nodule, NoYieldReason::measurement_ambiguous);
    }
    std::vector<ImageRef> kept;
    for (const auto& ref : matched) {
        if (match_measurements(cache.measurements(ref), side.front().dims_cm, cfg.tol_cm)) kept.push_back(ref);
    }
    if (kept.size() != 2) {
        diag.note("module 5: " + std::to_string(kept.size()) + " image(s) match report measurements");
        return NoduleOutcome::no_yield(nodule, NoYieldReason::measurement_ambiguous);
    }
    detail::note_view_composition(cache, kept[0], kept[1], diag);
    return NoduleOutcome::yield(nodule, kept[0], kept[1], {2, 5});
}

/// Stage 2 over the matched diagnostic study for the nodules listed in `pending`.
inline std::vector<NoduleOutcome> stage2(const std::vector<NoduleRecord>& nodules, const Study& diag_study,
                                         const std::optional<std::string>& radiology, detail::FrameCache& cache,
                                         const PipelineConfig& cfg, Diagnostics& diag) {
    std::vector<NoduleOutcome> out;
    const auto cands = detail::candidates(diag_study, cache, cfg.caliper, diag);
    for (const auto& n : nodules) {
        if (cands.size() < 2) {
            out.push_back(NoduleOutcome::no_yield(n, NoYieldReason::caliper_underflow));
            continue;
        }
        const auto matched = detail::banner_matches(cands, n, cache);
        if (matched.size() == 2) {
            detail::note_view_composition(cache, matched[0], matched[1], diag);
            out.push_back(NoduleOutcome::yield(n, matched[0], matched[1], {2, 4}));
        } else if (matched.size() < 2) {
            out.push_back(NoduleOutcome::no_yield(n, NoYieldReason::ocr_mismatch));
        } else {
            out.push_back(module5(n, matched, radiology, cache, cfg, diag));
        }
    }
    return out;
}

inline CaseResult run_case(const CaseInputs& in, const PipelineConfig& cfg = {}) {
    cfg.validate();
    if (trim(in.pathology_text).empty()) throw ValidationError("case " + in.case_id + ": missing pathology text");
    CaseResult result;
    result.case_id = in.case_id;
    Diagnostics diag;

    auto parsed = parse_pathology(in.pathology_text);
    for (auto& n : parsed.diagnostics.notes) diag.note("pathology: " + n);
    const auto& records = parsed.records;

    const auto path_date = find_report_date(in.pathology_text);
    std::optional<Study> fna, diagnostic;
    if (path_date) {
        fna = match_study(*path_date, in.studies, StudyKind::fna, cfg.window);
        diagnostic = match_study(*path_date, in.studies, StudyKind::diagnostic, cfg.window);
    } else {
        diag.note("pathology report has no date");
    }

    detail::FrameCache cache(in.images);
    std::vector<std::optional<NoduleOutcome>> outcomes(records.size());
    std::vector<NoYieldReason> reasons(records.size(), NoYieldReason::no_study_in_window);
    if (fna) {
        auto s1 = stage1(records, *fna, cache, cfg, diag);
        outcomes = std::move(s1.outcomes);
        reasons = std::move(s1.fallthrough_reason);
    }
    std::vector<NoduleRecord> pending;
    std::vector<std::size_t> pending_idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!outcomes[i]) {
            pending.push_back(records[i]);
            pending_idx.push_back(i);
        }
    }
    if (!pending.empty() && diagnostic) {
        auto s2 = stage2(pending, *diagnostic, in.radiology_text, cache, cfg, diag);
        for (std::size_t k = 0; k < pending.size(); ++k) outcomes[pending_idx[k]] = std::move(s2[k]);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        result.per_nodule.push_back(outcomes[i] ? std::move(*outcomes[i]) : NoduleOutcome::no_yield(records[i], reasons[i]));
    }
    result.diagnostics = std::move(diag.notes);
    return result;
}

// ---------------------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const FinalizationPoint& p) { j = json::array({p.stage, p.module}); }
inline void from_json(const json& j, FinalizationPoint& p) { p = {j.at(0).get<int>(), j.at(1).get<int>()}; }

inline void to_json(json& j, const NoduleOutcome& o) {
    j = json{{"nodule", o.nodule},
             {"status", o.yielded ? "yield" : "no_yield"},
             {"images", o.images ? json::array({o.images->first, o.images->second}) : json(nullptr)},
             {"label", o.label},
             {"finalized_at", optional_to_json(o.finalized_at)},
             {"no_yield_reason", o.no_yield_reason ? json(std::string(to_string(*o.no_yield_reason))) : json(nullptr)}};
}
inline void from_json(const json& j, NoduleOutcome& o) {
    o.nodule = j.at("nodule").get<NoduleRecord>();
    const auto status = j.at("status").get<std::string>();
    if (status != "yield" && status != "no_yield") throw ValidationError("unknown outcome status '" + status + "'");
    o.yielded = status == "yield";
    if (!j.at("images").is_null()) {
        o.images = std::make_pair(j.at("images").at(0).get<ImageRef>(), j.at("images").at(1).get<ImageRef>());
    }
    o.label = j.at("label").get<Diagnosis>();
    o.finalized_at = optional_from_json<FinalizationPoint>(j, "finalized_at");
    if (auto r = optional_from_json<std::string>(j, "no_yield_reason")) o.no_yield_reason = parse_no_yield_reason(*r);
    if (o.yielded != (o.images.has_value() && o.finalized_at.has_value())) {
        throw ValidationError("outcome status disagrees with images/finalized_at");
    }
}

inline void to_json(json& j, const CaseResult& r) {
    j = json{{"case_id", r.case_id}, {"per_nodule", r.per_nodule}};
}
inline void from_json(const json& j, CaseResult& r) {
    r.case_id = j.at("case_id").get<std::string>();
    r.per_nodule = j.at("per_nodule").get<std::vector<NoduleOutcome>>();
}

}  // namespace nodulelink
