#pragma once

// JSON encodings of the shared value types. Objects use nlohmann's default std::map
// storage, so keys always serialize in sorted order and output is byte-stable.

#include <optional>
#include <string>

#include "json.hpp"
#include "nodulelink/caliper.hpp"
#include "nodulelink/ocr.hpp"
#include "nodulelink/path_parser.hpp"
#include "nodulelink/rad_parser.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

using nlohmann::json;

inline void to_json(json& j, const Date& d) { j = d.iso(); }
inline void from_json(const json& j, Date& d) { d = Date::parse_or_throw(j.get<std::string>()); }

inline void to_json(json& j, Laterality v) { j = std::string(to_string(v)); }
inline void from_json(const json& j, Laterality& v) { v = parse_laterality(j.get<std::string>()); }
inline void to_json(json& j, Diagnosis v) { j = std::string(to_string(v)); }
inline void from_json(const json& j, Diagnosis& v) { v = parse_diagnosis(j.get<std::string>()); }
inline void to_json(json& j, View v) { j = std::string(to_string(v)); }
inline void from_json(const json& j, View& v) { v = parse_view(j.get<std::string>()); }
inline void to_json(json& j, StudyKind v) { j = std::string(to_string(v)); }
inline void from_json(const json& j, StudyKind& v) { v = parse_study_kind(j.get<std::string>()); }

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline void to_json(json& j, const ImageRef& r) { j = json{{"study_id", r.study_id}, {"image_id", r.image_id}}; }
inline void from_json(const json& j, ImageRef& r) {
    r.study_id = j.at("study_id").get<std::string>();
    r.image_id = j.at("image_id").get<std::string>();
}

inline void to_json(json& j, const NoduleRecord& n) {
    j = json{{"laterality", n.laterality},
             {"location", optional_to_json(n.location)},
             {"label", optional_to_json(n.label)},
             {"diagnosis", n.diagnosis},
             {"source_span", json::array({n.source_span.first, n.source_span.second})}};
}
inline void from_json(const json& j, NoduleRecord& n) {
    n.laterality = j.at("laterality").get<Laterality>();
    n.location = optional_from_json<std::string>(j, "location");
    n.label = optional_from_json<std::string>(j, "label");
    n.diagnosis = j.at("diagnosis").get<Diagnosis>();
    if (j.contains("source_span")) {
        n.source_span = {j.at("source_span").at(0).get<int>(), j.at("source_span").at(1).get<int>()};
    }
}

inline void to_json(json& j, const BannerInfo& b) {
    j = json{{"view", b.view},
             {"laterality", optional_to_json(b.laterality)},
             {"location", optional_to_json(b.location)},
             {"label", optional_to_json(b.label)},
             {"raw_text", b.raw_text},
             {"config_index", b.config_index}};
}

inline void to_json(json& j, const ReportNodule& n) {
    j = json{{"laterality", n.laterality},
             {"ordinal", optional_to_json(n.ordinal)},
             {"dims_cm", n.dims_cm},
             {"source_line", n.source_line}};
}

inline void to_json(json& j, const CaliperHit& h) {
    j = json{{"bbox", {{"x", h.bbox.x}, {"y", h.bbox.y}, {"w", h.bbox.w}, {"h", h.bbox.h}}}, {"score", h.score}};
}

inline void to_json(json& j, const Study& s) {
    j = json{{"study_id", s.study_id},
             {"kind", s.kind},
             {"date", s.date},
             {"site", s.site},
             {"images", s.image_ids}};
}
inline void from_json(const json& j, Study& s) {
    s.study_id = j.at("study_id").get<std::string>();
    s.kind = j.at("kind").get<StudyKind>();
    s.date = j.at("date").get<Date>();
    s.site = j.value("site", std::string{});
    s.image_ids = j.at("images").get<std::vector<std::string>>();
}

/// Parses JSON text, mapping syntax errors to ValidationError.
inline json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

}  // namespace nodulelink
