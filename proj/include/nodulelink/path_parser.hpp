#pragma once

// Rule-based extraction of thyroid nodules from cytopathology reports.
//
// A report is read in two passes. The Specimen section yields one entry per specimen
// (laterality, location, label). Diagnosis anchors ("Thyroid, <site>, ... biopsy") are
// then paired with the specimen entries in order, and the text following each anchor is
// classified against the keyword table. Keyword and abbreviation tables come from
// data/pathology_rules.json.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nodulelink/generated/pathology_rules.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

struct NoduleRecord {
    Laterality laterality = Laterality::right;
    std::optional<std::string> location;
    std::optional<std::string> label;
    Diagnosis diagnosis = Diagnosis::benign;
    std::pair<int, int> source_span{0, 0};  // 1-based lines of the specimen entry and diagnosis anchor

    bool operator==(const NoduleRecord&) const = default;
};

struct SpecimenInfo {
    Laterality laterality = Laterality::right;
    std::vector<Laterality> all_lateralities;  // distinct, in order of appearance
    std::optional<std::string> location;
    std::optional<std::string> label;

    bool operator==(const SpecimenInfo&) const = default;
};

struct PathologyParse {
    std::vector<NoduleRecord> records;
    Diagnostics diagnostics;
};

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

/// Case-folds and collapses runs of blanks within each line; line structure is kept.
inline std::string normalize_report(std::string_view text) {
    std::string out;
    bool first_line = true;
    for (const auto& line : split_lines(text)) {
        if (!first_line) out += '\n';
        first_line = false;
        bool pending_space = false;
        std::string cur;
        for (unsigned char c : trim(line)) {
            if (c == ' ' || c == '\t') {
                pending_space = true;
                continue;
            }
            if (pending_space) cur += ' ';
            pending_space = false;
            cur += static_cast<char>(std::tolower(c));
        }
        out += cur;
    }
    return out;
}

/// Word tokens (letters, digits, '#') of a string, lower-cased.
inline std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '#') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct PathologyRules {
    std::vector<std::string> specimen_headers;
    std::regex specimen_item;
    std::string anchor_keyword;
    std::regex diagnosis_anchor;
    std::vector<std::string> procedure_terminators;
    int diagnosis_window_lines = 2;
    std::map<std::string, Laterality> laterality;
    std::map<std::string, std::string> location;
    std::vector<std::pair<Diagnosis, std::vector<std::string>>> diagnosis_rules;

    static PathologyRules from_json(const nlohmann::json& j) {
        try {
            PathologyRules r;
            for (const auto& h : j.at("specimen_headers")) r.specimen_headers.push_back(to_lower(h.get<std::string>()));
            r.specimen_item = std::regex(j.at("specimen_item_pattern").get<std::string>(), std::regex::icase);
            r.anchor_keyword = to_lower(j.at("anchor_keyword").get<std::string>());
            r.diagnosis_anchor = std::regex(j.at("diagnosis_anchor_pattern").get<std::string>(), std::regex::icase);
            for (const auto& t : j.at("procedure_terminators")) {
                r.procedure_terminators.push_back(to_lower(t.get<std::string>()));
            }
            r.diagnosis_window_lines = j.value("diagnosis_window_lines", 2);
            for (const auto& [k, v] : j.at("laterality").items()) r.laterality[to_lower(k)] = parse_laterality(v.get<std::string>());
            for (const auto& [k, v] : j.at("location").items()) r.location[to_lower(k)] = to_lower(v.get<std::string>());
            for (const auto& rule : j.at("diagnosis_rules")) {
                std::vector<std::string> phrases;
                for (const auto& p : rule.at("phrases")) phrases.push_back(to_lower(p.get<std::string>()));
                r.diagnosis_rules.emplace_back(parse_diagnosis(rule.at("class").get<std::string>()), std::move(phrases));
            }
            if (r.anchor_keyword.empty()) throw ValidationError("pathology rules: empty anchor_keyword");
            return r;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("pathology rules: ") + e.what());
        } catch (const std::regex_error& e) {
            throw ValidationError(std::string("pathology rules: bad pattern: ") + e.what());
        }
    }

    static PathologyRules from_text(std::string_view json_text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("pathology rules: ") + e.what());
        }
        return from_json(j);
    }

    static const PathologyRules& defaults() {
        static const PathologyRules rules = from_text(generated::kPathologyRulesJson);
        return rules;
    }

    [[nodiscard]] std::optional<Laterality> laterality_of(const std::string& token) const {
        auto it = laterality.find(token);
        return it == laterality.end() ? std::nullopt : std::optional<Laterality>(it->second);
    }
    [[nodiscard]] std::optional<std::string> location_of(const std::string& token) const {
        auto it = location.find(token);
        return it == location.end() ? std::nullopt : std::optional<std::string>(it->second);
    }
};

/// Returns the first diagnosis class whose keyword occurs; lines are tried in order and
/// within a line the rule groups are tried in table order.
inline std::optional<Diagnosis> classify_diagnosis(const std::vector<std::string>& lines,
                                                   const PathologyRules& rules = PathologyRules::defaults()) {
    for (const auto& raw : lines) {
        const auto line = normalize_report(raw);
        for (const auto& [cls, phrases] : rules.diagnosis_rules) {
            for (const auto& p : phrases) {
                if (line.find(p) != std::string::npos) return cls;
            }
        }
    }
    return std::nullopt;
}

/// Parses the tokens after the thyroid anchor keyword. Returns nullopt when the line has
/// no anchor or no laterality token.
inline std::optional<SpecimenInfo> parse_specimen_line(std::string_view line,
                                                       const PathologyRules& rules = PathologyRules::defaults()) {
    auto tokens = word_tokens(line);
    auto anchor = std::find(tokens.begin(), tokens.end(), rules.anchor_keyword);
    if (anchor == tokens.end()) return std::nullopt;
    SpecimenInfo info;
    std::vector<std::string> rest(anchor + 1, tokens.end());
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const auto& t = rest[i];
        if (auto lat = rules.laterality_of(t)) {
            if (std::find(info.all_lateralities.begin(), info.all_lateralities.end(), *lat) ==
                info.all_lateralities.end()) {
                info.all_lateralities.push_back(*lat);
            }
        } else if (auto loc = rules.location_of(t)) {
            if (!info.location) info.location = *loc;
        } else if (t.size() > 1 && t[0] == '#' && std::all_of(t.begin() + 1, t.end(), ::isdigit)) {
            if (!info.label) info.label = t;
        } else if (i + 1 == rest.size() && std::all_of(t.begin(), t.end(), ::isdigit)) {
            if (!info.label) info.label = "#" + t;
        }
    }
    if (info.all_lateralities.empty()) return std::nullopt;
    info.laterality = info.all_lateralities.front();
    return info;
}

namespace detail {

struct SpecimenEntry {
    int line_no;
    SpecimenInfo info;
};

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

/// Text of an anchor line after its last procedure word ("... aspiration biopsy").
inline std::string diagnosis_tail(const std::string& line, const PathologyRules& rules) {
    const auto lower = to_lower(line);
    std::size_t cut = std::string::npos;
    for (const auto& term : rules.procedure_terminators) {
        auto pos = lower.rfind(term);
        if (pos != std::string::npos) {
            const auto end = pos + term.size();
            cut = cut == std::string::npos ? end : std::max(cut, end);
        }
    }
    if (cut == std::string::npos) {
        std::smatch m;
        if (std::regex_search(lower, m, rules.diagnosis_anchor)) cut = static_cast<std::size_t>(m.position(0) + m.length(0));
        else cut = 0;
    }
    return line.substr(cut);
}

}  // namespace detail

inline PathologyParse parse_pathology(std::string_view report, const PathologyRules& rules = PathologyRules::defaults()) {
    PathologyParse out;
    const auto lines = split_lines(report);
    std::vector<std::string> lowered;
    lowered.reserve(lines.size());
    for (const auto& l : lines) lowered.push_back(to_lower(trim(l)));

    // Specimen section.
    std::vector<detail::SpecimenEntry> entries;
    std::size_t section_end = 0;  // index after the last specimen line
    bool have_section = false;
    for (std::size_t i = 0; i < lines.size() && !have_section; ++i) {
        for (const auto& header : rules.specimen_headers) {
            if (!detail::starts_with(lowered[i], header)) continue;
            have_section = true;
            std::vector<std::pair<std::size_t, std::string>> items;
            auto remainder = trim(trim(lines[i]).substr(header.size()));
            if (!remainder.empty()) items.emplace_back(i, remainder);
            std::size_t j = i + 1;
            while (j < lines.size() && std::regex_search(trim(lines[j]), rules.specimen_item)) {
                items.emplace_back(j, trim(lines[j]));
                ++j;
            }
            section_end = j;
            for (const auto& [idx, text] : items) {
                const auto lower = to_lower(text);
                if (lower.find(rules.anchor_keyword) == std::string::npos) {
                    out.diagnostics.note("line " + std::to_string(idx + 1) + ": non-thyroid specimen skipped");
                    entries.push_back({static_cast<int>(idx + 1), {}});
                    continue;
                }
                if (auto info = parse_specimen_line(text, rules)) {
                    entries.push_back({static_cast<int>(idx + 1), *info});
                } else {
                    out.diagnostics.note("line " + std::to_string(idx + 1) + ": specimen without laterality");
                    entries.push_back({static_cast<int>(idx + 1), {}});
                }
            }
            break;
        }
    }

    // Diagnosis anchors after the specimen section.
    std::vector<std::size_t> anchors;
    for (std::size_t i = section_end; i < lines.size(); ++i) {
        if (std::regex_search(lowered[i], rules.diagnosis_anchor)) anchors.push_back(i);
    }
    if (anchors.empty()) {
        out.diagnostics.note("no thyroid diagnosis anchor found");
        return out;
    }
    if (!have_section) {
        out.diagnostics.note("no specimen section; using diagnosis anchors as specimen entries");
        for (auto a : anchors) {
            entries.push_back({static_cast<int>(a + 1), parse_specimen_line(lines[a], rules).value_or(SpecimenInfo{})});
        }
    }

    // Expand entries to one slot per expected diagnosis section. An entry naming two
    // lateralities splits only when the anchor count accounts for the split.
    std::size_t split_need = 0, plain_need = 0;
    for (const auto& e : entries) {
        split_need += std::max<std::size_t>(1, e.info.all_lateralities.size());
        plain_need += 1;
    }
    const bool split_multi = anchors.size() == split_need && split_need != plain_need;
    if (anchors.size() != split_need && anchors.size() != plain_need) {
        out.diagnostics.note("specimen count " + std::to_string(plain_need) + " does not match diagnosis count " +
                             std::to_string(anchors.size()) + "; pairing in order");
    }

    struct Slot {
        int line_no;
        std::optional<SpecimenInfo> info;
    };
    std::vector<Slot> slots;
    for (const auto& e : entries) {
        const auto& lats = e.info.all_lateralities;
        if (lats.empty()) {
            slots.push_back({e.line_no, std::nullopt});
        } else if (lats.size() == 1) {
            slots.push_back({e.line_no, e.info});
        } else if (split_multi) {
            for (auto lat : lats) {
                SpecimenInfo part;
                part.laterality = lat;
                part.all_lateralities = {lat};
                slots.push_back({e.line_no, part});
            }
        } else {
            out.diagnostics.note("line " + std::to_string(e.line_no) + ": multiple lateralities without matching diagnoses");
            slots.push_back({e.line_no, std::nullopt});
        }
    }

    const std::size_t n = std::min(slots.size(), anchors.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (!slots[k].info) continue;
        const std::size_t a = anchors[k];
        const std::size_t next_anchor = k + 1 < anchors.size() ? anchors[k + 1] : lines.size();
        std::vector<std::string> window{detail::diagnosis_tail(lines[a], rules)};
        for (std::size_t j = a + 1; j < next_anchor && j <= a + static_cast<std::size_t>(rules.diagnosis_window_lines); ++j) {
            window.push_back(lines[j]);
        }
        auto dx = classify_diagnosis(window, rules);
        if (!dx) {
            out.diagnostics.note("line " + std::to_string(a + 1) + ": unclassified diagnosis dropped");
            continue;
        }
        const auto& info = *slots[k].info;
        out.records.push_back({info.laterality, info.location, info.label, *dx, {slots[k].line_no, static_cast<int>(a + 1)}});
    }
    return out;
}

/// Report date from a "Report Date:" line, falling back to "Received:".
inline std::optional<Date> find_report_date(std::string_view report) {
    static const std::regex primary(R"(report date\s*:\s*(\d{4}-\d{2}-\d{2}))", std::regex::icase);
    static const std::regex fallback(R"(received\s*:\s*(\d{4}-\d{2}-\d{2}))", std::regex::icase);
    const std::string text(report);
    std::smatch m;
    if (std::regex_search(text, m, primary) || std::regex_search(text, m, fallback)) return Date::parse(m[1].str());
    return std::nullopt;
}

}  // namespace nodulelink
