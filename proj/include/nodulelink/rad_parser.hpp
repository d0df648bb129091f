#pragma once

// Nodule measurements from radiology report Findings sections.
//
// The Findings section runs from a "Findings:" header to the next top-level header
// ("Impression:"). Inside it, "RIGHT LOBE:" / "LEFT LOBE:" / "ISTHMUS:" headers open side
// subsections; lines outside any subsection fall back to the first side word they carry.
// A measurement is kept only when the noun right before "measures" is "nodule".

#include <cmath>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "nodulelink/path_parser.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

struct ReportNodule {
    Laterality laterality = Laterality::right;
    std::optional<int> ordinal;
    std::vector<double> dims_cm;
    int source_line = 0;  // 1-based

    bool operator==(const ReportNodule&) const = default;
};

struct RadiologyParse {
    std::vector<ReportNodule> nodules;
    Diagnostics diagnostics;
};

namespace detail {

inline std::optional<Laterality> side_header(const std::string& lower_trimmed) {
    static const std::regex kHeader(R"(^(right lobe|left lobe|isthmus)\s*:)");
    std::smatch m;
    if (!std::regex_search(lower_trimmed, m, kHeader)) return std::nullopt;
    const auto h = m[1].str();
    if (h == "right lobe") return Laterality::right;
    if (h == "left lobe") return Laterality::left;
    return Laterality::isthmus;
}

inline std::optional<Laterality> first_side_word(const std::string& lower) {
    for (const auto& t : word_tokens(lower)) {
        if (t == "right") return Laterality::right;
        if (t == "left") return Laterality::left;
        if (t == "isthmus" || t == "isthmic") return Laterality::isthmus;
    }
    return std::nullopt;
}

/// Strips markdown emphasis so "**1.6 x 0.7 x 1.1 cm.**" reads as plain text.
inline std::string strip_emphasis(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != '*' && c != '_') out += c;
    }
    return out;
}

}  // namespace detail

/// Every nodule measurement in the Findings section, all sides, in document order.
inline RadiologyParse parse_radiology(std::string_view report) {
    RadiologyParse out;
    const auto lines = split_lines(report);
    static const std::regex kFindings(R"(^findings\s*:)");
    static const std::regex kTopHeader(R"(^(impression|conclusion|recommendation|recommendations)\s*:)");
    static const std::regex kMeasure(
        R"(([a-z]+)\s+measures\s+(?:up to\s+|approximately\s+|about\s+)?(\d+(?:\.\d+)?)(?:\s*x\s*(\d+(?:\.\d+)?))?(?:\s*x\s*(\d+(?:\.\d+)?))?\s*cm)");
    static const std::regex kOrdinal(R"(nodule\s*#\s*(\d+))");

    std::size_t start = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (std::regex_search(to_lower(trim(lines[i])), kFindings)) {
            start = i + 1;
            break;
        }
    }
    if (start == lines.size()) {
        out.diagnostics.note("no Findings section");
        return out;
    }

    std::optional<Laterality> section;
    for (std::size_t i = start; i < lines.size(); ++i) {
        const auto lower = to_lower(trim(detail::strip_emphasis(lines[i])));
        if (std::regex_search(lower, kTopHeader)) break;
        if (auto h = detail::side_header(lower)) {
            section = h;
            continue;
        }
        for (auto it = std::sregex_iterator(lower.begin(), lower.end(), kMeasure); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            if (m[1].str() != "nodule") continue;
            auto side = section ? section : detail::first_side_word(lower);
            if (!side) {
                out.diagnostics.note("line " + std::to_string(i + 1) + ": nodule measurement without side");
                continue;
            }
            ReportNodule n;
            n.laterality = *side;
            n.source_line = static_cast<int>(i + 1);
            for (int g = 2; g <= 4; ++g) {
                if (m[g].matched) n.dims_cm.push_back(std::stod(m[g].str()));
            }
            std::smatch om;
            if (std::regex_search(lower, om, kOrdinal)) n.ordinal = std::stoi(om[1].str());
            bool in_range = true;
            for (double d : n.dims_cm) in_range = in_range && d > 0.0 && d < 20.0;
            if (!in_range) {
                out.diagnostics.note("line " + std::to_string(i + 1) + ": measurement out of range");
                continue;
            }
            out.nodules.push_back(std::move(n));
        }
    }
    return out;
}

inline std::vector<ReportNodule> extract_nodule_measurements(std::string_view report, Laterality side,
                                                             Diagnostics* diag = nullptr) {
    auto parsed = parse_radiology(report);
    if (diag) {
        for (auto& n : parsed.diagnostics.notes) diag->note(std::move(n));
    }
    std::vector<ReportNodule> out;
    for (auto& n : parsed.nodules) {
        if (n.laterality == side) out.push_back(std::move(n));
    }
    return out;
}

inline int count_nodules_on_side(std::string_view report, Laterality side) {
    return static_cast<int>(extract_nodule_measurements(report, side).size());
}

/// True when every image value pairs with a distinct report dimension within tol_cm.
/// An empty image set is no evidence and never matches.
inline bool match_measurements(const std::vector<double>& image_values, const std::vector<double>& report_dims,
                               double tol_cm) {
    if (tol_cm < 0.0) throw ValidationError("tol_cm must be >= 0");
    if (image_values.empty() || image_values.size() > report_dims.size()) return false;
    // Bipartite matching by exhaustive assignment; both sides hold at most a handful of values.
    std::vector<bool> used(report_dims.size(), false);
    auto assign = [&](auto&& self, std::size_t i) -> bool {
        if (i == image_values.size()) return true;
        for (std::size_t j = 0; j < report_dims.size(); ++j) {
            if (used[j] || std::abs(image_values[i] - report_dims[j]) > tol_cm + 1e-9) continue;
            used[j] = true;
            if (self(self, i + 1)) return true;
            used[j] = false;
        }
        return false;
    };
    return assign(assign, 0);
}

inline bool has_findings_section(std::string_view report) {
    static const std::regex kFindings(R"(^findings\s*:)");
    for (const auto& l : split_lines(report)) {
        if (std::regex_search(to_lower(trim(l)), kFindings)) return true;
    }
    return false;
}

}  // namespace nodulelink
