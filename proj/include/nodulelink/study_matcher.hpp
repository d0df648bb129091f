#pragma once

// Pairs a pathology report with the imaging study closest to it in time.

#include <cstdlib>
#include <optional>
#include <tuple>
#include <vector>

#include "nodulelink/types.hpp"

namespace nodulelink {

struct MatchWindow {
    int max_gap_days = 183;  // six months

    void validate() const {
        if (max_gap_days <= 0) throw ValidationError("max_gap_days must be > 0");
    }
};

/// Among studies of `kind` within the window, the one with the smallest absolute gap to
/// the pathology date. Equal gaps prefer a study dated on or before the pathology date;
/// remaining ties (same date) resolve by study id so the result ignores input order.
inline std::optional<Study> match_study(const Date& pathology_date, const std::vector<Study>& studies, StudyKind kind,
                                        const MatchWindow& window = {}) {
    window.validate();
    const Study* best = nullptr;
    auto key = [&](const Study& s) {
        const long signed_gap = s.date.days_since(pathology_date);
        return std::make_tuple(std::labs(signed_gap), signed_gap > 0 ? 1 : 0, -signed_gap, s.study_id);
    };
    for (const auto& s : studies) {
        if (s.kind != kind) continue;
        if (std::labs(s.date.days_since(pathology_date)) > window.max_gap_days) continue;
        if (best == nullptr || key(s) < key(*best)) best = &s;
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

}  // namespace nodulelink
