#pragma once

// Shared vocabulary: error types, enums, calendar dates and image references.

#include <array>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nodulelink {

/// Input violates a documented precondition (bad config, malformed file content).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure: missing input, unwritable output.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Laterality { left, right, isthmus };
enum class Diagnosis { benign, suspicious, malignant };
enum class View { transverse, longitudinal, unknown };
enum class StudyKind { fna, diagnostic };

namespace detail {

template <typename E, std::size_t N>
struct EnumNames {
    std::array<std::pair<E, std::string_view>, N> entries;

    [[nodiscard]] constexpr std::string_view name(E e) const {
        for (const auto& [value, text] : entries) {
            if (value == e) return text;
        }
        return "?";
    }
    [[nodiscard]] constexpr std::optional<E> parse(std::string_view s) const {
        for (const auto& [value, text] : entries) {
            if (text == s) return value;
        }
        return std::nullopt;
    }
};

inline constexpr EnumNames<Laterality, 3> kLateralityNames{
    {{{Laterality::left, "left"}, {Laterality::right, "right"}, {Laterality::isthmus, "isthmus"}}}};
inline constexpr EnumNames<Diagnosis, 3> kDiagnosisNames{
    {{{Diagnosis::benign, "benign"}, {Diagnosis::suspicious, "suspicious"}, {Diagnosis::malignant, "malignant"}}}};
inline constexpr EnumNames<View, 3> kViewNames{
    {{{View::transverse, "transverse"}, {View::longitudinal, "longitudinal"}, {View::unknown, "unknown"}}}};
inline constexpr EnumNames<StudyKind, 2> kStudyKindNames{
    {{{StudyKind::fna, "FNA"}, {StudyKind::diagnostic, "diagnostic"}}}};

template <typename Table>
auto parse_or_throw(const Table& table, std::string_view s, const char* what) {
    if (auto v = table.parse(s)) return *v;
    throw ValidationError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace detail

inline std::string_view to_string(Laterality v) { return detail::kLateralityNames.name(v); }
inline std::string_view to_string(Diagnosis v) { return detail::kDiagnosisNames.name(v); }
inline std::string_view to_string(View v) { return detail::kViewNames.name(v); }
inline std::string_view to_string(StudyKind v) { return detail::kStudyKindNames.name(v); }

inline Laterality parse_laterality(std::string_view s) {
    return detail::parse_or_throw(detail::kLateralityNames, s, "laterality");
}
inline Diagnosis parse_diagnosis(std::string_view s) {
    return detail::parse_or_throw(detail::kDiagnosisNames, s, "diagnosis");
}
inline View parse_view(std::string_view s) { return detail::parse_or_throw(detail::kViewNames, s, "view"); }
inline StudyKind parse_study_kind(std::string_view s) {
    return detail::parse_or_throw(detail::kStudyKindNames, s, "study kind");
}

/// Calendar date at day granularity, serialized as ISO-8601 (YYYY-MM-DD).
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

    static std::optional<Date> parse(std::string_view text) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
        }
        y = std::stoi(std::string(text.substr(0, 4)));
        m = static_cast<unsigned>(std::stoi(std::string(text.substr(5, 2))));
        d = static_cast<unsigned>(std::stoi(std::string(text.substr(8, 2))));
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date(std::chrono::sys_days{ymd});
    }

    static Date parse_or_throw(std::string_view text) {
        if (auto d = parse(text)) return *d;
        throw ValidationError("invalid ISO date '" + std::string(text) + "'");
    }

    [[nodiscard]] std::string iso() const {
        std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    [[nodiscard]] Date plus_days(long n) const { return Date(days_ + std::chrono::days{n}); }

    /// Signed difference this - other in days.
    [[nodiscard]] long days_since(const Date& other) const { return (days_ - other.days_).count(); }

    [[nodiscard]] std::chrono::sys_days sys_days() const { return days_; }

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

/// Identifies one image within a case: the study it belongs to and its id.
struct ImageRef {
    std::string study_id;
    std::string image_id;

    auto operator<=>(const ImageRef&) const = default;
};

/// An imaging exam. Images are referenced by id; pixels are fetched through an ImageProvider.
struct Study {
    std::string study_id;
    StudyKind kind = StudyKind::diagnostic;
    Date date;
    std::string site;
    std::vector<std::string> image_ids;
};

/// Free-form notes collected while processing; never affects results.
struct Diagnostics {
    std::vector<std::string> notes;

    void note(std::string text) { notes.push_back(std::move(text)); }
};

}  // namespace nodulelink
