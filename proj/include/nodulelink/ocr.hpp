#pragma once

// Reading the annotation text burned into the bottom of ultrasound frames.
//
// ocr_text() is a fixed-pitch glyph matcher over the repository font: the band is
// binarized, text lines are found from the row ink profile, and each 8x16 cell is
// assigned the glyph with the highest pixel agreement (1 - hamming / 128). The cell grid
// offset is searched per line. read_banner() and read_image_measurements() run the
// matcher over five bottom-band crops and keep the most informative parse.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "nodulelink/font.hpp"
#include "nodulelink/path_parser.hpp"
#include "nodulelink/raster.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

/// Bottom-band heights, as fractions of image height, tried in this order.
inline constexpr std::array<double, 5> kBannerCropRatios = {0.15, 0.18, 0.20, 0.12, 0.25};
inline constexpr double kGlyphAgreementFloor = 0.8;
inline constexpr std::uint8_t kInkThreshold = 128;

struct BannerInfo {
    View view = View::unknown;
    std::optional<Laterality> laterality;
    std::optional<std::string> location;
    std::optional<std::string> label;
    std::string raw_text;
    int config_index = 0;

    [[nodiscard]] int populated_fields() const {
        return (view != View::unknown) + laterality.has_value() + location.has_value() + label.has_value();
    }
};

struct MeasurementSet {
    std::vector<double> values_cm;

    bool operator==(const MeasurementSet&) const = default;
};

inline int banner_crop_height(int image_height, int config_index) {
    if (config_index < 0 || config_index >= static_cast<int>(kBannerCropRatios.size())) {
        throw ValidationError("banner crop config index out of range: " + std::to_string(config_index));
    }
    return static_cast<int>(std::lround(kBannerCropRatios[static_cast<std::size_t>(config_index)] * image_height));
}

inline Raster crop_banner(const Raster& image, int config_index) {
    const int h = banner_crop_height(image.height(), config_index);
    if (h <= 0 || h > image.height()) throw ValidationError("banner crop band is empty or taller than the image");
    return image.crop(0, image.height() - h, image.width(), h);
}

namespace detail {

/// 8x16 cell packed as two 64-bit words (rows 0-7, rows 8-15), bit 7 of each row byte leftmost.
struct PackedCell {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
};

inline PackedCell pack_rows(const GlyphRows& rows) {
    PackedCell c;
    for (int r = 0; r < 8; ++r) c.hi = (c.hi << 8) | rows[static_cast<std::size_t>(r)];
    for (int r = 8; r < 16; ++r) c.lo = (c.lo << 8) | rows[static_cast<std::size_t>(r)];
    return c;
}

class BinaryBand {
public:
    explicit BinaryBand(const Raster& band) : w_(band.width()), h_(band.height()), ink_(band.pixels().size()) {
        auto px = band.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) ink_[i] = px[i] >= kInkThreshold ? 1 : 0;
    }
    [[nodiscard]] int width() const { return w_; }
    [[nodiscard]] int height() const { return h_; }
    [[nodiscard]] bool ink(int x, int y) const {
        return x >= 0 && y >= 0 && x < w_ && y < h_ && ink_[static_cast<std::size_t>(y) * w_ + x] != 0;
    }
    [[nodiscard]] bool row_has_ink(int y) const {
        if (y < 0 || y >= h_) return false;
        const auto* p = ink_.data() + static_cast<std::size_t>(y) * w_;
        return std::find(p, p + w_, 1) != p + w_;
    }
    [[nodiscard]] PackedCell cell(int x0, int y0) const {
        GlyphRows rows{};
        for (int r = 0; r < kGlyphHeight; ++r) {
            std::uint8_t bits = 0;
            for (int c = 0; c < kGlyphWidth; ++c) {
                if (ink(x0 + c, y0 + r)) bits |= static_cast<std::uint8_t>(0x80u >> c);
            }
            rows[static_cast<std::size_t>(r)] = bits;
        }
        return pack_rows(rows);
    }

private:
    int w_;
    int h_;
    std::vector<std::uint8_t> ink_;
};

struct CellMatch {
    char ch = '?';
    double agreement = 0.0;
};

class GlyphMatcher {
public:
    explicit GlyphMatcher(const GlyphFont& font) {
        for (const auto& g : font.glyphs()) {
            chars_.push_back(g.ch);
            packed_.push_back(pack_rows(g.rows));
        }
    }
    [[nodiscard]] CellMatch best(const PackedCell& cell) const {
        CellMatch m;
        int best_d = kGlyphWidth * kGlyphHeight + 1;
        for (std::size_t i = 0; i < packed_.size(); ++i) {
            const int d = std::popcount(cell.hi ^ packed_[i].hi) + std::popcount(cell.lo ^ packed_[i].lo);
            if (d < best_d) {
                best_d = d;
                m.ch = chars_[i];
            }
        }
        m.agreement = 1.0 - static_cast<double>(best_d) / (kGlyphWidth * kGlyphHeight);
        if (m.agreement < kGlyphAgreementFloor) m.ch = '?';
        return m;
    }

private:
    std::vector<char> chars_;
    std::vector<PackedCell> packed_;
};

/// Decodes one text line whose ink spans rows [top, bottom].
inline std::string decode_line(const BinaryBand& band, const GlyphMatcher& matcher, int top, int bottom) {
    int first_col = band.width(), last_col = -1;
    for (int y = top; y <= bottom; ++y) {
        for (int x = 0; x < band.width(); ++x) {
            if (band.ink(x, y)) {
                first_col = std::min(first_col, x);
                last_col = std::max(last_col, x);
            }
        }
    }
    if (last_col < 0) return {};

    // Cap-height glyphs put ink on cell rows 3..12 and most glyphs start at column 1.
    std::vector<int> tops{top - 3, bottom - 12, top - 2, top - 4};
    if (bottom - top + 1 < kGlyphHeight) {
        for (int t = bottom - (kGlyphHeight - 1); t <= top; ++t) tops.push_back(t);
    }
    std::vector<int> lefts{first_col - 1, first_col, first_col - 2, first_col - 3};

    double best_score = -1.0;
    std::string best_text;
    std::vector<int> seen;
    for (int cell_top : tops) {
        if (std::find(seen.begin(), seen.end(), cell_top) != seen.end()) continue;
        seen.push_back(cell_top);
        for (int x0 : lefts) {
            double score = 0.0;
            std::string text;
            for (int x = x0; x <= last_col; x += kGlyphWidth) {
                const auto m = matcher.best(band.cell(x, cell_top));
                score += m.agreement;
                text += m.ch;
            }
            score /= static_cast<double>(text.size());  // grids differ in cell count
            if (score > best_score) {
                best_score = score;
                best_text = std::move(text);
            }
        }
    }
    while (!best_text.empty() && best_text.back() == ' ') best_text.pop_back();
    return best_text;
}

}  // namespace detail

/// One output line per text row found in the band, joined with '\n'. Cells whose best
/// glyph agreement is below the floor decode as '?'.
inline std::string ocr_text(const Raster& band, const GlyphFont& font = default_font()) {
    const detail::BinaryBand bin(band);
    const detail::GlyphMatcher matcher(font);
    std::vector<std::string> lines;
    int y = 0;
    while (y < bin.height()) {
        if (!bin.row_has_ink(y)) {
            ++y;
            continue;
        }
        const int top = y;
        int bottom = y;
        // Extend through short vertical gaps (':' has one) while the span fits in a cell.
        int probe = y + 1;
        while (probe < bin.height() && probe - top < kGlyphHeight) {
            if (bin.row_has_ink(probe)) bottom = probe;
            else if (probe - bottom > 3) break;
            ++probe;
        }
        auto line = detail::decode_line(bin, matcher, top, bottom);
        if (!line.empty()) lines.push_back(std::move(line));
        y = bottom + 1;
    }
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

/// Token-table parse of banner text. Unknown tokens are ignored; the first token of
/// each kind wins.
inline BannerInfo parse_banner(std::string_view text, const PathologyRules& rules = PathologyRules::defaults()) {
    BannerInfo info;
    info.raw_text = std::string(text);
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c) || c == ',' || c == ';') {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(c));
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    static const std::array<std::pair<std::string_view, View>, 9> kViews{{{"trans", View::transverse},
                                                                          {"trv", View::transverse},
                                                                          {"tr", View::transverse},
                                                                          {"transverse", View::transverse},
                                                                          {"sag", View::longitudinal},
                                                                          {"sagittal", View::longitudinal},
                                                                          {"long", View::longitudinal},
                                                                          {"lon", View::longitudinal},
                                                                          {"longitudinal", View::longitudinal}}};
    for (const auto& t : tokens) {
        if (t.find('?') != std::string::npos) continue;
        if (info.view == View::unknown) {
            auto v = std::find_if(kViews.begin(), kViews.end(), [&](const auto& p) { return p.first == t; });
            if (v != kViews.end()) {
                info.view = v->second;
                continue;
            }
        }
        if (auto lat = rules.laterality_of(t)) {
            if (!info.laterality) info.laterality = *lat;
            continue;
        }
        if (auto loc = rules.location_of(t)) {
            if (!info.location) info.location = *loc;
            continue;
        }
        if (t.size() > 1 && t[0] == '#' && std::all_of(t.begin() + 1, t.end(), ::isdigit)) {
            if (!info.label) info.label = t;
        }
    }
    return info;
}

/// Runs OCR + parse for each crop configuration and keeps the parse with the most
/// populated fields (ties go to the lowest configuration index).
inline BannerInfo read_banner(const Raster& image, const GlyphFont& font = default_font()) {
    std::optional<BannerInfo> best;
    for (int c = 0; c < static_cast<int>(kBannerCropRatios.size()); ++c) {
        Raster band;
        try {
            band = crop_banner(image, c);
        } catch (const ValidationError&) {
            continue;
        }
        auto info = parse_banner(ocr_text(band, font));
        info.config_index = c;
        if (!best || info.populated_fields() > best->populated_fields()) best = std::move(info);
    }
    return best.value_or(BannerInfo{});
}

inline double round_cm(double v) { return std::round(v * 100.0) / 100.0; }

/// Distances followed by a length unit ("1.63cm", "D1 1.6 cm", "16 mm"), in cm rounded
/// to 0.01. Numbers without a cm/mm unit (dates, MHz, depth labels) are ignored.
inline MeasurementSet parse_image_measurements(std::string_view text) {
    static const std::regex kDistance(R"((^|[^0-9A-Za-z.])(\d+(?:\.\d+)?)\s*(cm|mm)(?![A-Za-z]))", std::regex::icase);
    MeasurementSet out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kDistance); it != std::sregex_iterator(); ++it) {
        double v = std::stod((*it)[2].str());
        if (to_lower((*it)[3].str()) == "mm") v /= 10.0;
        v = round_cm(v);
        if (v > 0.0 && v < 20.0) out.values_cm.push_back(v);
    }
    return out;
}

/// Measurement text from the image, choosing the crop configuration that yields the most values.
inline MeasurementSet read_image_measurements(const Raster& image, const GlyphFont& font = default_font()) {
    MeasurementSet best;
    for (int c = 0; c < static_cast<int>(kBannerCropRatios.size()); ++c) {
        Raster band;
        try {
            band = crop_banner(image, c);
        } catch (const ValidationError&) {
            continue;
        }
        auto ms = parse_image_measurements(ocr_text(band, font));
        if (ms.values_cm.size() > best.values_cm.size()) best = std::move(ms);
    }
    return best;
}

}  // namespace nodulelink
