#pragma once

// Fixed-pitch 8x16 bitmap font shared by the image renderer and the OCR.
//
// The checked-in atlas (data/font8x16.glf) is the source of truth; the build embeds it
// so default_font() needs no filesystem access. Atlas layout:
//   "NLGF" | version=1 | cell_w | cell_h | glyph count N | N x (char code, cell_h row bytes)
// Row bytes are top to bottom, bit 7 = leftmost pixel.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nodulelink/generated/font_atlas.hpp"
#include "nodulelink/raster.hpp"

namespace nodulelink {

inline constexpr int kGlyphWidth = 8;
inline constexpr int kGlyphHeight = 16;

using GlyphRows = std::array<std::uint8_t, kGlyphHeight>;

struct Glyph {
    char ch = ' ';
    GlyphRows rows{};

    [[nodiscard]] bool ink(int x, int y) const { return (rows[static_cast<std::size_t>(y)] & (0x80u >> x)) != 0; }
    [[nodiscard]] int ink_count() const {
        int n = 0;
        for (auto r : rows) n += std::popcount(static_cast<unsigned>(r));
        return n;
    }
};

class GlyphFont {
public:
    GlyphFont() = default;
    explicit GlyphFont(std::vector<Glyph> glyphs) : glyphs_(std::move(glyphs)) {
        lookup_.fill(-1);
        for (std::size_t i = 0; i < glyphs_.size(); ++i) {
            auto code = static_cast<unsigned char>(glyphs_[i].ch);
            if (lookup_[code] != -1) throw ValidationError("duplicate glyph in font");
            lookup_[code] = static_cast<int>(i);
        }
    }

    static GlyphFont from_atlas(std::span<const std::uint8_t> bytes) {
        if (bytes.size() < 8 || bytes[0] != 'N' || bytes[1] != 'L' || bytes[2] != 'G' || bytes[3] != 'F') {
            throw ValidationError("font atlas: bad magic");
        }
        if (bytes[4] != 1) throw ValidationError("font atlas: unsupported version");
        if (bytes[5] != kGlyphWidth || bytes[6] != kGlyphHeight) throw ValidationError("font atlas: cell size must be 8x16");
        const std::size_t count = bytes[7];
        const std::size_t record = 1 + kGlyphHeight;
        if (bytes.size() != 8 + count * record) throw ValidationError("font atlas: size mismatch");
        std::vector<Glyph> glyphs;
        glyphs.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const auto* rec = bytes.data() + 8 + i * record;
            Glyph g;
            g.ch = static_cast<char>(rec[0]);
            std::copy(rec + 1, rec + record, g.rows.begin());
            glyphs.push_back(g);
        }
        return GlyphFont(std::move(glyphs));
    }

    static GlyphFont load(const std::filesystem::path& path) {
        auto data = read_file(path);
        return from_atlas({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
    }

    [[nodiscard]] std::vector<std::uint8_t> to_atlas() const {
        std::vector<std::uint8_t> out{'N', 'L', 'G', 'F', 1, kGlyphWidth, kGlyphHeight,
                                      static_cast<std::uint8_t>(glyphs_.size())};
        for (const auto& g : glyphs_) {
            out.push_back(static_cast<std::uint8_t>(g.ch));
            out.insert(out.end(), g.rows.begin(), g.rows.end());
        }
        return out;
    }

    [[nodiscard]] const std::vector<Glyph>& glyphs() const { return glyphs_; }

    [[nodiscard]] const Glyph* find(char ch) const {
        int i = lookup_[static_cast<unsigned char>(ch)];
        return i < 0 ? nullptr : &glyphs_[static_cast<std::size_t>(i)];
    }

    [[nodiscard]] bool supports(std::string_view text) const {
        return std::all_of(text.begin(), text.end(), [&](char c) { return find(c) != nullptr; });
    }

private:
    std::vector<Glyph> glyphs_;
    std::array<int, 256> lookup_{};
};

inline const GlyphFont& default_font() {
    static const GlyphFont font = GlyphFont::from_atlas(generated::kFontAtlas);
    return font;
}

/// Paints `text` with its first cell's top-left corner at (x, y). Ink pixels become `ink`,
/// the rest of each cell becomes `paper`. Cells falling outside the raster are clipped.
inline void draw_text(Raster& img, const GlyphFont& font, int x, int y, std::string_view text,
                      std::uint8_t ink = 255, std::uint8_t paper = 0) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const Glyph* g = font.find(text[i]);
        if (g == nullptr) throw ValidationError(std::string("font has no glyph for '") + text[i] + "'");
        const int cx = x + static_cast<int>(i) * kGlyphWidth;
        for (int gy = 0; gy < kGlyphHeight; ++gy) {
            for (int gx = 0; gx < kGlyphWidth; ++gx) {
                if (img.contains(cx + gx, y + gy)) img.at(cx + gx, y + gy) = g->ink(gx, gy) ? ink : paper;
            }
        }
    }
}

}  // namespace nodulelink
