#pragma once

// Seeded synthetic cases: pathology and radiology report text, rendered FNA and
// diagnostic study frames, and a manifest holding the ground truth for every nodule.
//
// Each case draws from its own stream, Rng::derive(seed, case_id), so case content does
// not depend on how many cases are generated or in which order they are written.
//
// Frame layout (800x600 default): ultrasound texture above the banner band (bottom 15%),
// black band below. The band holds a measurement row ("D1 1.60CM D2 0.70CM") and the
// banner row ("TRANS RT MID #1"). Calipers are 15x15 stamps of caliper_template() kept
// above the tallest OCR crop, 60 px per cm apart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nodulelink/caliper.hpp"
#include "nodulelink/font.hpp"
#include "nodulelink/json_io.hpp"
#include "nodulelink/parallel.hpp"
#include "nodulelink/rad_parser.hpp"
#include "nodulelink/raster.hpp"
#include "nodulelink/rng.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

inline constexpr int kPixelsPerCm = 60;
inline constexpr double kBandRatio = 0.15;

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

/// A caliper stamp with part of its cross erased; `fidelity` is the target correlation score.
struct DistractorSpec {
    int x = 0;
    int y = 0;
    double fidelity = 0.6;
    bool operator==(const DistractorSpec&) const = default;
};

struct ImageSpec {
    std::string image_id;
    int width = 800;
    int height = 600;
    std::vector<Point> calipers;  // centers, including right-margin marks
    std::string banner_text;      // empty when the banner dropped out
    std::optional<std::string> measurement_text;
    std::vector<DistractorSpec> distractors;
    std::uint64_t texture_seed = 0;
    bool operator==(const ImageSpec&) const = default;
};

struct StudySpec {
    std::string study_id;
    StudyKind kind = StudyKind::diagnostic;
    Date date;
    std::vector<ImageSpec> images;
    bool operator==(const StudySpec&) const = default;
};

struct KeyImages {
    std::string study_id;
    std::string transverse;
    std::string longitudinal;
    bool operator==(const KeyImages&) const = default;
};

struct NoduleTruth {
    std::string nodule_id;
    Laterality laterality = Laterality::right;
    std::optional<std::string> location;
    std::optional<std::string> label;
    Diagnosis diagnosis = Diagnosis::benign;
    std::array<double, 3> dims_cm{1.0, 1.0, 1.0};
    KeyImages key_images;
    bool operator==(const NoduleTruth&) const = default;
};

/// Nodule seen on imaging and described in the radiology report but not biopsied.
struct IncidentalNodule {
    Laterality laterality = Laterality::right;
    std::string label;
    std::array<double, 3> dims_cm{1.0, 1.0, 1.0};
    bool operator==(const IncidentalNodule&) const = default;
};

struct LobeSpec {
    Laterality laterality = Laterality::right;
    std::vector<double> dims_cm;  // 3 values for a lobe, 1 for the isthmus
    bool operator==(const LobeSpec&) const = default;
};

struct NoiseProfile {
    double banner_dropout_prob = 0.0;
    double distractor_caliper_prob = 0.0;
    bool site_style_variation = false;
    int date_jitter_days = 0;

    void validate() const {
        if (!(banner_dropout_prob >= 0.0 && banner_dropout_prob <= 1.0)) {
            throw ValidationError("banner_dropout_prob must be in [0, 1]");
        }
        if (!(distractor_caliper_prob >= 0.0 && distractor_caliper_prob <= 1.0)) {
            throw ValidationError("distractor_caliper_prob must be in [0, 1]");
        }
        if (date_jitter_days < 0) throw ValidationError("date_jitter_days must be >= 0");
    }
    bool operator==(const NoiseProfile&) const = default;
};

struct CaseSpec {
    std::string case_id;
    std::string site;
    Date pathology_date;
    std::vector<NoduleTruth> nodules;
    std::vector<IncidentalNodule> incidental_nodules;
    std::vector<LobeSpec> lobes;
    std::vector<StudySpec> studies;
    NoiseProfile noise;
    std::string scenario;
    bool operator==(const CaseSpec&) const = default;
};

struct GeneratorConfig {
    int n_cases = 200;
    int width = 800;
    int height = 600;
    std::map<std::string, double> site_mix{{"Site1", 0.68}, {"Site2", 0.19}, {"Site3", 0.13}};
    NoiseProfile noise;
    int max_gap_days = 183;
    double multi_nodule_prob = 0.15;
    double out_of_window_prob = 0.02;

    void validate() const {
        if (n_cases < 1) throw ValidationError("n_cases must be >= 1");
        if (width < 320 || height < 320) throw ValidationError("frame must be at least 320x320");
        if (site_mix.empty()) throw ValidationError("site_mix is empty");
        double total = 0;
        for (const auto& [site, w] : site_mix) {
            if (site.empty() || !(w >= 0.0)) throw ValidationError("site_mix weights must be >= 0");
            total += w;
        }
        if (!(total > 0.0)) throw ValidationError("site_mix weights sum to zero");
        noise.validate();
        if (max_gap_days <= 0) throw ValidationError("max_gap_days must be > 0");
        for (double p : {multi_nodule_prob, out_of_window_prob}) {
            if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must be in [0, 1]");
        }
    }
    bool operator==(const GeneratorConfig&) const = default;
};

struct CorpusManifest {
    GeneratorConfig config;
    std::uint64_t seed = 0;
    std::vector<CaseSpec> cases;

    [[nodiscard]] const CaseSpec* find(const std::string& case_id) const {
        auto it = std::lower_bound(cases.begin(), cases.end(), case_id,
                                   [](const CaseSpec& c, const std::string& id) { return c.case_id < id; });
        return it != cases.end() && it->case_id == case_id ? &*it : nullptr;
    }
};

/// Per-site rendering differences.
struct SiteStyle {
    int text_left = 16;
    std::uint8_t texture_lo = 12;
    std::uint8_t texture_hi = 108;
};

inline SiteStyle site_style(const std::string& site) {
    if (site == "Site2") return {24, 20, 116};
    if (site == "Site3") return {16, 8, 96};
    return {};
}

/// Pixel geometry shared by the renderer and the generator.
struct FrameLayout {
    int width = 0;
    int height = 0;
    int band_top = 0;
    int measurement_y = 0;
    int banner_y = 0;
    int crop_w = 0;
    int mark_xmin = 20;
    int mark_xmax = 0;
    int mark_ymin = 20;
    int mark_ymax = 0;
};

inline FrameLayout frame_layout(int width, int height) {
    FrameLayout f;
    f.width = width;
    f.height = height;
    const int band_h = static_cast<int>(std::lround(kBandRatio * height));
    f.band_top = height - band_h;
    f.measurement_y = f.band_top + band_h * 10 / 90;
    f.banner_y = f.band_top + band_h * 44 / 90;
    f.crop_w = cropped_width(width, CaliperConfig{}.crop_ratio);
    f.mark_xmax = f.crop_w - 20;
    // Keep stamps out of the tallest banner crop (25% of height).
    f.mark_ymax = height - static_cast<int>(std::lround(0.25 * height)) - 17;
    return f;
}

namespace detail {

constexpr int kCrossPixels = 81;  // 3-px cross on a 15x15 stamp
constexpr int kStampPixels = kCaliperSize * kCaliperSize;

/// Correlation of a full stamp with `kept` of its cross pixels left white.
inline double partial_stamp_score(int kept) {
    if (kept <= 0) return 0.0;
    const double k = kCrossPixels, n = kStampPixels;
    return std::sqrt(kept * (n - k) / (k * (n - kept)));
}

inline int kept_cross_pixels(double fidelity) {
    int best = 0;
    for (int kept = 0; kept <= kCrossPixels; ++kept) {
        if (std::abs(partial_stamp_score(kept) - fidelity) < std::abs(partial_stamp_score(best) - fidelity)) best = kept;
    }
    return best;
}

inline std::uint8_t texture_value(std::uint64_t seed, int x, int y, const SiteStyle& style) {
    const int span = style.texture_hi - style.texture_lo + 1;
    const auto coarse = splitmix64(seed ^ (static_cast<std::uint64_t>(x >> 4) << 32) ^ static_cast<std::uint64_t>(y >> 4));
    const auto fine = splitmix64(~seed ^ (static_cast<std::uint64_t>(x) << 32) ^ static_cast<std::uint64_t>(y));
    const int half = span / 2;
    return static_cast<std::uint8_t>(style.texture_lo + static_cast<int>(coarse % static_cast<std::uint64_t>(half)) +
                                     static_cast<int>(fine % static_cast<std::uint64_t>(span - half)));
}

inline void stamp(Raster& img, const Raster& tmpl, int cx, int cy) {
    const int half = tmpl.width() / 2;
    for (int y = 0; y < tmpl.height(); ++y) {
        for (int x = 0; x < tmpl.width(); ++x) img.at(cx - half + x, cy - half + y) = tmpl.at(x, y);
    }
}

inline bool stamp_fits(const ImageSpec& spec, int cx, int cy) {
    const int half = kCaliperSize / 2;
    return cx - half >= 0 && cy - half >= 0 && cx + half < spec.width && cy + half < spec.height;
}

}  // namespace detail

/// Renders a frame. Throws ValidationError when a stamp leaves the frame or text does not
/// fit in the banner band.
inline Raster render_image(const ImageSpec& spec, const GlyphFont& font = default_font(), const SiteStyle& style = {}) {
    if (spec.width <= 0 || spec.height <= 0) throw ValidationError("image size must be positive");
    const auto layout = frame_layout(spec.width, spec.height);
    Raster img(spec.width, spec.height, 0);
    for (int y = 0; y < layout.band_top; ++y) {
        auto* row = &img.at(0, y);
        for (int x = 0; x < spec.width; ++x) row[x] = detail::texture_value(spec.texture_seed, x, y, style);
    }

    const auto& tmpl = caliper_template();
    for (const auto& c : spec.calipers) {
        if (!detail::stamp_fits(spec, c.x, c.y)) throw ValidationError("caliper stamp outside image " + spec.image_id);
        detail::stamp(img, tmpl, c.x, c.y);
    }
    for (const auto& d : spec.distractors) {
        if (!detail::stamp_fits(spec, d.x, d.y)) throw ValidationError("distractor outside image " + spec.image_id);
        Raster partial = tmpl;
        std::vector<Point> cross;
        for (int y = 0; y < tmpl.height(); ++y) {
            for (int x = 0; x < tmpl.width(); ++x) {
                if (tmpl.at(x, y) != 0) cross.push_back({x, y});
            }
        }
        Rng rng(spec.texture_seed ^ splitmix64(static_cast<std::uint64_t>(d.x) << 20 | static_cast<std::uint64_t>(d.y)));
        rng.shuffle(cross);
        const int erase = static_cast<int>(cross.size()) - detail::kept_cross_pixels(d.fidelity);
        for (int i = 0; i < erase; ++i) partial.at(cross[static_cast<std::size_t>(i)].x, cross[static_cast<std::size_t>(i)].y) = 0;
        detail::stamp(img, partial, d.x, d.y);
    }

    auto put_text = [&](const std::string& text, int y) {
        if (text.empty()) return;
        if (!font.supports(text)) throw ValidationError("text has characters outside the font: '" + text + "'");
        const int right = style.text_left + static_cast<int>(text.size()) * kGlyphWidth;
        if (right > spec.width || y < layout.band_top || y + kGlyphHeight > spec.height) {
            throw ValidationError("text overflows the banner band: '" + text + "'");
        }
        draw_text(img, font, style.text_left, y, text);
    };
    if (spec.measurement_text) put_text(*spec.measurement_text, layout.measurement_y);
    put_text(spec.banner_text, layout.banner_y);
    return img;
}

/// Text an exact OCR of the banner band should return: measurement row then banner row.
inline std::string expected_band_text(const ImageSpec& spec) {
    std::string out;
    if (spec.measurement_text && !spec.measurement_text->empty()) out = *spec.measurement_text;
    if (!spec.banner_text.empty()) {
        if (!out.empty()) out += '\n';
        out += spec.banner_text;
    }
    return out;
}

/// Caliper centers the detector should report: stamps fully inside the crop region.
inline std::vector<Point> visible_calipers(const ImageSpec& spec, double crop_ratio = CaliperConfig{}.crop_ratio) {
    const int keep_w = cropped_width(spec.width, crop_ratio);
    std::vector<Point> out;
    for (const auto& c : spec.calipers) {
        if (c.x + kCaliperSize / 2 < keep_w) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Report writers

namespace detail {

inline std::string format_cm(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string dims_phrase(const std::vector<double>& dims) {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += " x ";
        out += format_cm(dims[i], 1);
    }
    return out + " cm";
}

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

inline std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

inline const std::map<std::string, std::string>& location_abbreviations() {
    static const std::map<std::string, std::string> m{
        {"superior", "SUP"}, {"inferior", "INF"}, {"anterior", "ANT"}, {"posterior", "POST"}, {"mid", "MID"},
        {"lateral", "LAT"},  {"medial", "MED"},   {"upper", "UPPER"},  {"lower", "LOWER"}};
    return m;
}

inline std::string lat_abbrev(Laterality l) {
    switch (l) {
        case Laterality::right: return "RT";
        case Laterality::left: return "LT";
        case Laterality::isthmus: return "ISTHMUS";
    }
    return "";
}

inline std::string lat_word(Laterality l) { return std::string(to_string(l)); }

inline const std::vector<std::string>& benign_phrases() {
    static const std::vector<std::string> v{
        "Colloid, follicular epithelium, and macrophages, consistent with a benign thyroid nodule.",
        "Scant follicular epithelium, colloid in a background of macrophages, consistent with a benign cystic thyroid nodule.",
        "Benign follicular nodule. Negative for malignancy."};
    return v;
}
inline const std::vector<std::string>& suspicious_phrases() {
    static const std::vector<std::string> v{"Suspicious for papillary thyroid carcinoma.",
                                            "Suspicious for malignancy, favor papillary thyroid carcinoma."};
    return v;
}
inline const std::vector<std::string>& malignant_phrases() {
    static const std::vector<std::string> v{"Papillary thyroid carcinoma.",
                                            "Positive for malignancy. Papillary thyroid carcinoma, classic type.",
                                            "Medullary thyroid carcinoma."};
    return v;
}

inline const std::string& diagnosis_phrase(Diagnosis d, Rng& rng) {
    switch (d) {
        case Diagnosis::benign: return rng.pick(benign_phrases());
        case Diagnosis::suspicious: return rng.pick(suspicious_phrases());
        case Diagnosis::malignant: return rng.pick(malignant_phrases());
    }
    return benign_phrases().front();
}

inline std::string label_number(const std::string& label) { return label.size() > 1 ? label.substr(1) : label; }

/// "right inferior #1" or, abbreviated as on requisition headers, "RT THYROID INF 1".
inline std::string specimen_site(const NoduleTruth& n, bool abbreviated) {
    std::string out;
    if (abbreviated) {
        out = lat_abbrev(n.laterality) + " THYROID";
        if (n.location) out += " " + location_abbreviations().at(*n.location);
        if (n.label) out += " " + label_number(*n.label);
    } else {
        out = lat_word(n.laterality);
        if (n.location) out += " " + *n.location;
        if (n.label) out += " " + *n.label;
    }
    return out;
}

inline std::string plain_site(const NoduleTruth& n) { return specimen_site(n, false); }

}  // namespace detail

inline std::string write_pathology_report(const CaseSpec& c) {
    if (c.nodules.empty()) throw ValidationError("case " + c.case_id + " has no nodules");
    auto rng = Rng::derive(fnv1a(c.case_id), "pathology");
    std::string fna_date = c.pathology_date.iso();
    for (const auto& s : c.studies) {
        if (s.kind == StudyKind::fna) fna_date = s.date.iso();
    }
    const int age = static_cast<int>(rng.range(24, 84));
    const char* sex = rng.chance(0.75) ? "female" : "male";

    std::string r;
    r += "Fine Needle Aspirate Case: FNA-" + c.case_id + "\n";
    r += " Authorizing Provider: Staff Physician Collected: " + fna_date + "\n";
    r += " Ordering Location: " + c.site + " Received: " + c.pathology_date.iso() + "\n";
    r += " Pathologist: Staff Pathologist\n";
    r += " Report Date: " + c.pathology_date.iso() + "\n";

    if (c.nodules.size() == 1) {
        const auto& n = c.nodules.front();
        const bool abbreviated = rng.chance(0.5);
        double largest = *std::max_element(n.dims_cm.begin(), n.dims_cm.end());
        r += " Specimen: Thyroid, " + detail::specimen_site(n, abbreviated) + "\n";
        r += " " + std::to_string(age) + " year old " + sex + " patient presents with a solid " +
             detail::format_cm(largest, 1) + " cm " + detail::lat_word(n.laterality) + " thyroid nodule.\n";
        r += " Ultrasound guided fine needle aspiration biopsy of " + detail::lat_word(n.laterality) +
             " thyroid performed by staff of radiology.\n";
        r += " 2 prestained smears, 2 prefixed smears, and fluid for ThinPrep.\n";
        r += " Thyroid, " + detail::plain_site(n) + ", ultrasound guided fine needle aspiration biopsy.\n";
        r += " " + detail::diagnosis_phrase(n.diagnosis, rng) + "\n";
        r += " Adequate (by staff).\n";
        return r;
    }

    const std::string letters = "ABCDEFGH";
    for (std::size_t i = 0; i < c.nodules.size(); ++i) {
        r += i == 0 ? " Specimens: " : " ";
        r += std::string(1, letters[i]) + ") - Thyroid, " + detail::plain_site(c.nodules[i]) + "\n";
    }
    r += " " + std::to_string(age) + " year old " + sex + " patient with thyroid nodules.\n";
    for (std::size_t i = 0; i < c.nodules.size(); ++i) {
        r += " " + std::string(1, letters[i]) + ") Fine needle aspiration biopsy of the " +
             detail::lat_word(c.nodules[i].laterality) + " thyroid performed by staff\n";
    }
    r += " ";
    for (std::size_t i = 0; i < c.nodules.size(); ++i) {
        r += std::string(1, letters[i]) + ") 30 mls clear Cytolyt solution received. 1 ThinPrep slide prepared. ";
    }
    r += "\n";
    for (const auto& n : c.nodules) {
        r += " Thyroid, " + detail::plain_site(n) + ", ultrasound-guided fine needle aspiration biopsy " +
             detail::diagnosis_phrase(n.diagnosis, rng) + " Not performed.\n";
    }
    return r;
}

namespace detail {

struct SideNodule {
    std::string label;
    std::array<double, 3> dims;
};

inline const std::vector<std::string>& nodule_descriptions() {
    static const std::vector<std::string> v{
        "Ovoid hyperechoic solid nodule with ill-defined borders without echogenic foci.",
        "Solid isoechoic nodule with smooth margins.",
        "Mixed cystic and solid nodule with a spongiform component.",
        "Hypoechoic solid nodule, wider than tall, with punctate echogenic foci.",
        "Predominantly cystic nodule with a small solid component."};
    return v;
}

}  // namespace detail

/// Radiology report for the case's diagnostic exam. Site2 cases with style variation
/// omit the side subsection headers and rely on inline side words.
inline std::string write_radiology_report(const CaseSpec& c) {
    const StudySpec* diag = nullptr;
    for (const auto& s : c.studies) {
        if (s.kind == StudyKind::diagnostic && (!diag || s.date > diag->date)) diag = &s;
    }
    if (!diag) throw ValidationError("case " + c.case_id + " has no diagnostic study");
    auto rng = Rng::derive(fnv1a(c.case_id), "radiology");
    const bool headers = !(c.noise.site_style_variation && c.site == "Site2");

    std::map<Laterality, std::vector<detail::SideNodule>> by_side;
    int ordinal = 0;
    for (const auto& n : c.nodules) {
        ++ordinal;
        by_side[n.laterality].push_back({n.label.value_or("#" + std::to_string(ordinal)), n.dims_cm});
    }
    for (const auto& n : c.incidental_nodules) by_side[n.laterality].push_back({n.label, n.dims_cm});

    std::string r;
    r += "Rpt=US soft tissue head and neck,MRN=" + c.case_id + ",Date=" + diag->date.iso() + ",Facility=" + c.site +
         ", Acc Num=" + diag->study_id + "\n\n";
    r += "Indication: Thyroid nodule, follow-up of fine needle aspiration\n\n";
    r += "Comparison: None.\n\n";
    r += "Technique: Gray-scale and color Doppler images of the thyroid gland were obtained.\n\n";
    r += "Findings:\n\n";

    const char* counts[] = {"No nodules are identified.", "One nodule is noted:", "Two nodules are noted:",
                            "Three nodules are noted:", "Multiple nodules are noted:"};
    for (auto side : {Laterality::right, Laterality::left, Laterality::isthmus}) {
        const auto lobe = std::find_if(c.lobes.begin(), c.lobes.end(), [&](const LobeSpec& l) { return l.laterality == side; });
        const auto& nodules = by_side[side];
        const std::string word = detail::lat_word(side);
        if (headers) r += side == Laterality::isthmus ? "ISTHMUS:\n\n" : detail::upper(word) + " LOBE:\n\n";
        if (side == Laterality::isthmus) {
            if (lobe != c.lobes.end()) r += "The isthmus measures " + detail::dims_phrase(lobe->dims_cm) + ".";
            if (!nodules.empty()) r += std::string(" ") + counts[std::min<std::size_t>(nodules.size(), 4)];
        } else {
            r += "The " + word + " thyroid lobe is homogeneous in background echotexture.";
            if (lobe != c.lobes.end()) r += " The " + word + " lobe measures " + detail::dims_phrase(lobe->dims_cm) + ".";
            r += std::string(" ") + counts[std::min<std::size_t>(nodules.size(), 4)];
        }
        r += "\n\n";
        for (const auto& n : nodules) {
            r += "* " + detail::capitalize(word) + " nodule " + n.label + ": " + rng.pick(detail::nodule_descriptions()) +
                 " The nodule measures " + detail::dims_phrase({n.dims[0], n.dims[1], n.dims[2]}) + ".\n\n";
        }
    }

    r += "Impression:\n\n";
    int item = 0;
    for (const auto& n : c.nodules) {
        r += std::to_string(++item) + ". " + detail::capitalize(detail::lat_word(n.laterality)) +
             " thyroid nodule as above, status post fine-needle aspiration.\n";
    }
    if (!c.incidental_nodules.empty()) {
        r += std::to_string(++item) + ". Additional thyroid nodules as above. Suggest follow-up ultrasound in one year.\n";
    }
    r += "\nElectronically Signed by: Staff Radiologist\n";
    return r;
}

// ---------------------------------------------------------------------------------------
// Case generation

namespace detail {

inline std::string two_digit(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

inline double tenth(Rng& rng, int lo_tenths, int hi_tenths) { return static_cast<double>(rng.range(lo_tenths, hi_tenths)) / 10.0; }

struct DraftImage {
    ImageSpec spec;
    std::string role;  // "key_t:<i>", "key_l:<i>" or ""
};

class CaseBuilder {
public:
    CaseBuilder(const GeneratorConfig& cfg, std::uint64_t seed, int index)
        : cfg_(cfg), layout_(frame_layout(cfg.width, cfg.height)) {
        char id[32];
        std::snprintf(id, sizeof id, "case%04d", index + 1);
        c_.case_id = id;
        rng_.emplace(Rng::derive(seed, c_.case_id));
    }

    CaseSpec build() {
        auto& rng = *rng_;
        c_.noise = cfg_.noise;
        std::vector<double> weights;
        std::vector<std::string> sites;
        for (const auto& [site, w] : cfg_.site_mix) {
            sites.push_back(site);
            weights.push_back(w);
        }
        c_.site = sites[rng.weighted(weights)];
        c_.pathology_date = Date(2015, 1, 1).plus_days(rng.range(0, 2190));
        site2_style_ = cfg_.noise.site_style_variation && c_.site == "Site2";
        sparse_ = c_.site == "Site3";

        make_nodules();
        choose_scenario();
        make_incidentals();
        make_lobes();
        make_studies();
        return std::move(c_);
    }

private:
    Rng& rng() { return *rng_; }

    void make_nodules() {
        auto& r = rng();
        const int n = r.chance(cfg_.multi_nodule_prob) ? 2 : 1;
        static const std::vector<std::string> locations{"superior", "inferior", "mid",   "upper", "lower",
                                                        "lateral",  "medial",   "anterior", "posterior"};
        const std::array<double, 3> lat_w{0.45, 0.45, 0.10};
        const std::array<Laterality, 3> lats{Laterality::right, Laterality::left, Laterality::isthmus};
        const std::array<double, 3> dx_w{0.85, 0.05, 0.10};
        const std::array<Diagnosis, 3> dxs{Diagnosis::benign, Diagnosis::suspicious, Diagnosis::malignant};
        for (int i = 0; i < n; ++i) {
            NoduleTruth t;
            t.nodule_id = c_.case_id + "-n" + std::to_string(i + 1);
            t.laterality = lats[r.weighted(lat_w)];
            if (r.chance(n == 1 ? 0.6 : 0.5)) t.location = r.pick(locations);
            if (n > 1 || r.chance(0.7)) t.label = "#" + std::to_string(i + 1);
            t.diagnosis = dxs[r.weighted(dx_w)];
            for (auto& d : t.dims_cm) d = tenth(r, 5, 40);
            c_.nodules.push_back(t);
        }
    }

    void choose_scenario() {
        auto& r = rng();
        out_of_window_ = r.chance(cfg_.out_of_window_prob);
        const bool single = c_.nodules.size() == 1;
        has_fna_ = r.chance(sparse_ ? 0.6 : 0.85);
        if (has_fna_) {
            const std::array<double, 3> w_single{0.45, 0.30, 0.25};
            const std::array<double, 2> w_multi{0.70, 0.30};
            const char* single_modes[] = {"fna_m3", "fna_m4", "fna_underflow"};
            const char* multi_modes[] = {"fna_m4", "fna_underflow"};
            fna_mode_ = single ? single_modes[r.weighted(w_single)] : multi_modes[r.weighted(w_multi)];
        }
        needs_diag_ = !has_fna_ || fna_mode_ == "fna_underflow";
        has_diag_ = needs_diag_ || r.chance(0.5);
        if (needs_diag_) {
            bool sides_distinct = true;
            for (std::size_t i = 0; i < c_.nodules.size(); ++i) {
                for (std::size_t j = i + 1; j < c_.nodules.size(); ++j) {
                    sides_distinct = sides_distinct && c_.nodules[i].laterality != c_.nodules[j].laterality;
                }
            }
            diag_mode_ = sides_distinct && r.chance(0.45) ? "diag_m5" : "diag_m4";
        } else if (has_diag_) {
            diag_mode_ = "diag_unmeasured";
        }
        c_.scenario = out_of_window_ ? "out_of_window" : (needs_diag_ ? (has_fna_ ? fna_mode_ + "+" : "") + diag_mode_ : fna_mode_);
    }

    [[nodiscard]] const NoduleTruth* biopsied_on(Laterality side) const {
        for (const auto& n : c_.nodules) {
            if (n.laterality == side) return &n;
        }
        return nullptr;
    }

    void make_incidentals() {
        auto& r = rng();
        int count = static_cast<int>(r.weighted(std::array<double, 3>{0.5, 0.35, 0.15}));
        if (fna_mode_ == "fna_m4" && c_.nodules.size() == 1) count = std::max(count, 1);
        int next_label = static_cast<int>(c_.nodules.size()) + 1;
        for (int i = 0; i < count; ++i) {
            const std::array<Laterality, 3> lats{Laterality::right, Laterality::left, Laterality::isthmus};
            Laterality side = lats[r.weighted(std::array<double, 3>{0.45, 0.45, 0.10})];
            auto allowed = [&](Laterality s) {
                const auto* b = biopsied_on(s);
                if (!b) return true;
                return b->label.has_value() && diag_mode_ != "diag_m5";
            };
            if (!allowed(side)) {
                std::vector<Laterality> options;
                for (auto s : lats) {
                    if (allowed(s)) options.push_back(s);
                }
                if (options.empty()) break;
                side = r.pick(options);
            }
            IncidentalNodule inc;
            inc.laterality = side;
            inc.label = "#" + std::to_string(next_label++);
            for (auto& d : inc.dims_cm) d = tenth(r, 5, 30);
            c_.incidental_nodules.push_back(inc);
        }
    }

    [[nodiscard]] std::vector<std::vector<double>> lobe_image_values(const LobeSpec& lobe) const {
        if (lobe.laterality == Laterality::isthmus) return {{lobe.dims_cm[0]}};
        return {{lobe.dims_cm[1], lobe.dims_cm[2]}, {lobe.dims_cm[0]}};
    }

    void make_lobes() {
        auto& r = rng();
        for (auto side : {Laterality::right, Laterality::left, Laterality::isthmus}) {
            LobeSpec lobe;
            lobe.laterality = side;
            // Resample until no lobe frame could pass for a same-side nodule measurement.
            for (int attempt = 0; attempt < 200; ++attempt) {
                if (side == Laterality::isthmus) {
                    lobe.dims_cm = {tenth(r, 3, 6)};
                } else {
                    lobe.dims_cm = {tenth(r, 40, 60), tenth(r, 15, 25), tenth(r, 15, 25)};
                }
                bool clash = false;
                for (const auto& n : c_.nodules) {
                    if (n.laterality != side) continue;
                    for (const auto& values : lobe_image_values(lobe)) {
                        clash = clash || match_measurements(values, {n.dims_cm.begin(), n.dims_cm.end()}, 0.05);
                    }
                }
                if (!clash) break;
            }
            c_.lobes.push_back(lobe);
        }
    }

    std::string banner(View view, Laterality lat, const std::optional<std::string>& loc,
                       const std::optional<std::string>& label) {
        std::vector<std::string> tokens;
        if (site2_style_) {
            tokens.push_back(lat == Laterality::right ? "RIGHT" : lat == Laterality::left ? "LEFT" : "ISTH");
            if (loc) tokens.push_back(location_abbreviations().at(*loc));
            if (label) tokens.push_back(*label);
            tokens.push_back(view == View::transverse ? "TRV" : "LONG");
        } else {
            tokens.push_back(view == View::transverse ? "TRANS" : "SAG");
            tokens.push_back(lat_abbrev(lat));
            if (loc) tokens.push_back(location_abbreviations().at(*loc));
            if (label) tokens.push_back(*label);
        }
        std::string out;
        for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
        return out;
    }

    static std::string measurement_text(const std::vector<double>& values) {
        std::string out;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out += ' ';
            out += "D" + std::to_string(i + 1) + " " + format_cm(values[i], 2) + "CM";
        }
        return out;
    }

    ImageSpec blank_image(std::string banner_text) {
        ImageSpec s;
        s.width = cfg_.width;
        s.height = cfg_.height;
        s.texture_seed = rng().next();
        s.banner_text = std::move(banner_text);
        add_margin_marks(s);
        return s;
    }

    void add_margin_marks(ImageSpec& s) {
        auto& r = rng();
        const int n = static_cast<int>(r.range(0, 2));
        const int xlo = layout_.crop_w + kCaliperSize, xhi = s.width - kCaliperSize / 2 - 2;
        if (xhi < xlo) return;
        for (int i = 0; i < n; ++i) {
            const int y = layout_.mark_ymin + i * (layout_.mark_ymax - layout_.mark_ymin) / 2 +
                          static_cast<int>(r.range(0, (layout_.mark_ymax - layout_.mark_ymin) / 4));
            s.calipers.push_back({static_cast<int>(r.range(xlo, xhi)), y});
        }
    }

    /// Calipers for one or two perpendicular distances centered on a random point.
    ImageSpec measured_image(std::string banner_text, const std::vector<double>& values) {
        auto s = blank_image(std::move(banner_text));
        auto& r = rng();
        const int a = static_cast<int>(std::lround(values[0] * kPixelsPerCm / 2));
        const int b = values.size() > 1 ? static_cast<int>(std::lround(values[1] * kPixelsPerCm / 2)) : 0;
        const int cx = static_cast<int>(r.range(layout_.mark_xmin + a, layout_.mark_xmax - a));
        const int cy = static_cast<int>(r.range(layout_.mark_ymin + b, layout_.mark_ymax - b));
        std::vector<Point> marks{{cx - a, cy}, {cx + a, cy}};
        if (values.size() > 1) {
            marks.push_back({cx, cy - b});
            marks.push_back({cx, cy + b});
        }
        s.calipers.insert(s.calipers.begin(), marks.begin(), marks.end());
        s.measurement_text = measurement_text(values);
        return s;
    }

    void apply_noise(ImageSpec& s) {
        auto& r = rng();
        const double dropout = std::min(1.0, cfg_.noise.banner_dropout_prob * (site2_style_ ? 1.5 : 1.0));
        if (!s.banner_text.empty() && r.chance(dropout)) s.banner_text.clear();
        if (r.chance(cfg_.noise.distractor_caliper_prob)) {
            const double fidelity = r.uniform(0.5, 0.99);
            for (int attempt = 0; attempt < 100; ++attempt) {
                const int x = static_cast<int>(r.range(layout_.mark_xmin, layout_.mark_xmax));
                const int y = static_cast<int>(r.range(layout_.mark_ymin, layout_.mark_ymax));
                const bool clear = std::none_of(s.calipers.begin(), s.calipers.end(), [&](const Point& p) {
                    return std::max(std::abs(p.x - x), std::abs(p.y - y)) < 20;
                });
                if (clear) {
                    s.distractors.push_back({x, y, fidelity});
                    break;
                }
            }
        }
    }

    void key_pair(std::vector<DraftImage>& out, std::size_t i) {
        const auto& n = c_.nodules[i];
        auto& r = rng();
        auto t = measured_image(banner(View::transverse, n.laterality, n.location, n.label), {n.dims_cm[0], n.dims_cm[1]});
        std::vector<double> lv{n.dims_cm[2]};
        if (r.chance(0.5)) lv.push_back(n.dims_cm[1]);
        auto l = measured_image(banner(View::longitudinal, n.laterality, n.location, n.label), lv);
        out.push_back({std::move(t), "key_t:" + std::to_string(i)});
        out.push_back({std::move(l), "key_l:" + std::to_string(i)});
    }

    void unmeasured_views(std::vector<DraftImage>& out, std::size_t i, int count) {
        const auto& n = c_.nodules[i];
        for (int k = 0; k < count; ++k) {
            const View v = k % 2 == 0 ? View::transverse : View::longitudinal;
            out.push_back({blank_image(banner(v, n.laterality, n.location, n.label)), ""});
        }
    }

    void incidental_pair(std::vector<DraftImage>& out, const IncidentalNodule& inc, bool both) {
        out.push_back({measured_image(banner(View::transverse, inc.laterality, std::nullopt, inc.label),
                                      {inc.dims_cm[0], inc.dims_cm[1]}),
                       ""});
        if (both) {
            out.push_back({measured_image(banner(View::longitudinal, inc.laterality, std::nullopt, inc.label),
                                          {inc.dims_cm[2]}),
                           ""});
        }
    }

    void lobe_images(std::vector<DraftImage>& out, const LobeSpec& lobe, bool measured) {
        const auto values = lobe_image_values(lobe);
        for (std::size_t k = 0; k < values.size(); ++k) {
            const auto b = banner(k == 0 ? View::transverse : View::longitudinal, lobe.laterality, std::nullopt, std::nullopt);
            out.push_back({measured ? measured_image(b, values[k]) : blank_image(b), ""});
        }
    }

    void survey_images(std::vector<DraftImage>& out, int count) {
        auto& r = rng();
        static const std::vector<std::string> locs{"upper", "mid", "lower"};
        for (int k = 0; k < count; ++k) {
            const auto lat = r.chance(0.5) ? Laterality::right : Laterality::left;
            out.push_back({blank_image(banner(r.chance(0.5) ? View::transverse : View::longitudinal, lat,
                                              r.pick(locs), std::nullopt)),
                           ""});
        }
    }

    StudySpec finish_study(const std::string& id, StudyKind kind, Date date, std::vector<DraftImage> drafts, bool truth) {
        auto& r = rng();
        r.shuffle(drafts);
        StudySpec s;
        s.study_id = id;
        s.kind = kind;
        s.date = date;
        for (std::size_t k = 0; k < drafts.size(); ++k) {
            auto& d = drafts[k];
            d.spec.image_id = id + "_" + two_digit(static_cast<int>(k + 1));
            apply_noise(d.spec);
            if (truth && !d.role.empty()) {
                const auto colon = d.role.find(':');
                auto& key = c_.nodules[std::stoul(d.role.substr(colon + 1))].key_images;
                key.study_id = id;
                (d.role.starts_with("key_t") ? key.transverse : key.longitudinal) = d.spec.image_id;
            }
            s.images.push_back(std::move(d.spec));
        }
        return s;
    }

    Date jitter(Date d) {
        const int j = cfg_.noise.date_jitter_days;
        return j > 0 ? d.plus_days(rng().range(-j, j)) : d;
    }

    void make_studies() {
        auto& r = rng();
        const Date path = c_.pathology_date;
        const int gap_cap = cfg_.max_gap_days;

        // FNA study.
        if (has_fna_) {
            std::vector<DraftImage> drafts;
            const bool measured = fna_mode_ != "fna_underflow";
            for (std::size_t i = 0; i < c_.nodules.size(); ++i) {
                if (measured) key_pair(drafts, i);
                unmeasured_views(drafts, i, static_cast<int>(r.range(measured ? 0 : 1, sparse_ ? 1 : 2)));
            }
            if (fna_mode_ == "fna_m4" && c_.nodules.size() == 1) {
                incidental_pair(drafts, c_.incidental_nodules.front(), r.chance(0.5));
            }
            const Date date = out_of_window_ ? path.plus_days(-r.range(gap_cap + 10, gap_cap + 300)) : path.plus_days(-r.range(0, 5));
            c_.studies.push_back(finish_study("fna1", StudyKind::fna, jitter(date), std::move(drafts), !needs_diag_));
        }

        // Main diagnostic study.
        if (has_diag_) {
            std::vector<DraftImage> drafts;
            for (std::size_t i = 0; i < c_.nodules.size(); ++i) {
                if (needs_diag_) {
                    key_pair(drafts, i);
                    unmeasured_views(drafts, i, static_cast<int>(r.range(0, 1)));
                } else {
                    unmeasured_views(drafts, i, static_cast<int>(r.range(1, 2)));
                }
            }
            for (const auto& inc : c_.incidental_nodules) incidental_pair(drafts, inc, true);
            for (const auto& lobe : c_.lobes) {
                const bool nodule_side = biopsied_on(lobe.laterality) != nullptr;
                const bool measured = diag_mode_ == "diag_m5" && nodule_side;
                if (measured || !sparse_) lobe_images(drafts, lobe, measured);
            }
            survey_images(drafts, sparse_ ? 0 : static_cast<int>(r.range(1, 3)));
            const Date date =
                out_of_window_ ? path.plus_days(-r.range(gap_cap + 10, gap_cap + 300)) : path.plus_days(-r.range(10, 150));
            main_diag_gap_ = static_cast<int>(path.days_since(date));
            c_.studies.push_back(finish_study("diag1", StudyKind::diagnostic, jitter(date), std::move(drafts), needs_diag_));
        }

        // Earlier in-window exam of the same nodules; the matcher must prefer the closer one.
        if (has_diag_ && !out_of_window_ && main_diag_gap_ + 20 < gap_cap && r.chance(0.1)) {
            std::vector<DraftImage> drafts;
            for (std::size_t i = 0; i < c_.nodules.size(); ++i) key_pair(drafts, i);
            for (auto& d : drafts) d.role.clear();
            const Date date = path.plus_days(-r.range(main_diag_gap_ + 20, gap_cap));
            c_.studies.push_back(finish_study("diag2", StudyKind::diagnostic, jitter(date), std::move(drafts), false));
        }

        // Old exam far outside the window.
        if (r.chance(0.2)) {
            std::vector<DraftImage> drafts;
            survey_images(drafts, 2);
            for (std::size_t i = 0; i < c_.nodules.size(); ++i) unmeasured_views(drafts, i, 1);
            const Date date = path.plus_days(-r.range(gap_cap + 60, gap_cap + 700));
            c_.studies.push_back(finish_study("diag3", StudyKind::diagnostic, jitter(date), std::move(drafts), false));
        }

        std::sort(c_.studies.begin(), c_.studies.end(),
                  [](const StudySpec& a, const StudySpec& b) { return a.study_id < b.study_id; });
    }

    const GeneratorConfig& cfg_;
    FrameLayout layout_;
    std::optional<Rng> rng_;
    CaseSpec c_;
    bool site2_style_ = false;
    bool sparse_ = false;
    bool out_of_window_ = false;
    bool has_fna_ = false;
    bool needs_diag_ = false;
    bool has_diag_ = false;
    int main_diag_gap_ = 0;
    std::string fna_mode_;
    std::string diag_mode_;
};

}  // namespace detail

inline CaseSpec generate_case(const GeneratorConfig& cfg, std::uint64_t seed, int index) {
    return detail::CaseBuilder(cfg, seed, index).build();
}

/// All case specs, without rendering anything.
inline std::vector<CaseSpec> generate_case_specs(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::vector<CaseSpec> cases;
    cases.reserve(static_cast<std::size_t>(cfg.n_cases));
    for (int i = 0; i < cfg.n_cases; ++i) cases.push_back(generate_case(cfg, seed, i));
    return cases;
}

inline Study to_study(const StudySpec& s, const std::string& site) {
    Study out{s.study_id, s.kind, s.date, site, {}};
    for (const auto& img : s.images) out.image_ids.push_back(img.image_id);
    return out;
}

inline const ImageSpec* find_image(const CaseSpec& c, const ImageRef& ref) {
    for (const auto& s : c.studies) {
        if (s.study_id != ref.study_id) continue;
        for (const auto& img : s.images) {
            if (img.image_id == ref.image_id) return &img;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const Point& p) { j = json::array({p.x, p.y}); }
inline void from_json(const json& j, Point& p) { p = {j.at(0).get<int>(), j.at(1).get<int>()}; }

inline void to_json(json& j, const DistractorSpec& d) { j = json{{"x", d.x}, {"y", d.y}, {"fidelity", d.fidelity}}; }
inline void from_json(const json& j, DistractorSpec& d) {
    d = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("fidelity").get<double>()};
}

inline void to_json(json& j, const ImageSpec& s) {
    j = json{{"image_id", s.image_id},
             {"width", s.width},
             {"height", s.height},
             {"calipers", s.calipers},
             {"banner_text", s.banner_text},
             {"measurement_text", optional_to_json(s.measurement_text)},
             {"distractors", s.distractors},
             {"texture_seed", s.texture_seed}};
}
inline void from_json(const json& j, ImageSpec& s) {
    s.image_id = j.at("image_id").get<std::string>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.calipers = j.at("calipers").get<std::vector<Point>>();
    s.banner_text = j.at("banner_text").get<std::string>();
    s.measurement_text = optional_from_json<std::string>(j, "measurement_text");
    s.distractors = j.at("distractors").get<std::vector<DistractorSpec>>();
    s.texture_seed = j.at("texture_seed").get<std::uint64_t>();
}

inline void to_json(json& j, const StudySpec& s) {
    j = json{{"study_id", s.study_id}, {"kind", s.kind}, {"date", s.date}, {"images", s.images}};
}
inline void from_json(const json& j, StudySpec& s) {
    s.study_id = j.at("study_id").get<std::string>();
    s.kind = j.at("kind").get<StudyKind>();
    s.date = j.at("date").get<Date>();
    s.images = j.at("images").get<std::vector<ImageSpec>>();
}

inline void to_json(json& j, const KeyImages& k) {
    j = json{{"study_id", k.study_id}, {"transverse", k.transverse}, {"longitudinal", k.longitudinal}};
}
inline void from_json(const json& j, KeyImages& k) {
    k = {j.at("study_id").get<std::string>(), j.at("transverse").get<std::string>(),
         j.at("longitudinal").get<std::string>()};
}

inline void to_json(json& j, const NoduleTruth& n) {
    j = json{{"nodule_id", n.nodule_id},
             {"laterality", n.laterality},
             {"location", optional_to_json(n.location)},
             {"label", optional_to_json(n.label)},
             {"diagnosis", n.diagnosis},
             {"dims_cm", n.dims_cm},
             {"key_images", n.key_images}};
}
inline void from_json(const json& j, NoduleTruth& n) {
    n.nodule_id = j.at("nodule_id").get<std::string>();
    n.laterality = j.at("laterality").get<Laterality>();
    n.location = optional_from_json<std::string>(j, "location");
    n.label = optional_from_json<std::string>(j, "label");
    n.diagnosis = j.at("diagnosis").get<Diagnosis>();
    n.dims_cm = j.at("dims_cm").get<std::array<double, 3>>();
    n.key_images = j.at("key_images").get<KeyImages>();
}

inline void to_json(json& j, const IncidentalNodule& n) {
    j = json{{"laterality", n.laterality}, {"label", n.label}, {"dims_cm", n.dims_cm}};
}
inline void from_json(const json& j, IncidentalNodule& n) {
    n.laterality = j.at("laterality").get<Laterality>();
    n.label = j.at("label").get<std::string>();
    n.dims_cm = j.at("dims_cm").get<std::array<double, 3>>();
}

inline void to_json(json& j, const LobeSpec& l) { j = json{{"laterality", l.laterality}, {"dims_cm", l.dims_cm}}; }
inline void from_json(const json& j, LobeSpec& l) {
    l.laterality = j.at("laterality").get<Laterality>();
    l.dims_cm = j.at("dims_cm").get<std::vector<double>>();
}

inline void to_json(json& j, const NoiseProfile& n) {
    j = json{{"banner_dropout_prob", n.banner_dropout_prob},
             {"distractor_caliper_prob", n.distractor_caliper_prob},
             {"site_style_variation", n.site_style_variation},
             {"date_jitter_days", n.date_jitter_days}};
}
inline void from_json(const json& j, NoiseProfile& n) {
    NoiseProfile d;
    n.banner_dropout_prob = j.value("banner_dropout_prob", d.banner_dropout_prob);
    n.distractor_caliper_prob = j.value("distractor_caliper_prob", d.distractor_caliper_prob);
    n.site_style_variation = j.value("site_style_variation", d.site_style_variation);
    n.date_jitter_days = j.value("date_jitter_days", d.date_jitter_days);
}

inline void to_json(json& j, const CaseSpec& c) {
    j = json{{"case_id", c.case_id},
             {"site", c.site},
             {"pathology_date", c.pathology_date},
             {"nodules", c.nodules},
             {"incidental_nodules", c.incidental_nodules},
             {"lobes", c.lobes},
             {"studies", c.studies},
             {"noise", c.noise},
             {"scenario", c.scenario}};
}
inline void from_json(const json& j, CaseSpec& c) {
    c.case_id = j.at("case_id").get<std::string>();
    c.site = j.at("site").get<std::string>();
    c.pathology_date = j.at("pathology_date").get<Date>();
    c.nodules = j.at("nodules").get<std::vector<NoduleTruth>>();
    c.incidental_nodules = j.value("incidental_nodules", std::vector<IncidentalNodule>{});
    c.lobes = j.value("lobes", std::vector<LobeSpec>{});
    c.studies = j.at("studies").get<std::vector<StudySpec>>();
    c.noise = j.value("noise", NoiseProfile{});
    c.scenario = j.value("scenario", std::string{});
}

inline void to_json(json& j, const GeneratorConfig& g) {
    j = json{{"n_cases", g.n_cases},
             {"width", g.width},
             {"height", g.height},
             {"site_mix", g.site_mix},
             {"noise", g.noise},
             {"max_gap_days", g.max_gap_days},
             {"multi_nodule_prob", g.multi_nodule_prob},
             {"out_of_window_prob", g.out_of_window_prob}};
}
inline void from_json(const json& j, GeneratorConfig& g) {
    const GeneratorConfig d;
    g.n_cases = j.value("n_cases", d.n_cases);
    g.width = j.value("width", d.width);
    g.height = j.value("height", d.height);
    g.site_mix = j.value("site_mix", d.site_mix);
    g.noise = j.value("noise", d.noise);
    g.max_gap_days = j.value("max_gap_days", d.max_gap_days);
    g.multi_nodule_prob = j.value("multi_nodule_prob", d.multi_nodule_prob);
    g.out_of_window_prob = j.value("out_of_window_prob", d.out_of_window_prob);
}

/// Config from JSON text; unknown keys are rejected so typos do not silently fall back to defaults.
inline GeneratorConfig parse_generator_config(std::string_view text) {
    const auto j = parse_json(text, "generator config");
    if (!j.is_object()) throw ValidationError("generator config must be a JSON object");
    static const std::vector<std::string> known{"n_cases", "width", "height", "site_mix", "noise", "max_gap_days",
                                                "multi_nodule_prob", "out_of_window_prob", "seed"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ValidationError("unknown config key '" + k + "'");
    }
    try {
        auto cfg = j.get<GeneratorConfig>();
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("generator config: ") + e.what());
    }
}

inline void to_json(json& j, const CorpusManifest& m) {
    j = json{{"config", m.config}, {"seed", m.seed}, {"cases", m.cases}};
}
inline void from_json(const json& j, CorpusManifest& m) {
    m.config = j.at("config").get<GeneratorConfig>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cases = j.at("cases").get<std::vector<CaseSpec>>();
    std::sort(m.cases.begin(), m.cases.end(), [](const CaseSpec& a, const CaseSpec& b) { return a.case_id < b.case_id; });
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    const auto j = parse_json(read_file(path), "manifest " + path.string());
    try {
        return j.get<CorpusManifest>();
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + path.string() + ": " + e.what());
    }
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------------------
// Writing a corpus to disk

inline void write_case(const std::filesystem::path& out, const CaseSpec& c, const GlyphFont& font = default_font()) {
    namespace fs = std::filesystem;
    const auto dir = out / c.case_id;
    write_file(dir / "pathology.txt", write_pathology_report(c));
    const bool has_diag = std::any_of(c.studies.begin(), c.studies.end(),
                                      [](const StudySpec& s) { return s.kind == StudyKind::diagnostic; });
    if (has_diag) write_file(dir / "radiology.txt", write_radiology_report(c));
    const auto style = site_style(c.site);
    for (const auto& s : c.studies) {
        const auto sdir = dir / "studies" / s.study_id;
        write_file(sdir / "meta.json", dump_json(json(to_study(s, c.site))));
        for (const auto& img : s.images) write_pgm(sdir / (img.image_id + ".pgm"), render_image(img, font, style));
    }
}

/// Generates `config.n_cases` cases and writes them plus manifest.json under `out`.
/// Output bytes depend only on (config, seed).
inline CorpusManifest gen_corpus(const GeneratorConfig& config, std::uint64_t seed, const std::filesystem::path& out,
                                 int parallelism = 1) {
    namespace fs = std::filesystem;
    config.validate();
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());

    CorpusManifest m{config, seed, generate_case_specs(config, seed)};
    parallel_for(m.cases.size(), parallelism, [&](std::size_t i) { write_case(out, m.cases[i]); });
    write_file(out / "manifest.json", dump_json(json(m)));
    return m;
}

}  // namespace nodulelink
