#pragma once

// Caliper mark detection by normalized cross-correlation against a caliper template,
// followed by the right-side crop, score threshold and non-maximum suppression.
//
// The correlation numerator sum(I * T) is evaluated from summed-area tables: template
// pixels are grouped by value and each group is decomposed into rectangles, so a
// window costs O(#rectangles) regardless of template size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nodulelink/raster.hpp"
#include "nodulelink/types.hpp"

namespace nodulelink {

inline constexpr int kCaliperSize = 15;
inline constexpr int kCaliperStroke = 3;

/// The '+' mark sonographers place at measurement endpoints: a 3-px-thick white cross
/// on a black 15x15 square. The renderer stamps exactly this raster.
inline const Raster& caliper_template() {
    static const Raster tmpl = [] {
        Raster t(kCaliperSize, kCaliperSize, 0);
        const int lo = (kCaliperSize - kCaliperStroke) / 2;
        const int hi = lo + kCaliperStroke;
        for (int y = 0; y < kCaliperSize; ++y) {
            for (int x = 0; x < kCaliperSize; ++x) {
                if ((x >= lo && x < hi) || (y >= lo && y < hi)) t.at(x, y) = 255;
            }
        }
        return t;
    }();
    return tmpl;
}

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] double center_x() const { return x + (w - 1) / 2.0; }
    [[nodiscard]] double center_y() const { return y + (h - 1) / 2.0; }
    bool operator==(const BoundingBox&) const = default;
};

struct CaliperHit {
    BoundingBox bbox;
    double score = 0.0;  // in [0, 1]
};

struct CaliperConfig {
    double crop_ratio = 0.87;
    double score_threshold = 0.945;
    Raster tmpl = caliper_template();
    int min_center_separation = kCaliperSize;

    void validate() const {
        if (!(crop_ratio > 0.0 && crop_ratio <= 1.0)) throw ValidationError("crop_ratio must be in (0, 1]");
        if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
            throw ValidationError("score_threshold must be in [0, 1]");
        }
        if (tmpl.empty()) throw ValidationError("caliper template is empty");
        if (min_center_separation < 0) throw ValidationError("min_center_separation must be >= 0");
    }
};

/// Width of the region kept after removing the right (1 - crop_ratio) fraction.
inline int cropped_width(int width, double crop_ratio) {
    return std::clamp(static_cast<int>(std::floor(width * crop_ratio + 1e-9)), 0, width);
}

/// Summed-area tables of an image and of its squared pixels.
class IntegralImage {
public:
    explicit IntegralImage(const Raster& img, int width_limit)
        : w_(std::min(width_limit, img.width())), h_(img.height()),
          sum_(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0),
          sq_(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0) {
        for (int y = 0; y < h_; ++y) {
            std::int64_t row_sum = 0, row_sq = 0;
            auto src = img.row(y);
            for (int x = 0; x < w_; ++x) {
                const std::int64_t v = src[static_cast<std::size_t>(x)];
                row_sum += v;
                row_sq += v * v;
                sum_[idx(x + 1, y + 1)] = sum_[idx(x + 1, y)] + row_sum;
                sq_[idx(x + 1, y + 1)] = sq_[idx(x + 1, y)] + row_sq;
            }
        }
    }

    [[nodiscard]] int width() const { return w_; }
    [[nodiscard]] int height() const { return h_; }

    [[nodiscard]] std::int64_t sum(int x, int y, int w, int h) const { return rect(sum_, x, y, w, h); }
    [[nodiscard]] std::int64_t sum_sq(int x, int y, int w, int h) const { return rect(sq_, x, y, w, h); }

private:
    [[nodiscard]] std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) + static_cast<std::size_t>(x);
    }
    [[nodiscard]] std::int64_t rect(const std::vector<std::int64_t>& t, int x, int y, int w, int h) const {
        return t[idx(x + w, y + h)] - t[idx(x, y + h)] - t[idx(x + w, y)] + t[idx(x, y)];
    }

    int w_;
    int h_;
    std::vector<std::int64_t> sum_;
    std::vector<std::int64_t> sq_;
};

namespace detail {

struct WeightedRect {
    std::int64_t value;
    BoundingBox box;
};

/// Decomposes non-zero template pixels into same-valued rectangles: horizontal runs,
/// merged downward while consecutive rows repeat the same run.
inline std::vector<WeightedRect> decompose_template(const Raster& t) {
    std::vector<WeightedRect> done;
    std::vector<WeightedRect> open;
    for (int y = 0; y < t.height(); ++y) {
        std::vector<WeightedRect> runs;
        for (int x = 0; x < t.width();) {
            const auto v = t.at(x, y);
            int end = x + 1;
            while (end < t.width() && t.at(end, y) == v) ++end;
            if (v != 0) runs.push_back({v, {x, y, end - x, 1}});
            x = end;
        }
        std::vector<WeightedRect> next_open;
        for (auto& run : runs) {
            auto it = std::find_if(open.begin(), open.end(), [&](const WeightedRect& r) {
                return r.value == run.value && r.box.x == run.box.x && r.box.w == run.box.w;
            });
            if (it != open.end()) {
                WeightedRect grown = *it;
                grown.box.h += 1;
                next_open.push_back(grown);
                open.erase(it);
            } else {
                next_open.push_back(run);
            }
        }
        done.insert(done.end(), open.begin(), open.end());
        open = std::move(next_open);
    }
    done.insert(done.end(), open.begin(), open.end());
    return done;
}

}  // namespace detail

/// Dense NCC evaluator for one template over one (already cropped-width) image.
class CorrelationScorer {
public:
    CorrelationScorer(const Raster& image, const Raster& tmpl, int width_limit)
        : integral_(image, width_limit), tw_(tmpl.width()), th_(tmpl.height()),
          rects_(detail::decompose_template(tmpl)) {
        const auto n = static_cast<std::int64_t>(tw_) * th_;
        std::int64_t st = 0, st2 = 0;
        for (auto v : tmpl.pixels()) {
            st += v;
            st2 += static_cast<std::int64_t>(v) * v;
        }
        n_ = n;
        sum_t_ = st;
        var_t_ = static_cast<double>(n * st2 - st * st);
    }

    [[nodiscard]] int positions_x() const { return integral_.width() - tw_ + 1; }
    [[nodiscard]] int positions_y() const { return integral_.height() - th_ + 1; }

    /// Pearson correlation between the template and the window whose top-left is (x, y),
    /// clamped to [0, 1]. Flat windows or flat templates score 0.
    [[nodiscard]] double score(int x, int y) const {
        if (var_t_ <= 0.0) return 0.0;
        std::int64_t cross = 0;
        for (const auto& r : rects_) cross += r.value * integral_.sum(x + r.box.x, y + r.box.y, r.box.w, r.box.h);
        const std::int64_t s = integral_.sum(x, y, tw_, th_);
        const std::int64_t num = n_ * cross - s * sum_t_;
        if (num <= 0) return 0.0;
        const std::int64_t var_i = n_ * integral_.sum_sq(x, y, tw_, th_) - s * s;
        if (var_i <= 0) return 0.0;
        const double r = static_cast<double>(num) / std::sqrt(static_cast<double>(var_i) * var_t_);
        return std::clamp(r, 0.0, 1.0);
    }

private:
    IntegralImage integral_;
    int tw_;
    int th_;
    std::vector<detail::WeightedRect> rects_;
    std::int64_t n_ = 0;
    std::int64_t sum_t_ = 0;
    double var_t_ = 0.0;
};

/// Keeps hits at or above the threshold, then greedily suppresses any hit whose center is
/// closer than min_separation to a stronger kept hit. Output sorted by descending score.
inline std::vector<CaliperHit> suppress_and_threshold(std::vector<CaliperHit> hits, double threshold,
                                                      int min_separation) {
    std::erase_if(hits, [&](const CaliperHit& h) { return h.score < threshold; });
    std::stable_sort(hits.begin(), hits.end(), [](const CaliperHit& a, const CaliperHit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        return a.bbox.x < b.bbox.x;
    });
    std::vector<CaliperHit> kept;
    const double min_d2 = static_cast<double>(min_separation) * min_separation;
    for (const auto& h : hits) {
        const bool clear = std::none_of(kept.begin(), kept.end(), [&](const CaliperHit& k) {
            const double dx = k.bbox.center_x() - h.bbox.center_x();
            const double dy = k.bbox.center_y() - h.bbox.center_y();
            return dx * dx + dy * dy < min_d2;
        });
        if (clear) kept.push_back(h);
    }
    return kept;
}

/// Drops scored regions lying (even partly) in the cropped-out right side of an image of
/// `image_width`, then thresholds and suppresses.
inline std::vector<CaliperHit> filter_caliper_regions(std::vector<CaliperHit> regions, int image_width,
                                                      const CaliperConfig& cfg) {
    const int keep_w = cropped_width(image_width, cfg.crop_ratio);
    std::erase_if(regions, [&](const CaliperHit& h) { return h.bbox.x + h.bbox.w > keep_w; });
    return suppress_and_threshold(std::move(regions), cfg.score_threshold, cfg.min_center_separation);
}

inline std::vector<CaliperHit> detect_calipers(const Raster& image, const CaliperConfig& cfg = {}) {
    cfg.validate();
    const int tw = cfg.tmpl.width();
    const int th = cfg.tmpl.height();
    if (tw > image.width() || th > image.height()) throw ValidationError("caliper template larger than image");
    const int keep_w = cropped_width(image.width(), cfg.crop_ratio);
    if (keep_w < tw) return {};

    CorrelationScorer scorer(image, cfg.tmpl, keep_w);
    std::vector<CaliperHit> candidates;
    for (int y = 0; y < scorer.positions_y(); ++y) {
        for (int x = 0; x < scorer.positions_x(); ++x) {
            const double s = scorer.score(x, y);
            if (s >= cfg.score_threshold) candidates.push_back({{x, y, tw, th}, s});
        }
    }
    return suppress_and_threshold(std::move(candidates), cfg.score_threshold, cfg.min_center_separation);
}

/// Loads an image's pixels; throws (any exception) when the image cannot be decoded.
using ImageProvider = std::function<Raster(const ImageRef&)>;

struct CandidateImage {
    ImageRef ref;
    int caliper_count = 0;
};

/// Caliper count for every decodable image of a study, in study order.
inline std::vector<CandidateImage> count_study_calipers(const Study& study, const ImageProvider& load,
                                                        const CaliperConfig& cfg, Diagnostics& diag) {
    std::vector<CandidateImage> out;
    for (const auto& id : study.image_ids) {
        ImageRef ref{study.study_id, id};
        Raster img;
        try {
            img = load(ref);
        } catch (const std::exception& e) {
            diag.note("skipped undecodable image " + study.study_id + "/" + id + ": " + e.what());
            continue;
        }
        out.push_back({ref, static_cast<int>(detect_calipers(img, cfg).size())});
    }
    return out;
}

/// Images carrying exactly 2 or 4 calipers (a one- or two-distance nodule measurement).
inline std::vector<CandidateImage> select_candidate_images(const Study& study, const ImageProvider& load,
                                                           const CaliperConfig& cfg, Diagnostics& diag) {
    auto counted = count_study_calipers(study, load, cfg, diag);
    std::erase_if(counted, [](const CandidateImage& c) { return c.caliper_count != 2 && c.caliper_count != 4; });
    return counted;
}

}  // namespace nodulelink
