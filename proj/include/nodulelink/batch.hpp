#pragma once

// Running the pipeline over a whole corpus, from disk or from generated specs.
//
// On-disk layout of one case:
//   <corpus>/<case_id>/pathology.txt
//   <corpus>/<case_id>/radiology.txt            (optional)
//   <corpus>/<case_id>/studies/<study_id>/meta.json
//   <corpus>/<case_id>/studies/<study_id>/<image_id>.pgm

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nodulelink/corpus.hpp"
#include "nodulelink/parallel.hpp"
#include "nodulelink/pipeline.hpp"
#include "nodulelink/raster.hpp"

namespace nodulelink {

namespace fs = std::filesystem;

inline CaseInputs load_case(const fs::path& case_dir) {
    if (!fs::is_directory(case_dir)) throw IoError("case directory not found: " + case_dir.string());
    CaseInputs in;
    in.case_id = case_dir.filename().string();
    in.pathology_text = read_file(case_dir / "pathology.txt");
    if (fs::exists(case_dir / "radiology.txt")) in.radiology_text = read_file(case_dir / "radiology.txt");
    const auto studies_dir = case_dir / "studies";
    if (fs::is_directory(studies_dir)) {
        for (const auto& entry : fs::directory_iterator(studies_dir)) {
            if (!entry.is_directory()) continue;
            const auto meta = entry.path() / "meta.json";
            try {
                in.studies.push_back(parse_json(read_file(meta), meta.string()).get<Study>());
            } catch (const json::exception& e) {
                throw ValidationError(meta.string() + ": " + e.what());
            }
        }
    }
    std::sort(in.studies.begin(), in.studies.end(),
              [](const Study& a, const Study& b) { return a.study_id < b.study_id; });
    in.images = [studies_dir](const ImageRef& ref) {
        return read_pgm(studies_dir / ref.study_id / (ref.image_id + ".pgm"));
    };
    return in;
}

/// Case directories (those holding a pathology.txt) under a corpus root, sorted by name.
inline std::vector<fs::path> list_case_dirs(const fs::path& corpus_dir) {
    if (!fs::is_directory(corpus_dir)) throw IoError("corpus directory not found: " + corpus_dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "pathology.txt")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Same inputs write_case would put on disk, with frames rendered on demand.
inline CaseInputs inputs_from_spec(const CaseSpec& c, const GlyphFont& font = default_font()) {
    CaseInputs in;
    in.case_id = c.case_id;
    in.pathology_text = write_pathology_report(c);
    const bool has_diag = std::any_of(c.studies.begin(), c.studies.end(),
                                      [](const StudySpec& s) { return s.kind == StudyKind::diagnostic; });
    if (has_diag) in.radiology_text = write_radiology_report(c);
    for (const auto& s : c.studies) in.studies.push_back(to_study(s, c.site));
    std::sort(in.studies.begin(), in.studies.end(),
              [](const Study& a, const Study& b) { return a.study_id < b.study_id; });
    const auto style = site_style(c.site);
    in.images = [&c, &font, style](const ImageRef& ref) {
        const auto* spec = find_image(c, ref);
        if (!spec) throw IoError("no image " + ref.study_id + "/" + ref.image_id + " in case " + c.case_id);
        return render_image(*spec, font, style);
    };
    return in;
}

inline std::vector<CaseResult> run_cases(const std::vector<CaseSpec>& cases, const PipelineConfig& cfg = {},
                                         int parallelism = 1) {
    std::vector<CaseResult> out(cases.size());
    parallel_for(cases.size(), parallelism, [&](std::size_t i) { out[i] = run_case(inputs_from_spec(cases[i]), cfg); });
    std::sort(out.begin(), out.end(), [](const CaseResult& a, const CaseResult& b) { return a.case_id < b.case_id; });
    return out;
}

inline std::vector<CaseResult> run_corpus(const fs::path& corpus_dir, const PipelineConfig& cfg = {},
                                          int parallelism = 1) {
    cfg.validate();
    const auto dirs = list_case_dirs(corpus_dir);
    std::vector<CaseResult> out(dirs.size());
    parallel_for(dirs.size(), parallelism, [&](std::size_t i) { out[i] = run_case(load_case(dirs[i]), cfg); });
    std::sort(out.begin(), out.end(), [](const CaseResult& a, const CaseResult& b) { return a.case_id < b.case_id; });
    return out;
}

/// One compact JSON object per line, in case_id order.
inline std::string results_jsonl(const std::vector<CaseResult>& results) {
    std::string out;
    for (const auto& r : results) out += json(r).dump() + "\n";
    return out;
}

inline std::string diagnostics_log(const std::vector<CaseResult>& results) {
    std::string out;
    for (const auto& r : results) {
        for (const auto& n : r.diagnostics) out += r.case_id + ": " + n + "\n";
    }
    return out;
}

inline fs::path diagnostics_path(const fs::path& results_path) {
    return fs::path(results_path.string() + ".diagnostics.log");
}

inline void write_results(const fs::path& path, const std::vector<CaseResult>& results) {
    write_file(path, results_jsonl(results));
    write_file(diagnostics_path(path), diagnostics_log(results));
}

inline std::vector<CaseResult> parse_results(std::string_view text, const std::string& what = "results") {
    std::vector<CaseResult> out;
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto where = what + " line " + std::to_string(line_no);
        try {
            out.push_back(parse_json(line, where).get<CaseResult>());
        } catch (const json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<CaseResult> load_results(const fs::path& path) { return parse_results(read_file(path), path.string()); }

}  // namespace nodulelink
