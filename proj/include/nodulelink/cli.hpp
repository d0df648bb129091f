#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nodulelink/batch.hpp"
#include "nodulelink/corpus.hpp"
#include "nodulelink/metrics.hpp"
#include "nodulelink/pipeline.hpp"

namespace nodulelink {

inline constexpr const char* kCorpusEnvVar = "NODULELINK_CORPUS";

struct RunConfig {
    std::string corpus_dir;
    std::string output_path;
    CaliperConfig caliper;
    MatchWindow window;
    double tol_cm = 0.05;
    int parallelism = 1;

    void validate() const {
        caliper.validate();
        window.validate();
        if (!(tol_cm >= 0.0)) throw ValidationError("tol_cm must be >= 0");
        if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    }
    [[nodiscard]] PipelineConfig pipeline() const { return {caliper, window, tol_cm}; }
};

inline void to_json(json& j, const RunConfig& c) {
    j = json{{"corpus_dir", c.corpus_dir},
             {"output_path", c.output_path},
             {"caliper",
              {{"crop_ratio", c.caliper.crop_ratio},
               {"score_threshold", c.caliper.score_threshold},
               {"min_center_separation", c.caliper.min_center_separation}}},
             {"window", {{"max_gap_days", c.window.max_gap_days}}},
             {"tol_cm", c.tol_cm},
             {"parallelism", c.parallelism}};
}

namespace detail {

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw ValidationError(what + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ValidationError("unknown " + what + " key '" + k + "'");
        }
    }
}

}  // namespace detail

/// Run config from JSON text; absent keys take defaults, unknown keys are rejected.
inline RunConfig parse_run_config(std::string_view text) {
    const auto j = parse_json(text, "run config");
    detail::reject_unknown_keys(j, {"corpus_dir", "output_path", "caliper", "window", "tol_cm", "parallelism"}, "run config");
    RunConfig c;
    try {
        c.corpus_dir = j.value("corpus_dir", c.corpus_dir);
        c.output_path = j.value("output_path", c.output_path);
        if (j.contains("caliper")) {
            const auto& k = j.at("caliper");
            detail::reject_unknown_keys(k, {"crop_ratio", "score_threshold", "min_center_separation"}, "caliper");
            c.caliper.crop_ratio = k.value("crop_ratio", c.caliper.crop_ratio);
            c.caliper.score_threshold = k.value("score_threshold", c.caliper.score_threshold);
            c.caliper.min_center_separation = k.value("min_center_separation", c.caliper.min_center_separation);
        }
        if (j.contains("window")) {
            const auto& w = j.at("window");
            detail::reject_unknown_keys(w, {"max_gap_days"}, "window");
            c.window.max_gap_days = w.value("max_gap_days", c.window.max_gap_days);
        }
        c.tol_cm = j.value("tol_cm", c.tol_cm);
        c.parallelism = j.value("parallelism", c.parallelism);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

/// `report.json` -> `report.table1.csv` and so on.
inline std::filesystem::path table_path(const std::filesystem::path& report, int table) {
    auto stem = report;
    stem.replace_extension();
    return std::filesystem::path(stem.string() + ".table" + std::to_string(table) + ".csv");
}

inline void write_eval_outputs(const std::filesystem::path& report_path, const EvalReport& rep) {
    write_file(report_path, dump_json(json(rep)));
    write_file(table_path(report_path, 1), table1_csv(rep));
    write_file(table_path(report_path, 2), table2_csv(rep));
    write_file(table_path(report_path, 3), table3_csv(rep.incorrect));
}

namespace detail {

inline void emit(const json& j, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << dump_json(j);
    } else {
        write_file(out_path, dump_json(j));
    }
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Links thyroid pathology results to key ultrasound image pairs.", "nodulelink"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    std::optional<std::uint64_t> gen_seed;
    std::optional<int> gen_cases;
    int gen_parallelism = 1;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus with ground-truth manifest");
    gen->add_option("--config", gen_config, "Generator config JSON");
    gen->add_option("--seed", gen_seed, "Random seed (overrides the config's seed)");
    gen->add_option("--cases", gen_cases, "Number of cases (overrides the config)");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--parallelism", gen_parallelism, "Worker threads")->check(CLI::PositiveNumber);

    std::string run_config_path, run_corpus_dir, run_out;
    std::optional<int> run_parallelism, run_max_gap;
    std::optional<double> run_tol, run_threshold, run_crop;
    auto* run = app.add_subcommand("run", "Run the pipeline over a corpus directory");
    run->add_option("--config", run_config_path, "Run config JSON");
    run->add_option("--corpus", run_corpus_dir, "Corpus directory")->envname(kCorpusEnvVar);
    run->add_option("--out", run_out, "Results file (JSON lines)");
    run->add_option("--parallelism", run_parallelism, "Worker threads");
    run->add_option("--tol-cm", run_tol, "Measurement tolerance in cm");
    run->add_option("--threshold", run_threshold, "Caliper score threshold");
    run->add_option("--crop-ratio", run_crop, "Fraction of image width searched for calipers");
    run->add_option("--max-gap-days", run_max_gap, "Study matching window in days");

    std::string eval_results, eval_manifest, eval_out;
    auto* eval = app.add_subcommand("eval", "Score results against a manifest");
    eval->add_option("--results", eval_results, "Results file from run")->required();
    eval->add_option("--manifest", eval_manifest, "Corpus manifest.json")->required();
    eval->add_option("--out", eval_out, "Report JSON; CSV tables are written beside it")->required();

    std::string path_file, path_out;
    auto* parse_path = app.add_subcommand("parse-path", "Extract nodule records from a pathology report");
    parse_path->add_option("file", path_file, "Report text file")->required();
    parse_path->add_option("--out", path_out, "Write JSON lines here instead of stdout");

    std::string rad_file, rad_side, rad_out;
    auto* parse_rad = app.add_subcommand("parse-rad", "Extract nodule measurements from a radiology report");
    parse_rad->add_option("file", rad_file, "Report text file")->required();
    parse_rad->add_option("--side", rad_side, "Only nodules on this side (left, right, isthmus)");
    parse_rad->add_option("--out", rad_out, "Write JSON here instead of stdout");

    std::string detect_file, detect_out;
    std::optional<double> detect_threshold, detect_crop;
    auto* detect = app.add_subcommand("detect", "Detect calipers in a PGM image");
    detect->add_option("file", detect_file, "PGM image")->required();
    detect->add_option("--threshold", detect_threshold, "Score threshold");
    detect->add_option("--crop-ratio", detect_crop, "Fraction of width searched");
    detect->add_option("--out", detect_out, "Write JSON here instead of stdout");

    std::string ocr_file, ocr_out;
    auto* ocr = app.add_subcommand("ocr", "Read banner and measurement text from a PGM image");
    ocr->add_option("file", ocr_file, "PGM image")->required();
    ocr->add_option("--out", ocr_out, "Write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*gen) {
            GeneratorConfig cfg;
            std::uint64_t seed = 0;
            if (!gen_config.empty()) {
                const auto text = read_file(gen_config);
                cfg = parse_generator_config(text);
                const auto j = parse_json(text, gen_config);
                if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
            }
            if (gen_seed) seed = *gen_seed;
            if (gen_cases) cfg.n_cases = *gen_cases;
            const auto m = gen_corpus(cfg, seed, gen_out, gen_parallelism);
            out << "generated " << m.cases.size() << " cases in " << gen_out << "\n";
        } else if (*run) {
            RunConfig cfg = run_config_path.empty() ? RunConfig{} : parse_run_config(read_file(run_config_path));
            if (!run_corpus_dir.empty()) cfg.corpus_dir = run_corpus_dir;
            if (!run_out.empty()) cfg.output_path = run_out;
            if (run_parallelism) cfg.parallelism = *run_parallelism;
            if (run_tol) cfg.tol_cm = *run_tol;
            if (run_threshold) cfg.caliper.score_threshold = *run_threshold;
            if (run_crop) cfg.caliper.crop_ratio = *run_crop;
            if (run_max_gap) cfg.window.max_gap_days = *run_max_gap;
            if (cfg.corpus_dir.empty()) throw ValidationError(std::string("no corpus: pass --corpus or set ") + kCorpusEnvVar);
            if (cfg.output_path.empty()) throw ValidationError("no output path: pass --out");
            cfg.validate();
            const auto results = run_corpus(cfg.corpus_dir, cfg.pipeline(), cfg.parallelism);
            write_results(cfg.output_path, results);
            out << "processed " << results.size() << " cases into " << cfg.output_path << "\n";
        } else if (*eval) {
            const auto rep = evaluate(load_results(eval_results), load_manifest(eval_manifest));
            write_eval_outputs(eval_out, rep);
            out << "yield " << rep.n_yield() << "/" << rep.n_truth_nodules() << " ("
                << percent_text(rep.n_yield(), rep.n_truth_nodules()) << "), correct " << rep.n_correct() << " ("
                << percent_text(rep.n_correct(), rep.n_yield()) << ")\n";
        } else if (*parse_path) {
            const auto parsed = parse_pathology(read_file(path_file));
            std::string lines;
            for (const auto& r : parsed.records) lines += json(r).dump() + "\n";
            for (const auto& n : parsed.diagnostics.notes) err << "note: " << n << "\n";
            if (path_out.empty()) {
                out << lines;
            } else {
                write_file(path_out, lines);
            }
        } else if (*parse_rad) {
            const auto text = read_file(rad_file);
            auto parsed = parse_radiology(text);
            if (!rad_side.empty()) {
                const auto side = parse_laterality(rad_side);
                std::erase_if(parsed.nodules, [side](const ReportNodule& n) { return n.laterality != side; });
            }
            detail::emit(json{{"nodules", parsed.nodules}, {"diagnostics", parsed.diagnostics.notes}}, rad_out, out);
        } else if (*detect) {
            CaliperConfig cfg;
            if (detect_threshold) cfg.score_threshold = *detect_threshold;
            if (detect_crop) cfg.crop_ratio = *detect_crop;
            const auto hits = detect_calipers(read_pgm(detect_file), cfg);
            detail::emit(json{{"count", hits.size()}, {"hits", hits}}, detect_out, out);
        } else if (*ocr) {
            const auto img = read_pgm(ocr_file);
            const auto banner = read_banner(img);
            const auto ms = read_image_measurements(img);
            detail::emit(json{{"banner", banner},
                              {"measurements_cm", ms.values_cm},
                              {"text", ocr_text(crop_banner(img, banner.config_index))}},
                         ocr_out, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace nodulelink
