// Acceptance checks. Prints one PASS/FAIL line per criterion (details indented beneath
// failures) and exits non-zero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <thread>

#include "nodulelink/batch.hpp"
#include "nodulelink/cli.hpp"
#include "nodulelink/metrics.hpp"
#include "support.hpp"

using namespace nodulelink;
namespace fs = std::filesystem;

namespace {

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

class Check {
public:
    template <class A, class B>
    void eq(const A& got, const B& want, const std::string& what) {
        if (!(got == want)) {
            std::ostringstream os;
            os << what << ": got " << show(got) << ", want " << show(want);
            failures_.push_back(os.str());
        }
    }
    void truth(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& what) { notes_.push_back(what); }
    [[nodiscard]] const std::vector<std::string>& failures() const { return failures_; }
    [[nodiscard]] const std::vector<std::string>& notes() const { return notes_; }

private:
    template <class T>
    static std::string show(const T& v) {
        if constexpr (is_optional<T>::value) {
            return v ? show(*v) : "absent";
        } else if constexpr (std::is_arithmetic_v<T>) {
            return std::to_string(v);
        } else if constexpr (std::is_convertible_v<T, std::string>) {
            return "'" + std::string(v) + "'";
        } else {
            return json(v).dump();
        }
    }
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------------------
// 1. Metrics fixture fidelity

void table_fixtures(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    {
        const auto f = nodulelink::testing::reference_counts_fixture();
        const auto rep = evaluate(f.results, f.manifest);
        struct Row {
            std::string site;
            long truth, yield, correct;
            int yr, acc;
        };
        const std::vector<Row> rows{{"Site1", 70, 50, 45, 71, 90},
                                    {"Site2", 20, 11, 5, 55, 45},
                                    {"Site3", 13, 4, 4, 31, 100}};
        for (const auto& r : rows) {
            const auto& s = rep.by_site.at(r.site);
            c.eq(s.truth, r.truth, "table 1 " + r.site + " truth");
            c.eq(s.yield, r.yield, "table 1 " + r.site + " yields");
            c.eq(s.correct, r.correct, "table 1 " + r.site + " correct");
            c.eq(percent(s.yield, s.truth), std::optional<int>(r.yr), "table 1 " + r.site + " yield rate %");
            c.eq(percent(s.correct, s.yield), std::optional<int>(r.acc), "table 1 " + r.site + " accuracy %");
        }
        c.eq(rep.n_truth_nodules(), 103L, "table 1 all truth");
        c.eq(rep.n_yield(), 65L, "table 1 all yields");
        c.eq(rep.n_correct(), 54L, "table 1 all correct");
        c.eq(percent(rep.n_yield(), rep.n_truth_nodules()), std::optional<int>(63), "table 1 all yield rate %");
        c.eq(percent(rep.n_correct(), rep.n_yield()), std::optional<int>(83), "table 1 all accuracy %");

        const long yields[] = {21, 51, 59, 65};
        const long correct[] = {20, 44, 51, 54};
        const int yr[] = {20, 50, 56, 63};
        const int acc[] = {95, 86, 86, 83};
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& p = rep.by_point.at(i);
            const std::string where = "table 2 (" + std::to_string(p.point.stage) + ",M" + std::to_string(p.point.module) + ")";
            c.eq(p.cumulative_yield, yields[i], where + " yield");
            c.eq(p.cumulative_correct, correct[i], where + " correct");
            c.eq(percent(p.cumulative_yield, rep.n_truth_nodules()), std::optional<int>(yr[i]), where + " yield rate %");
            c.eq(percent(p.cumulative_correct, p.cumulative_yield), std::optional<int>(acc[i]), where + " accuracy %");
        }
    }
    {
        const auto f = nodulelink::testing::reference_counts_fixture(1);
        const auto t = incorrect_by_site_stage(f.results, f.manifest);
        const std::vector<std::tuple<std::string, long, int>> totals{{"Site1", 5, 10}, {"Site2", 6, 60}, {"Site3", 0, 0}};
        for (const auto& [site, n, pct] : totals) {
            c.eq(t.site_total(site), n, "table 3 " + site + " incorrect");
            c.eq(t.site_incorrect_percent(site), std::optional<int>(pct), "table 3 " + site + " incorrect %");
        }
    }
    const double secs = seconds_since(t0);
    c.truth(secs < 1.0, "runtime " + std::to_string(secs) + " s >= 1 s");
}

// ---------------------------------------------------------------------------------------
// 2. Worked report and image examples

void worked_examples(Check& c) {
    using nodulelink::testing::fixture;
    {
        const auto p = parse_pathology(fixture("pathology_single_malignant.txt")).records;
        c.eq(p.size(), 1u, "example 1 record count");
        if (p.size() == 1) {
            c.eq(p[0].laterality, Laterality::right, "example 1 laterality");
            c.eq(p[0].location, std::optional<std::string>("inferior"), "example 1 location");
            c.eq(p[0].label, std::optional<std::string>("#1"), "example 1 label");
            c.eq(p[0].diagnosis, Diagnosis::malignant, "example 1 diagnosis");
        }
        const auto q = parse_pathology(fixture("pathology_two_benign.txt")).records;
        c.eq(q.size(), 2u, "example 2 record count");
        if (q.size() == 2) {
            c.eq(q[0].laterality, Laterality::isthmus, "example 2 first laterality");
            c.eq(q[1].laterality, Laterality::right, "example 2 second laterality");
            c.eq(q[0].diagnosis, Diagnosis::benign, "example 2 first diagnosis");
            c.eq(q[1].diagnosis, Diagnosis::benign, "example 2 second diagnosis");
        }
    }
    {
        std::vector<CaliperHit> regions{{{100, 100, 15, 15}, 1.00}, {{300, 200, 15, 15}, 1.00}, {{500, 300, 15, 15}, 0.60}};
        c.eq(filter_caliper_regions(regions, 800, CaliperConfig{}).size(), 2u, "caliper scores {1.00, 1.00, 0.60} hit count");
        ImageSpec s;
        s.image_id = "fig";
        s.calipers = {{200, 150}, {320, 150}};
        s.distractors = {{450, 300, 0.60}};
        s.texture_seed = 3;
        c.eq(detect_calipers(render_image(s)).size(), 2u, "rendered two calipers plus 0.60 distractor hit count");
    }
    {
        const auto b = parse_banner("TRANS RT MID #1");
        c.eq(b.view, View::transverse, "banner view");
        c.eq(b.laterality, std::optional<Laterality>(Laterality::right), "banner laterality");
        c.eq(b.location, std::optional<std::string>("mid"), "banner location");
        c.eq(b.label, std::optional<std::string>("#1"), "banner label");
        ImageSpec s;
        s.image_id = "banner";
        s.banner_text = "TRANS RT MID #1";
        const auto r = read_banner(render_image(s));
        c.eq(r.populated_fields(), 4, "rendered banner populated fields");
        c.eq(r.location, std::optional<std::string>("mid"), "rendered banner location");
    }
    {
        const auto report = fixture("radiology_bilateral.txt");
        const auto right = extract_nodule_measurements(report, Laterality::right);
        const auto left = extract_nodule_measurements(report, Laterality::left);
        c.eq(right.size(), 1u, "right nodule count");
        c.eq(left.size(), 1u, "left nodule count");
        if (right.size() == 1) c.eq(right[0].dims_cm, std::vector<double>{1.6, 0.7, 1.1}, "right dims");
        if (left.size() == 1) c.eq(left[0].dims_cm, std::vector<double>{7.0, 4.1, 5.1}, "left dims");
        const std::vector<std::vector<double>> lobes{{4.2, 2.1, 2.1}, {5.9, 9.0, 4.4}, {0.4}};
        for (auto side : {Laterality::right, Laterality::left, Laterality::isthmus}) {
            for (const auto& n : extract_nodule_measurements(report, side)) {
                c.truth(std::find(lobes.begin(), lobes.end(), n.dims_cm) == lobes.end(), "lobe measurement returned");
            }
        }
        c.eq(count_nodules_on_side(report, Laterality::isthmus), 0, "isthmus nodule count");
    }
}

// ---------------------------------------------------------------------------------------
// 3 and 4. Oracle corpus runs

GeneratorConfig corpus_config(bool noisy) {
    GeneratorConfig cfg;
    cfg.n_cases = 200;
    if (noisy) {
        cfg.noise.banner_dropout_prob = 0.3;
        cfg.noise.distractor_caliper_prob = 0.3;
        cfg.noise.site_style_variation = true;
    }
    return cfg;
}

EvalReport run_and_score(const GeneratorConfig& cfg, std::uint64_t seed, int parallelism) {
    CorpusManifest m{cfg, seed, generate_case_specs(cfg, seed)};
    return evaluate(run_cases(m.cases, PipelineConfig{}, parallelism), m);
}

void clean_oracle(Check& c) {
    const auto cfg = corpus_config(false);
    CorpusManifest m{cfg, 42, generate_case_specs(cfg, 42)};
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = run_cases(m.cases, PipelineConfig{}, 1);
    const double secs = seconds_since(t0);
    const auto rep = evaluate(results, m);
    long pairs_off = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& truth = m.cases[i].nodules;
        for (const auto& o : results[i].per_nodule) {
            if (!o.yielded) continue;
            const bool any = std::any_of(truth.begin(), truth.end(), [&](const NoduleTruth& t) { return same_pair(*o.images, t.key_images); });
            pairs_off += !any;
        }
    }
    c.note("yield " + std::to_string(rep.n_yield()) + "/" + std::to_string(rep.n_truth_nodules()) + ", correct " +
           std::to_string(rep.n_correct()) + ", " + std::to_string(secs) + " s");
    c.truth(rep.accuracy() && *rep.accuracy() == 1.0, "accuracy below 100%: " + std::to_string(rep.accuracy().value_or(0.0)));
    c.truth(rep.yield_rate() >= 0.95, "yield rate " + std::to_string(rep.yield_rate()) + " < 0.95");
    c.eq(pairs_off, 0L, "yields whose pair is not a manifest key pair");
    c.truth(secs < 60.0, "runtime " + std::to_string(secs) + " s >= 60 s");
}

void noisy_oracle(Check& c) {
    const int threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto clean = run_and_score(corpus_config(false), seed, threads);
        const auto noisy = run_and_score(corpus_config(true), seed, threads);
        const double acc = noisy.accuracy().value_or(0.0);
        const double drop = 100.0 * (clean.yield_rate() - noisy.yield_rate());
        char buf[160];
        std::snprintf(buf, sizeof buf, "seed %llu: clean yield %.1f%%, noisy yield %.1f%% (drop %.1f pp), noisy accuracy %.1f%%",
                      static_cast<unsigned long long>(seed), 100.0 * clean.yield_rate(), 100.0 * noisy.yield_rate(), drop,
                      100.0 * acc);
        c.note(buf);
        c.truth(acc >= 0.85, std::string(buf) + ": accuracy < 85%");
        c.truth(drop >= 15.0, std::string(buf) + ": yield drop < 15 pp");
    }
}

// ---------------------------------------------------------------------------------------
// 5. Property suites

void property_suites(Check& c) {
    const std::string cmd = std::string("\"") + NODULELINK_PROPERTY_BIN + "\" 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        c.truth(false, "cannot start " + std::string(NODULELINK_PROPERTY_BIN));
        return;
    }
    std::string output;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    const int status = ::pclose(pipe);
    c.eq(status, 0, "property binary exit status");

    std::map<std::string, long> counts;
    static const std::regex kLine(R"(\[instances\] (\S+) (\d+))");
    for (auto it = std::sregex_iterator(output.begin(), output.end(), kLine); it != std::sregex_iterator(); ++it) {
        counts[(*it)[1].str()] = std::stol((*it)[2].str());
    }
    for (const auto* suite : {"study_matcher", "caliper_monotonicity", "caliper_stamp_recovery", "ocr_round_trip",
                              "banner_match_symmetry", "metrics_slice_consistency"}) {
        auto it = counts.find(suite);
        c.truth(it != counts.end(), std::string("suite ") + suite + " did not report");
        if (it != counts.end()) c.truth(it->second >= 100, std::string("suite ") + suite + " ran " + std::to_string(it->second) + " < 100 instances");
    }
    c.note(std::to_string(counts.size()) + " suites reported");
}

// ---------------------------------------------------------------------------------------
// 6. Determinism

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "nodulelink");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

void determinism(Check& c) {
    nodulelink::testing::TempDir tmp("acceptance_det");
    for (const std::string run : {"a", "b"}) {
        const auto dir = tmp.path() / run;
        c.eq(cli({"gen", "--cases", "12", "--seed", "7", "--out", (dir / "corpus").string()}), 0, "gen " + run);
        c.eq(cli({"run", "--corpus", (dir / "corpus").string(), "--out", (dir / "out" / "results.jsonl").string(), "--parallelism", "1"}), 0,
             "run " + run);
        c.eq(cli({"eval", "--results", (dir / "out" / "results.jsonl").string(), "--manifest", (dir / "corpus" / "manifest.json").string(),
                  "--out", (dir / "out" / "report.json").string()}),
             0, "eval " + run);
    }
    const auto a = tmp.path() / "a", b = tmp.path() / "b";
    c.truth(tree_bytes(a / "corpus") == tree_bytes(b / "corpus"), "generated corpora differ");
    const auto out_a = tree_bytes(a / "out"), out_b = tree_bytes(b / "out");
    c.eq(out_a.size(), 6u, "output file count");
    c.truth(out_a == out_b, "results or report files differ between runs");

    const auto p8 = tmp.path() / "p8.jsonl";
    c.eq(cli({"run", "--corpus", (a / "corpus").string(), "--out", p8.string(), "--parallelism", "8"}), 0, "run parallelism 8");
    c.truth(read_file(p8) == read_file(a / "out" / "results.jsonl"), "parallelism 1 and 8 results differ");
    c.truth(read_file(diagnostics_path(p8)) == read_file(diagnostics_path(a / "out" / "results.jsonl")),
            "parallelism 1 and 8 diagnostics differ");
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria{{1, "metrics fixture fidelity", table_fixtures},
                                          {2, "worked-example unit suite", worked_examples},
                                          {3, "oracle end-to-end, clean corpus", clean_oracle},
                                          {4, "oracle end-to-end, noisy corpus", noisy_oracle},
                                          {5, "property suites runnable standalone", property_suites},
                                          {6, "determinism", determinism}};
    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.truth(false, std::string("exception: ") + e.what());
        }
        const bool ok = c.failures().empty();
        failed += !ok;
        std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", cr.id, cr.name.c_str(), seconds_since(t0));
        for (const auto& n : c.notes()) std::printf("    %s\n", n.c_str());
        for (const auto& f : c.failures()) std::printf("    - %s\n", f.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
