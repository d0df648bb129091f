#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nodulelink/metrics.hpp"

namespace nodulelink::testing {

inline std::filesystem::path data_dir() { return NODULELINK_TEST_DATA_DIR; }

inline std::string fixture(const std::string& name) { return read_file(data_dir() / name); }

/// Scratch directory under the system temp dir, emptied on construction and removed on exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("nodulelink_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Outcome counts for one (site, finalization point) cell of a synthetic evaluation.
struct FixtureCell {
    std::string site;
    FinalizationPoint point;
    int correct = 0;
    int wrong = 0;
};

struct Fixture {
    CorpusManifest manifest;
    std::vector<CaseResult> results;
};

/// One single-nodule case per truth nodule. Correct yields return the key pair, wrong
/// yields return a different image, and the remaining truth nodules do not yield.
inline Fixture make_fixture(const std::map<std::string, int>& truth_by_site, const std::vector<FixtureCell>& cells) {
    Fixture f;
    int serial = 0;
    auto add_case = [&](const std::string& site) -> std::pair<CaseSpec*, CaseResult*> {
        ++serial;
        char id[16];
        std::snprintf(id, sizeof id, "fx%05d", serial);
        CaseSpec c;
        c.case_id = id;
        c.site = site;
        c.pathology_date = Date(2020, 1, 1);
        NoduleTruth n;
        n.nodule_id = std::string(id) + "_n1";
        n.laterality = Laterality::right;
        n.label = "#1";
        n.diagnosis = Diagnosis::benign;
        n.key_images = {"fna1", "fna1_01", "fna1_02"};
        c.nodules.push_back(n);
        f.manifest.cases.push_back(c);
        CaseResult r;
        r.case_id = id;
        f.results.push_back(r);
        return {&f.manifest.cases.back(), &f.results.back()};
    };
    auto record_of = [](const NoduleTruth& n) {
        NoduleRecord r;
        r.laterality = n.laterality;
        r.location = n.location;
        r.label = n.label;
        r.diagnosis = n.diagnosis;
        return r;
    };

    std::map<std::string, int> used;
    f.manifest.cases.reserve(4096);
    f.results.reserve(4096);
    for (const auto& cell : cells) {
        for (int k = 0; k < cell.correct + cell.wrong; ++k) {
            auto [c, r] = add_case(cell.site);
            const auto& n = c->nodules.front();
            const ImageRef other{"fna1", k < cell.correct ? "fna1_02" : "fna1_03"};
            r->per_nodule.push_back(NoduleOutcome::yield(record_of(n), {"fna1", "fna1_01"}, other, cell.point));
            ++used[cell.site];
        }
    }
    for (const auto& [site, truth] : truth_by_site) {
        for (int k = used[site]; k < truth; ++k) {
            auto [c, r] = add_case(site);
            r->per_nodule.push_back(NoduleOutcome::no_yield(record_of(c->nodules.front()), NoYieldReason::ocr_mismatch));
        }
    }
    return f;
}

/// Counts matching the reference per-site and per-stage tables: 103/70/20/13 truth
/// nodules, 65/50/11/4 yields and 54/45/5/4 correct, with cumulative per-point yields of
/// 21/51/59/65 and corrects of 20/44/51/54.
inline Fixture reference_counts_fixture(int site2_correct_at_stage2_m4 = 2) {
    const std::map<std::string, int> truth{{"Site1", 70}, {"Site2", 20}, {"Site3", 13}};
    const std::vector<FixtureCell> cells{
        {"Site1", {1, 3}, 18, 0}, {"Site1", {1, 4}, 19, 5}, {"Site1", {2, 4}, 5, 0}, {"Site1", {2, 5}, 3, 0},
        {"Site2", {1, 3}, 0, 1},  {"Site2", {1, 4}, 3, 1},  {"Site2", {2, 4}, site2_correct_at_stage2_m4, 1},
        {"Site2", {2, 5}, 0, 3},  {"Site3", {1, 3}, 2, 0},  {"Site3", {1, 4}, 2, 0}};
    return make_fixture(truth, cells);
}

}  // namespace nodulelink::testing
