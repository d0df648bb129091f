#include <gtest/gtest.h>

#include "nodulelink/batch.hpp"
#include "nodulelink/pipeline.hpp"

using namespace nodulelink;

namespace {

ImageSpec frame(std::string id, std::string banner, int calipers, std::optional<std::string> measures = std::nullopt) {
    ImageSpec s;
    s.image_id = std::move(id);
    s.banner_text = std::move(banner);
    s.measurement_text = std::move(measures);
    s.texture_seed = fnv1a(s.image_id);
    const std::vector<Point> all{{150, 150}, {300, 150}, {225, 100}, {225, 200}, {450, 300}};
    s.calipers.assign(all.begin(), all.begin() + calipers);
    return s;
}

NoduleTruth nodule(Laterality l, std::optional<std::string> loc, std::string label, std::array<double, 3> dims = {1.6, 0.7, 1.1}) {
    NoduleTruth n;
    n.nodule_id = "n" + label.substr(1);
    n.laterality = l;
    n.location = std::move(loc);
    n.label = std::move(label);
    n.diagnosis = Diagnosis::benign;
    n.dims_cm = dims;
    return n;
}

CaseSpec base_case(std::vector<NoduleTruth> nodules) {
    CaseSpec c;
    c.case_id = "case0001";
    c.site = "Site1";
    c.pathology_date = Date(2020, 6, 1);
    c.nodules = std::move(nodules);
    c.lobes = {{Laterality::right, {4.2, 2.1, 2.1}}, {Laterality::left, {4.0, 2.0, 2.0}}};
    return c;
}

StudySpec fna(std::vector<ImageSpec> images) { return {"fna1", StudyKind::fna, Date(2020, 5, 30), std::move(images)}; }
StudySpec diagnostic(std::vector<ImageSpec> images) {
    return {"diag1", StudyKind::diagnostic, Date(2020, 5, 20), std::move(images)};
}

CaseResult run(const CaseSpec& c) { return run_case(inputs_from_spec(c)); }

void expect_yield(const NoduleOutcome& o, FinalizationPoint at, const std::string& a, const std::string& b) {
    ASSERT_TRUE(o.yielded);
    EXPECT_EQ(o.finalized_at, at);
    EXPECT_EQ(o.images->first.image_id, a);
    EXPECT_EQ(o.images->second.image_id, b);
    EXPECT_FALSE(o.no_yield_reason);
}

void expect_no_yield(const NoduleOutcome& o, NoYieldReason why) {
    EXPECT_FALSE(o.yielded);
    EXPECT_FALSE(o.images);
    EXPECT_FALSE(o.finalized_at);
    EXPECT_EQ(o.no_yield_reason, why);
}

}  // namespace

TEST(Pipeline, StageOneModuleThree) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {fna({frame("fna1_01", "", 2), frame("fna1_02", "", 0), frame("fna1_03", "", 2)})};
    const auto r = run(c);
    ASSERT_EQ(r.per_nodule.size(), 1u);
    expect_yield(r.per_nodule[0], {1, 3}, "fna1_01", "fna1_03");
}

TEST(Pipeline, NoStudyInWindow) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {{"fna1", StudyKind::fna, Date(2019, 1, 1), {frame("fna1_01", "", 2), frame("fna1_02", "", 2)}}};
    expect_no_yield(run(c).per_nodule.at(0), NoYieldReason::no_study_in_window);
}

TEST(Pipeline, StageOneModuleFour) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {fna({frame("fna1_01", "TRANS RT MID #1", 4), frame("fna1_02", "TRANS LT #2", 2),
                      frame("fna1_03", "SAG RT MID #1", 2)})};
    const auto r = run(c);
    expect_yield(r.per_nodule.at(0), {1, 4}, "fna1_01", "fna1_03");
    EXPECT_TRUE(r.diagnostics.empty());
}

TEST(Pipeline, StageOneTwoNodulesFourImages) {
    auto c = base_case({nodule(Laterality::right, std::nullopt, "#1"), nodule(Laterality::left, std::nullopt, "#2")});
    c.studies = {fna({frame("fna1_01", "TRANS RT #1", 4), frame("fna1_02", "SAG RT #1", 2), frame("fna1_03", "TRANS LT #2", 4),
                      frame("fna1_04", "SAG LT #2", 2)})};
    const auto r = run(c);
    ASSERT_EQ(r.per_nodule.size(), 2u);
    expect_yield(r.per_nodule[0], {1, 4}, "fna1_01", "fna1_02");
    expect_yield(r.per_nodule[1], {1, 4}, "fna1_03", "fna1_04");
}

TEST(Pipeline, StageOneUnderflowWithoutDiagnosticKeepsReason) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {fna({frame("fna1_01", "TRANS RT MID #1", 2), frame("fna1_02", "", 0)})};
    expect_no_yield(run(c).per_nodule.at(0), NoYieldReason::caliper_underflow);
}

TEST(Pipeline, StageTwoModuleFour) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {diagnostic({frame("diag1_01", "TRANS LT", 4), frame("diag1_02", "TRANS RT MID #1", 4),
                             frame("diag1_03", "SAG LT", 2), frame("diag1_04", "SAG RT MID #1", 2),
                             frame("diag1_05", "TRANS RT MID #1", 0)})};
    expect_yield(run(c).per_nodule.at(0), {2, 4}, "diag1_02", "diag1_04");
}

TEST(Pipeline, StageOneMismatchFallsThroughToStageTwo) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {fna({frame("fna1_01", "", 2), frame("fna1_02", "", 2), frame("fna1_03", "", 2)}),
                 diagnostic({frame("diag1_01", "TRANS RT MID #1", 4), frame("diag1_02", "SAG RT MID #1", 2)})};
    expect_yield(run(c).per_nodule.at(0), {2, 4}, "diag1_01", "diag1_02");
}

TEST(Pipeline, StageTwoOcrMismatch) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {diagnostic({frame("diag1_01", "TRANS LT", 4), frame("diag1_02", "TRANS RT MID #1", 4)})};
    expect_no_yield(run(c).per_nodule.at(0), NoYieldReason::ocr_mismatch);
}

TEST(Pipeline, ModuleFiveMeasurementMatch) {
    auto c = base_case({nodule(Laterality::right, std::nullopt, "#1")});
    c.studies = {diagnostic({frame("diag1_01", "TRANS RT", 4, "D1 1.63CM D2 0.71CM"), frame("diag1_02", "SAG RT", 2, "D1 1.12CM"),
                             frame("diag1_03", "TRANS RT", 2, "D1 2.40CM")})};
    expect_yield(run(c).per_nodule.at(0), {2, 5}, "diag1_01", "diag1_02");
}

TEST(Pipeline, ModuleFiveMultipleSideNodules) {
    auto c = base_case({nodule(Laterality::right, std::nullopt, "#1")});
    c.incidental_nodules.push_back({Laterality::right, "#2", {2.4, 1.0, 1.0}});
    c.studies = {diagnostic({frame("diag1_01", "TRANS RT", 4, "D1 1.63CM D2 0.71CM"), frame("diag1_02", "SAG RT", 2, "D1 1.12CM"),
                             frame("diag1_03", "TRANS RT", 2, "D1 2.40CM")})};
    expect_no_yield(run(c).per_nodule.at(0), NoYieldReason::multiple_side_nodules);
}

TEST(Pipeline, ModuleFiveTooManyMeasurementMatches) {
    auto c = base_case({nodule(Laterality::right, std::nullopt, "#1")});
    c.studies = {diagnostic({frame("diag1_01", "TRANS RT", 4, "D1 1.63CM D2 0.71CM"), frame("diag1_02", "SAG RT", 2, "D1 1.12CM"),
                             frame("diag1_03", "TRANS RT", 2, "D1 1.60CM")})};
    expect_no_yield(run(c).per_nodule.at(0), NoYieldReason::measurement_ambiguous);
}

TEST(Pipeline, ModuleFiveReportProblems) {
    const NoduleRecord n{Laterality::right, std::nullopt, std::string("#1"), Diagnosis::benign, {0, 0}};
    ImageProvider none = [](const ImageRef&) -> Raster { throw IoError("unused"); };
    detail::FrameCache cache(none);
    Diagnostics diag;
    const std::vector<ImageRef> matched{{"d", "a"}, {"d", "b"}, {"d", "c"}};
    expect_no_yield(module5(n, matched, std::nullopt, cache, PipelineConfig{}, diag), NoYieldReason::measurement_ambiguous);
    expect_no_yield(module5(n, matched, std::string("Impression: fine."), cache, PipelineConfig{}, diag),
                    NoYieldReason::report_parse_failure);
}

TEST(Pipeline, MissingPathologyIsError) {
    CaseInputs in;
    in.case_id = "x";
    in.pathology_text = "  \n";
    EXPECT_THROW(run_case(in), ValidationError);
}

TEST(Pipeline, UndecodableImageIsNotedAndSkipped) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1")});
    c.studies = {fna({frame("fna1_01", "", 2), frame("fna1_02", "", 2)})};
    auto in = inputs_from_spec(c);
    in.studies.front().image_ids.push_back("missing");
    const auto r = run_case(in);
    expect_yield(r.per_nodule.at(0), {1, 3}, "fna1_01", "fna1_02");
    ASSERT_FALSE(r.diagnostics.empty());
}

TEST(Pipeline, ResultJsonRoundTrip) {
    auto c = base_case({nodule(Laterality::right, "mid", "#1"), nodule(Laterality::left, std::nullopt, "#2")});
    c.studies = {fna({frame("fna1_01", "TRANS RT MID #1", 2), frame("fna1_02", "SAG RT MID #1", 2), frame("fna1_03", "", 2)})};
    const auto r = run(c);
    const auto text = results_jsonl({r});
    const auto back = parse_results(text);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(results_jsonl(back), text);
    EXPECT_TRUE(back[0].per_nodule[0].yielded);
    EXPECT_FALSE(back[0].per_nodule[1].yielded);
}

TEST(Pipeline, InconsistentOutcomeJsonRejected) {
    EXPECT_THROW(parse_results(R"({"case_id":"a","per_nodule":[{"nodule":{"laterality":"right","location":null,"label":null,"diagnosis":"benign","source_span":[0,0]},"status":"yield","images":null,"label":"benign","finalized_at":null,"no_yield_reason":null}]})"),
                 ValidationError);
}

TEST(MatchBanner, LenientOnAbsence) {
    NoduleRecord n;
    n.laterality = Laterality::right;
    n.location = "mid";
    n.label = "#1";
    EXPECT_TRUE(match_banner_to_nodule(parse_banner("TRANS RT MID #1"), n));
    n.location = "inferior";
    EXPECT_TRUE(match_banner_to_nodule(parse_banner("TRANS RT"), n));
    n.location = "mid";
    EXPECT_FALSE(match_banner_to_nodule(parse_banner("TRANS LT MID #1"), n));
    EXPECT_FALSE(match_banner_to_nodule(parse_banner("TRANS RT MID #2"), n));
    EXPECT_FALSE(match_banner_to_nodule(parse_banner(""), n));
}

TEST(MatchMeasurementSet, Examples) {
    EXPECT_TRUE(match_measurements(MeasurementSet{{1.6, 0.7}}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_FALSE(match_measurements(MeasurementSet{}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_FALSE(match_measurements(MeasurementSet{{2.4}}, {1.6, 0.7, 1.1}, 0.05));
}
